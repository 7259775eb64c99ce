import pytest

CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""

    def record(num: int, ok: bool, detail: str) -> None:
        CRITERIA[num] = (bool(ok), detail)
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        ok, detail = CRITERIA[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
