import json
import subprocess
import sys

import pytest

from regenlab.cli import EXIT_IO, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main
from regenlab.topologies import Scenario, fig1, fig1_network


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(p)


def test_demo_text(capsys):
    assert main(["demo", "fig1"]) == EXIT_OK
    out = capsys.readouterr().out
    for v in ("8.00", "3.00", "4.00", "2.67"):
        assert v in out
    assert "MISMATCH" not in out


def test_demo_json(capsys):
    assert main(["demo", "fig1", "--json"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["match"]
    assert rep["schemes"]["FTR"]["time"] == pytest.approx(8 / 3, abs=1e-2)
    assert rep["schemes"]["TR"]["flows"][0] == 160


def test_demo_tampered_topology_mismatches(capsys):
    s = fig1()
    bad = Scenario(s.name, fig1_network().with_capacity(4, 0, 5.0).with_capacity(0, 4, 5.0),
                   s.n, s.k, s.d, s.M, s.alpha, s.beta)
    assert main(["demo", "fig1"], scenario=bad) == EXIT_MISMATCH
    assert "MISMATCH" in capsys.readouterr().out


def test_verify_rctree_reports_expected_violation(capsys):
    assert main(["verify", "rctree", "--config", "fig1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "{v0, v3}" in out
    line = [ln for ln in out.splitlines() if ln.strip().startswith("1 ")][0]
    assert "FAIL" in line


def test_verify_ftr_fig1(capsys):
    assert main(["verify", "ftr", "--config", "fig1"]) == EXIT_OK
    assert "all rounds ok" in capsys.readouterr().out


def test_verify_ftr_twenty_rounds(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", dict(n=10, k=4, d=7, M=32, mode="coded", subsets=None, trials=1))
    assert main(["verify", "ftr", "--config", cfg, "--rounds", "20", "--seed", "5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "all rounds ok" in out and "FAIL" not in out


def test_verify_exit_2_on_violation(tmp_path, monkeypatch, capsys):
    from regenlab import sim

    orig = sim.coded_event

    def lossy(net, p, scheme, failed, providers, sigma_scope="all"):
        return orig(net, p, "RCTREE", failed, providers, sigma_scope)

    monkeypatch.setattr(sim, "coded_event", lossy)
    assert main(["verify", "tr", "--config", "fig1"]) == EXIT_VERIFY


@pytest.mark.parametrize("argv", [
    ["demo", "fig2"],
    ["verify", "nope", "--config", "fig1"],
    ["verify", "ftr"],
    ["experiment", "d", "--config", "fig1"],
    [],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_malformed_config(tmp_path, capsys):
    assert main(["verify", "ftr", "--config", write(tmp_path, "bad.json", "{not json")]) == EXIT_USAGE
    assert main(["verify", "ftr", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["verify", "ftr", "--config", write(tmp_path, "keys.json", {"colour": 1})]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_experiment_zero_trials(tmp_path):
    cfg = write(tmp_path, "z.json", dict(n=8, k=3, d=5, trials=0))
    assert main(["experiment", "d", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_experiment_writes_csv_deterministically(tmp_path, capsys):
    cfg = write(tmp_path, "e.json", dict(n=8, k=3, M=120, d=5, d_range=[5, 6], trials=5))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["experiment", "d", "--config", cfg, "--out", str(out1), "--seed", "9"]) == EXIT_OK
    assert main(["experiment", "d", "--config", cfg, "--out", str(out2), "--seed", "9", "--threads", "1"]) == EXIT_OK
    a = (out1 / "d_sweep.csv").read_bytes()
    assert a == (out2 / "d_sweep.csv").read_bytes()
    assert a.startswith(b"d,scheme,trials,mean_time_s")
    assert json.loads((out1 / "d_sweep.config.json").read_text())["seed"] == 9


def test_experiment_mode_mismatch(tmp_path):
    cfg = write(tmp_path, "e.json", dict(n=8, k=3, M=120, d=5, trials=2))
    assert main(["experiment", "rounds", "--config", cfg, "--out", str(tmp_path)]) == EXIT_USAGE


def test_experiment_rounds(tmp_path):
    cfg = write(tmp_path, "r.json", dict(n=6, k=3, d=4, M=18, mode="coded", trials=2, rounds=2,
                                         subsets=None, schemes=["FR", "RCTREE"]))
    assert main(["experiment", "rounds", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    assert (tmp_path / "o" / "rounds_sweep.csv").read_text().startswith("round,scheme")


def test_experiment_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = write(tmp_path, "e.json", dict(n=8, k=3, M=120, d=5, trials=2))
    assert main(["experiment", "d", "--config", cfg, "--out", str(blocker / "sub")]) == EXIT_IO


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "regenlab", "demo", "fig1"], capture_output=True, text=True)
    assert res.returncode == 0 and "2.67" in res.stdout
