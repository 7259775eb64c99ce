"""Built-in example topologies."""
from __future__ import annotations

from dataclasses import dataclass

from .tree import OverlayNetwork

# links between providers other than (v4, v1) carry this much
FIG1_OTHER_LINKS = 5.0


@dataclass(frozen=True)
class Scenario:
    name: str
    net: OverlayNetwork
    n: int
    k: int
    d: int
    M: float
    alpha: float
    beta: float
    description: str = ""


def fig1_network(other: float = FIG1_OTHER_LINKS) -> OverlayNetwork:
    """Newcomer v0 with providers v1..v4; only v4-v1 is a fast inter-provider link."""
    return OverlayNetwork.symmetric([70.0, 50.0, 20.0, 10.0], {(4, 1): 35.0}, default=other)


def fig1() -> Scenario:
    return Scenario(
        "fig1", fig1_network(), n=5, k=2, d=4, M=480.0, alpha=240.0, beta=80.0,
        description="5 nodes, (n,k)=(5,2) MSR code, 480 Mb file, one newcomer and four providers",
    )


def fig9() -> Scenario:
    s = fig1()
    return Scenario("fig9", s.net, s.n, s.k, s.d, s.M, s.alpha, s.beta, "fig1 repaired with constant per-link traffic")


def example1() -> Scenario:
    """n=5, k=3, d=4, M=12, alpha=6: the two-region comparison instance."""
    net = OverlayNetwork.symmetric([1.0, 1.0, 4.0, 4.0])
    return Scenario("example1", net, n=5, k=3, d=4, M=12.0, alpha=6.0, beta=4.0 / 3.0,
                    description="non-MSR point where two incomparable regions both satisfy the min-cut bound")


BUILTIN = {"fig1": fig1, "fig9": fig9, "example1": example1}
