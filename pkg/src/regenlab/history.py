"""Repair events: who helps whom, and how many blocks travel on each hop.

One event describes a single regeneration. Provider ``j`` (position in
``providers``) generates ``own[j]`` blocks from its storage, merges them with
whatever its children forward, and sends ``flow[j]`` blocks to ``parent[j]``
(another provider position, or ``-1`` for the newcomer).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .region import round_up
from .tree import RegenerationTree


class InvalidHistory(ValueError):
    pass


@dataclass(frozen=True)
class RepairEvent:
    failed: int
    providers: tuple[int, ...]
    parent: tuple[int, ...]
    own: tuple[float, ...]
    flow: tuple[float, ...]
    scheme: str = ""

    def __post_init__(self):
        d = len(self.providers)
        if not (len(self.parent) == len(self.own) == len(self.flow) == d):
            raise InvalidHistory("providers, parent, own and flow must have equal length")
        if self.failed in self.providers:
            raise InvalidHistory(f"failed node {self.failed} cannot be its own provider")
        if len(set(self.providers)) != d:
            raise InvalidHistory("duplicate provider")
        if any(x < 0 for x in self.own) or any(x < 0 for x in self.flow):
            raise InvalidHistory("negative traffic")
        for j in range(d):
            seen, w = set(), j
            while w != -1:
                if w in seen or not -1 <= w < d:
                    raise InvalidHistory(f"parent pointers of provider {j} do not reach the newcomer")
                seen.add(w)
                w = self.parent[w]

    @property
    def d(self) -> int:
        return len(self.providers)

    def children(self, j: int) -> list[int]:
        return [i for i, p in enumerate(self.parent) if p == j]

    def postorder(self) -> list[int]:
        out: list[int] = []

        def visit(j):
            for c in self.children(j):
                visit(c)
            if j >= 0:
                out.append(j)

        visit(-1)
        return out

    @property
    def total_traffic(self) -> float:
        return float(sum(self.flow))


@dataclass
class RepairHistory:
    n: int
    alpha: float
    events: list[RepairEvent] = field(default_factory=list)

    def append(self, event: RepairEvent) -> None:
        for u in (event.failed, *event.providers):
            if not 0 <= u < self.n:
                raise InvalidHistory(f"node {u} out of range for n={self.n}")
        self.events.append(event)


def star_event(failed: int, providers, beta, alpha: float, scheme: str = "STAR") -> RepairEvent:
    b = np.broadcast_to(np.asarray(beta, dtype=float), (len(providers),))
    b = np.minimum(b, alpha)
    return RepairEvent(failed, tuple(providers), (-1,) * len(providers), tuple(b.tolist()), tuple(b.tolist()), scheme)


def tree_event(failed: int, providers, tree: RegenerationTree, own, flow, scheme: str = "") -> RepairEvent:
    """Map a regeneration tree over nodes 0..d (0 = newcomer) to an event.

    ``own`` and ``flow`` are indexed by tree node, entry 0 ignored.
    """
    d = tree.d
    if len(providers) != d:
        raise InvalidHistory("provider list does not match tree size")
    parent = tuple(tree.parent[j] - 1 for j in range(1, d + 1))
    return RepairEvent(
        failed,
        tuple(providers),
        parent,
        tuple(float(x) for x in own[1:]),
        tuple(float(x) for x in flow[1:]),
        scheme,
    )


def subtree_totals(tree: RegenerationTree, own) -> np.ndarray:
    s = np.array(own, dtype=float)
    s[0] = 0.0
    for u in tree.postorder:
        p = tree.parent[u]
        if p > 0:
            s[p] += s[u]
    return s


def integral_tree_traffic(tree: RegenerationTree, beta, alpha: float, constant_flow: bool = False):
    """Round per-provider traffic up to whole blocks and recompute the flows.

    Flows are ``min(subtree total, alpha)``; with ``constant_flow`` every link
    carries exactly its sender's own amount (the RCTREE accounting).
    """
    own = np.minimum(round_up(np.asarray(beta, dtype=float)), alpha).astype(float)
    own[0] = 0.0
    if constant_flow:
        return own, own.copy()
    flow = np.minimum(subtree_totals(tree, own), alpha)
    flow[0] = 0.0
    return own, flow
