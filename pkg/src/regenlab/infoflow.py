"""Information flow graphs and their min-cuts.

Each storage node version is an ``in -> out`` pair joined by an edge of
capacity ``alpha``. The source feeds the initial nodes, a data collector drains
the chosen k nodes, and the max-flow between them bounds what that collector
can decode.

Two encodings of a tree repair are offered. ``relay`` (the default) gives
every provider a relay vertex that reads ``own`` blocks from the provider's
storage, merges its children's relays and forwards ``flow`` blocks; this is
exactly what the coded pipeline does. ``direct`` draws the provider-to-provider
links straight between storage out-vertices, which is the classic drawing but
lets relayed data also appear to pass through the relay's own storage.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .codec import select_subsets
from .history import InvalidHistory, RepairEvent, RepairHistory
from .region import FeasibleRegion

ABS_TOL = 1e-6


class MaxFlow:
    """Dinic's algorithm on float capacities."""

    def __init__(self, n: int):
        self.n = n
        self.head = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, u: int, v: int, c: float) -> None:
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(float(c))
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0.0)

    def _bfs(self, s, t, eps):
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.head[u]:
                v = self.to[e]
                if level[v] < 0 and self.cap[e] > eps:
                    level[v] = level[u] + 1
                    q.append(v)
        return level

    def max_flow(self, s: int, t: int, eps: float = 1e-12) -> float:
        total = 0.0
        while True:
            level = self._bfs(s, t, eps)
            if level[t] < 0:
                return total
            it = [0] * self.n
            while True:
                pushed = self._dfs(s, t, math.inf, level, it, eps)
                if pushed <= eps:
                    break
                total += pushed

    def _dfs(self, s, t, limit, level, it, eps):
        # iterative augmenting-path search in the level graph
        path: list[int] = []
        u = s
        while True:
            if u == t:
                f = min(self.cap[e] for e in path) if path else limit
                f = min(f, limit)
                for e in path:
                    self.cap[e] -= f
                    self.cap[e ^ 1] += f
                return f
            advanced = False
            while it[u] < len(self.head[u]):
                e = self.head[u][it[u]]
                v = self.to[e]
                if self.cap[e] > eps and level[v] == level[u] + 1:
                    path.append(e)
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                if u == s:
                    return 0.0
                level[u] = -1
                e = path.pop()
                u = self.to[e ^ 1]
                it[u] += 1


@dataclass
class InfoFlowGraph:
    n: int
    alpha: float
    style: str = "relay"
    labels: list[str] = field(default_factory=list)
    edges: list[tuple[int, int, float]] = field(default_factory=list)
    current: list[int] = field(default_factory=list)
    versions: list[int] = field(default_factory=list)

    SOURCE = 0

    def __post_init__(self):
        if self.style not in ("relay", "direct"):
            raise ValueError("style must be 'relay' or 'direct'")
        if not self.labels:
            self.labels = ["s"]
            self.current = []
            self.versions = [0] * self.n
            for i in range(self.n):
                vin = self._vertex(f"v{i}.0_in")
                vout = self._vertex(f"v{i}.0_out")
                self.edges.append((self.SOURCE, vin, math.inf))
                self.edges.append((vin, vout, self.alpha))
                self.current.append(vout)

    def _vertex(self, label: str) -> int:
        self.labels.append(label)
        return len(self.labels) - 1

    @property
    def num_vertices(self) -> int:
        return len(self.labels)

    def out_vertex(self, node: int) -> int:
        return self.current[node]

    def apply(self, ev: RepairEvent) -> None:
        if not 0 <= ev.failed < self.n or any(not 0 <= p < self.n for p in ev.providers):
            raise InvalidHistory("event references a node outside the system")
        ver = self.versions[ev.failed] + 1
        vin = self._vertex(f"v{ev.failed}.{ver}_in")
        vout = self._vertex(f"v{ev.failed}.{ver}_out")
        outs = [self.current[p] for p in ev.providers]
        if self.style == "relay":
            relay = [self._vertex(f"r{ev.failed}.{ver}/v{p}") for p in ev.providers]
            for j in range(ev.d):
                self.edges.append((outs[j], relay[j], ev.own[j]))
                dst = vin if ev.parent[j] < 0 else relay[ev.parent[j]]
                self.edges.append((relay[j], dst, ev.flow[j]))
        else:
            for j in range(ev.d):
                dst = vin if ev.parent[j] < 0 else outs[ev.parent[j]]
                self.edges.append((outs[j], dst, ev.flow[j]))
        self.edges.append((vin, vout, self.alpha))
        self.versions[ev.failed] = ver
        self.current[ev.failed] = vout

    def finite_total(self) -> float:
        return sum(c for *_, c in self.edges if math.isfinite(c))

    def min_cut(self, collector) -> float:
        nodes = list(collector)
        if len(set(nodes)) != len(nodes):
            raise ValueError("collector nodes must be distinct")
        big = self.finite_total() + 1.0
        sink = self.num_vertices
        mf = MaxFlow(sink + 1)
        for u, v, c in self.edges:
            mf.add_edge(u, v, big if math.isinf(c) else c)
        for node in nodes:
            mf.add_edge(self.current[node], sink, big)
        return mf.max_flow(self.SOURCE, sink)

    def to_edge_list(self) -> str:
        big = self.finite_total() + 1.0
        lines = []
        for u, v, c in self.edges:
            cap = big if math.isinf(c) else c
            lines.append(f"{self.labels[u]} {self.labels[v]} {cap:g}")
        return "\n".join(lines) + "\n"


def build_graph(n: int, history, alpha: float, style: str = "relay") -> InfoFlowGraph:
    events = history.events if isinstance(history, RepairHistory) else list(history)
    g = InfoFlowGraph(n, alpha, style)
    for ev in events:
        g.apply(ev)
    return g


def min_cut(graph: InfoFlowGraph, collector) -> float:
    return graph.min_cut(collector)


def min_cut_condition(region: FeasibleRegion, alpha: float, k: int, d: int, M: float) -> bool:
    if region.k != k or region.d != d:
        raise ValueError("region shape does not match (k, d)")
    total = sum(min(x, alpha) for x in region.x)
    return total >= M - ABS_TOL


@dataclass
class CutReport:
    ok: bool
    worst_cut: float
    worst_subset: tuple[int, ...]
    failing: list[tuple[int, ...]]
    cuts: dict


def verify_scheme_min_cut(graph: InfoFlowGraph, k: int, M: float, mode: str = "exhaustive", count: int = 200, rng=None) -> CutReport:
    subsets = select_subsets(graph.n, k, None if mode == "exhaustive" else count, rng)
    cuts = {s: graph.min_cut(s) for s in subsets}
    worst = min(cuts, key=lambda s: (cuts[s], s))
    failing = [s for s in subsets if cuts[s] < M - ABS_TOL]
    return CutReport(not failing, cuts[worst], worst, failing, cuts)
