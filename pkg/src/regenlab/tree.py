"""Overlay networks, regeneration trees and tree-structured repair with
constant per-provider traffic.

Node 0 is always the newcomer; providers are 1..d. A tree is stored as a
parent array with ``parent[0] == -1``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

BRUTE_FORCE_MAX_D = 7


class UnusableEdge(ValueError):
    pass


class TooLarge(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class OverlayNetwork:
    """Complete digraph on the newcomer and ``d`` providers.

    ``cap[u, v]`` is the capacity (Mbps) of the link from ``u`` to ``v``; zero
    marks an unusable link.
    """

    cap: np.ndarray

    def __post_init__(self):
        cap = np.array(self.cap, dtype=float)
        if cap.ndim != 2 or cap.shape[0] != cap.shape[1] or cap.shape[0] < 2:
            raise ValueError("capacity matrix must be square with at least 2 nodes")
        if np.any(cap < 0) or np.any(np.isnan(cap)):
            raise ValueError("capacities must be non-negative")
        np.fill_diagonal(cap, 0.0)
        cap.setflags(write=False)
        object.__setattr__(self, "cap", cap)

    @property
    def d(self) -> int:
        return self.cap.shape[0] - 1

    @property
    def direct(self) -> np.ndarray:
        """Provider-to-newcomer capacities c(v_i, v_0), i = 1..d."""
        return self.cap[1:, 0]

    def scaled(self, factor: float) -> "OverlayNetwork":
        return OverlayNetwork(self.cap * factor)

    def with_capacity(self, u: int, v: int, value: float) -> "OverlayNetwork":
        cap = self.cap.copy()
        cap[u, v] = value
        return OverlayNetwork(cap)

    def to_text(self) -> str:
        lines = [str(self.d + 1)]
        for row in self.cap:
            lines.append(" ".join(f"{x:.17g}" for x in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "OverlayNetwork":
        rows = [ln.split() for ln in text.strip().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows:
            raise ValueError("empty topology")
        size = int(rows[0][0])
        body = rows[1:]
        if len(body) != size or any(len(r) != size for r in body):
            raise ValueError(f"expected a {size}x{size} capacity matrix")
        return cls(np.array([[float(x) for x in r] for r in body]))

    @classmethod
    def symmetric(cls, direct, inter=None, default: float = 0.0) -> "OverlayNetwork":
        """Build from provider-to-newcomer capacities plus a dict of
        undirected inter-provider links ``{(u, v): c}``."""
        d = len(direct)
        cap = np.full((d + 1, d + 1), float(default))
        cap[1:, 0] = direct
        cap[0, 1:] = direct
        for (u, v), c in (inter or {}).items():
            cap[u, v] = cap[v, u] = c
        return cls(cap)


@dataclass(frozen=True)
class RegenerationTree:
    parent: tuple[int, ...]

    def __post_init__(self):
        p = tuple(int(x) for x in self.parent)
        object.__setattr__(self, "parent", p)
        n = len(p)
        if n < 2 or p[0] != -1:
            raise ValueError("parent[0] must be -1 (newcomer is the root)")
        for u in range(1, n):
            if not 0 <= p[u] < n or p[u] == u:
                raise ValueError(f"bad parent {p[u]} for node {u}")
        for u in range(1, n):
            seen = set()
            w = u
            while w != 0:
                if w in seen:
                    raise ValueError(f"cycle through node {u}")
                seen.add(w)
                w = p[w]

    @classmethod
    def star(cls, d: int) -> "RegenerationTree":
        return cls((-1,) + (0,) * d)

    @property
    def d(self) -> int:
        return len(self.parent) - 1

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        ch: list[list[int]] = [[] for _ in self.parent]
        for u in range(1, len(self.parent)):
            ch[self.parent[u]].append(u)
        return tuple(tuple(c) for c in ch)

    @cached_property
    def postorder(self) -> tuple[int, ...]:
        """Providers ordered so that every node comes after its children."""
        out: list[int] = []
        stack = [(0, False)]
        while stack:
            u, done = stack.pop()
            if done:
                if u:
                    out.append(u)
                continue
            stack.append((u, True))
            for c in reversed(self.children[u]):
                stack.append((c, False))
        return tuple(out)

    @cached_property
    def sizes(self) -> np.ndarray:
        """m_u: number of nodes in the subtree rooted at u (index 0 unused)."""
        m = np.ones(len(self.parent), dtype=np.int64)
        for u in self.postorder:
            if self.parent[u] > 0:
                m[self.parent[u]] += m[u]
        m[0] = len(self.parent)
        return m

    def subtree(self, u: int) -> frozenset[int]:
        out = {u}
        stack = list(self.children[u])
        while stack:
            w = stack.pop()
            out.add(w)
            stack.extend(self.children[w])
        return frozenset(out)

    def path_to_root(self, u: int) -> list[int]:
        """Nodes whose parent edge lies on the u -> newcomer path (u included)."""
        out = []
        while u != 0:
            out.append(u)
            u = self.parent[u]
        return out

    def edges(self) -> list[tuple[int, int]]:
        return [(u, self.parent[u]) for u in range(1, len(self.parent))]

    def is_star(self) -> bool:
        return all(p == 0 for p in self.parent[1:])


def tr_flows(tree: RegenerationTree, beta: float, alpha: float) -> np.ndarray:
    """Blocks on each provider's uplink: min(m_u * beta, alpha). Index 0 unused."""
    f = np.minimum(tree.sizes * float(beta), float(alpha))
    f[0] = 0.0
    return f


def constant_flows(tree: RegenerationTree, beta: float) -> np.ndarray:
    """RCTREE flow model: every tree edge carries beta."""
    f = np.full(len(tree.parent), float(beta))
    f[0] = 0.0
    return f


def regen_time(tree: RegenerationTree, flows, net: OverlayNetwork) -> float:
    worst = 0.0
    for u, v in tree.edges():
        c = net.cap[u, v]
        if c <= 0:
            raise UnusableEdge(f"tree edge ({u}, {v}) has zero capacity")
        worst = max(worst, flows[u] / c)
    return worst


def tree_time(net: OverlayNetwork, tree: RegenerationTree, alpha: float, beta: float) -> float:
    """TR regeneration time, ``inf`` when the tree uses an unusable link."""
    try:
        return regen_time(tree, tr_flows(tree, beta, alpha), net)
    except UnusableEdge:
        return math.inf


def _edge_time(flow: float, c: float) -> float:
    if flow <= 0:
        return 0.0
    return flow / c if c > 0 else math.inf


def greedy_tree(net: OverlayNetwork, alpha: float, beta: float) -> RegenerationTree:
    """Greedy best-position insertion of providers into a tree rooted at v_0.

    Each round evaluates every (remaining provider, tree node) attachment and
    commits the one whose partial tree has the smallest regeneration time;
    ties go to the lowest provider id, then the lowest attachment id.
    """
    d = net.d
    cap = net.cap
    parent = [-1] + [None] * d
    size = [0] * (d + 1)
    in_tree = [0]
    remaining = list(range(1, d + 1))

    def flow(m):
        return min(m * beta, alpha)

    while remaining:
        # times of current edges, and for every attach point u the worst time
        # along u's root path once its subtree grows by one
        edge_t = {w: _edge_time(flow(size[w]), cap[w, parent[w]]) for w in in_tree if w}
        best = (math.inf, None, None)
        for u in in_tree:
            path = []
            w = u
            while w != 0:
                path.append(w)
                w = parent[w]
            on_path = set(path)
            grown = max((_edge_time(flow(size[w] + 1), cap[w, parent[w]]) for w in path), default=0.0)
            rest = max((t for w, t in edge_t.items() if w not in on_path), default=0.0)
            base = max(grown, rest)
            for v in remaining:
                t = max(base, _edge_time(flow(1), cap[v, u]))
                key = (t, v, u)
                if best[1] is None or t < best[0] or (t == best[0] and (v, u) < (best[1], best[2])):
                    best = key
        _, v, u = best
        parent[v] = u
        size[v] = 1
        w = u
        while w != 0:
            size[w] += 1
            w = parent[w]
        in_tree.append(v)
        remaining.remove(v)
    return RegenerationTree(tuple(parent))


def rctree_tree(net: OverlayNetwork, beta: float, k: int) -> RegenerationTree:
    """Tree used for the RCTREE baseline.

    Insertion as in :func:`greedy_tree` but every edge carries ``beta`` and the
    newcomer keeps at least ``d-k+1`` direct children.
    """
    d = net.d
    cap = net.cap
    parent = [-1] + [None] * d
    in_tree = [0]
    remaining = list(range(1, d + 1))
    relayed = 0
    current = 0.0
    while remaining:
        best = None
        for u in in_tree:
            if u != 0 and relayed >= k - 1:
                continue
            for v in remaining:
                t = max(current, _edge_time(beta, cap[v, u]))
                if best is None or t < best[0] or (t == best[0] and (v, u) < (best[1], best[2])):
                    best = (t, v, u)
        current, v, u = best
        parent[v] = u
        relayed += u != 0
        in_tree.append(v)
        remaining.remove(v)
    return RegenerationTree(tuple(parent))


# exhaustive search ---------------------------------------------------------


@lru_cache(maxsize=None)
def _all_rooted_trees(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Parent and subtree-size arrays (T x d, columns = providers 1..d) of every
    labelled tree on d+1 nodes rooted at node 0, in lexicographic parent order."""
    n = d + 1
    if n == 2:
        return np.zeros((1, 1), dtype=np.int64), np.ones((1, 1), dtype=np.int64)
    seqs = np.array(list(itertools.product(range(n), repeat=n - 2)), dtype=np.int64)
    T = seqs.shape[0]
    rows = np.arange(T)
    degree = np.ones((T, n), dtype=np.int64)
    np.add.at(degree, (np.repeat(rows, n - 2), seqs.ravel()), 1)
    ea = np.empty((T, n - 1), dtype=np.int64)
    eb = np.empty((T, n - 1), dtype=np.int64)
    for i in range(n - 2):
        leaf = np.argmax(degree == 1, axis=1)
        ea[:, i] = leaf
        eb[:, i] = seqs[:, i]
        degree[rows, leaf] -= 1
        degree[rows, seqs[:, i]] -= 1
    last = np.argsort(degree != 1, axis=1, kind="stable")[:, :2]
    ea[:, -1], eb[:, -1] = last[:, 0], last[:, 1]
    # orient every edge towards node 0
    parent = np.full((T, n), -2, dtype=np.int64)
    parent[:, 0] = -1
    for _ in range(n - 1):
        pa = parent[rows[:, None], ea]
        pb = parent[rows[:, None], eb]
        a_new = (pb != -2) & (pa == -2)
        b_new = (pa != -2) & (pb == -2)
        r, c = np.nonzero(a_new)
        parent[r, ea[r, c]] = eb[r, c]
        r, c = np.nonzero(b_new)
        parent[r, eb[r, c]] = ea[r, c]
    assert (parent[:, 1:] >= 0).all()
    size = np.zeros((T, n), dtype=np.int64)
    cur = np.tile(np.arange(n), (T, 1))
    for _ in range(n):
        valid = cur >= 1
        flat = (rows[:, None] * n + cur)[valid]
        size += np.bincount(flat, minlength=T * n).reshape(T, n)
        cur = np.where(valid, parent[rows[:, None], np.maximum(cur, 0)], -1)
    P, S = parent[:, 1:], size[:, 1:]
    order = np.lexsort(P.T[::-1])
    return P[order], S[order]


def _brute_force_times(net: OverlayNetwork, alpha: float, flows_of_sizes) -> tuple[np.ndarray, np.ndarray]:
    d = net.d
    if d > BRUTE_FORCE_MAX_D:
        raise TooLarge(f"d={d} exceeds the exhaustive limit {BRUTE_FORCE_MAX_D}")
    P, S = _all_rooted_trees(d)
    c = net.cap[np.arange(1, d + 1)[None, :], P]
    f = flows_of_sizes(S)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(c > 0, f / np.where(c > 0, c, 1.0), np.where(f > 0, np.inf, 0.0))
    return P, t.max(axis=1)


def brute_force_ort(net: OverlayNetwork, alpha: float, beta: float) -> RegenerationTree:
    """Optimal regeneration tree by enumerating all (d+1)^(d-1) labelled trees."""
    P, times = _brute_force_times(net, alpha, lambda S: np.minimum(S * beta, alpha))
    best = times.min()
    idx = int(np.flatnonzero(times <= best * (1 + 1e-12))[0]) if np.isfinite(best) else 0
    return RegenerationTree((-1,) + tuple(int(x) for x in P[idx]))


def milp_ort(net: OverlayNetwork, alpha: float, beta: float) -> tuple[RegenerationTree, float]:
    """Exact ORT as a mixed-integer program (for networks past the brute-force limit).

    Each provider picks one out-arc; a unit of flow per provider routed to v_0
    makes the flow on an arc equal to the size of the subtree behind it.
    Returns ``(tree, time)``; time is ``inf`` if no tree avoids zero links.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp

    d = net.d
    arcs = [(u, v) for u in range(1, d + 1) for v in range(d + 1) if v != u and net.cap[u, v] > 0]
    for u in range(1, d + 1):
        if not any(a[0] == u for a in arcs):
            return RegenerationTree.star(d), math.inf
    A = len(arcs)
    capped = math.isfinite(alpha)
    # columns: x (A), y (A), z (A, only if capped), t
    nz = A if capped else 0
    nvar = 2 * A + nz + 1
    it = nvar - 1
    rows, lo, hi = [], [], []

    def row():
        r = np.zeros(nvar)
        rows.append(r)
        return r

    for u in range(1, d + 1):
        r = row()
        for a, (p, q) in enumerate(arcs):
            if p == u:
                r[a] = 1
        lo.append(1)
        hi.append(1)
        r = row()
        for a, (p, q) in enumerate(arcs):
            if p == u:
                r[A + a] += 1
            if q == u:
                r[A + a] -= 1
        lo.append(1)
        hi.append(1)
    big = beta * d
    for a, (u, v) in enumerate(arcs):
        c = net.cap[u, v]
        r = row()
        r[A + a], r[a] = 1, -d
        lo.append(-np.inf)
        hi.append(0)
        r = row()
        r[A + a], r[a] = 1, -1
        lo.append(0)
        hi.append(np.inf)
        r = row()
        r[A + a], r[it] = beta, -c
        if capped:
            r[2 * A + a] = -big
        lo.append(-np.inf)
        hi.append(0)
        if capped:
            r = row()
            r[2 * A + a], r[it] = alpha, -c
            lo.append(-np.inf)
            hi.append(0)
            r = row()
            r[2 * A + a], r[a] = 1, -1
            lo.append(-np.inf)
            hi.append(0)
    integrality = np.zeros(nvar)
    integrality[:A] = 1
    if capped:
        integrality[2 * A : 2 * A + A] = 1
    ub = np.full(nvar, np.inf)
    ub[:A] = 1
    ub[A : 2 * A] = d
    if capped:
        ub[2 * A : 3 * A] = 1
    cost = np.zeros(nvar)
    cost[it] = 1
    res = milp(
        cost,
        constraints=LinearConstraint(np.array(rows), lo, hi),
        integrality=integrality,
        bounds=Bounds(np.zeros(nvar), ub),
        options={"mip_rel_gap": 1e-9},
    )
    if res.x is None:
        return RegenerationTree.star(d), math.inf
    parent = [-1] * (d + 1)
    for a, (u, v) in enumerate(arcs):
        if res.x[a] > 0.5:
            parent[u] = v
    tree = RegenerationTree(tuple(parent))
    return tree, tree_time(net, tree, alpha, beta)


def exact_ort(net: OverlayNetwork, alpha: float, beta: float) -> tuple[RegenerationTree, float]:
    """Brute force when small enough, otherwise the MILP."""
    if net.d <= BRUTE_FORCE_MAX_D:
        tree = brute_force_ort(net, alpha, beta)
        return tree, tree_time(net, tree, alpha, beta)
    return milp_ort(net, alpha, beta)


# hardness instances --------------------------------------------------------


@dataclass(frozen=True)
class VcInstance:
    net: OverlayNetwork
    threshold: float
    root: int
    a: int
    b: int
    vertex_nodes: tuple[int, ...]
    edge_nodes: tuple[int, ...]


def vc_reduction(n_vertices: int, edges, k_cover: int) -> VcInstance:
    """Overlay network whose optimal regeneration time (unit traffic, alpha = inf)
    is at most 1 exactly when the graph has a vertex cover of size k_cover."""
    edges = [tuple(sorted(e)) for e in edges]
    if len(set(edges)) != len(edges) or any(u == v for u, v in edges):
        raise ValueError("graph must be simple")
    if any(not (0 <= u < n_vertices and 0 <= v < n_vertices) for u, v in edges):
        raise ValueError("edge endpoint out of range")
    t, a, b = 0, 1, 2
    vnodes = tuple(range(3, 3 + n_vertices))
    enodes = tuple(range(3 + n_vertices, 3 + n_vertices + len(edges)))
    size = 3 + n_vertices + len(edges)
    cap = np.zeros((size, size))
    INF = -1.0
    links = {(a, t): float(k_cover + len(edges) + 1), (b, t): INF}
    for v in vnodes:
        links[(v, a)] = INF
        links[(v, b)] = 1.0
    for e, (p, q) in zip(enodes, edges):
        links[(e, vnodes[p])] = INF
        links[(e, vnodes[q])] = INF
    for (u, v), c in links.items():
        cap[u, v] = cap[v, u] = c
    finite = cap[cap > 0].sum()
    cap[cap < 0] = finite + 1.0
    return VcInstance(OverlayNetwork(cap), 1.0, t, a, b, vnodes, enodes)


def min_vertex_cover_size(n_vertices: int, edges) -> int:
    edges = list(edges)
    for size in range(n_vertices + 1):
        for cover in itertools.combinations(range(n_vertices), size):
            s = set(cover)
            if all(u in s or v in s for u, v in edges):
                return size
    return n_vertices
