"""Flexible tree-structured regeneration (FTR).

Providers generate different amounts of repair data and forward it along a
regeneration tree; an intermediate provider re-encodes once it would forward
more than ``alpha`` blocks. For a tree ``T`` and end-to-end rates ``c_u``, the
regeneration time is ``t = m * beta / sigma_1(c)`` with ``m = d - k + 1``, and
the rates must satisfy, on every tree edge ``(u, v)``::

    c(u, v) >= min(alpha * sigma_1(c) / (m * beta), sum_{x in S(u)} c_x)

Arrays indexed by node use index 0 for the newcomer (unused) and 1..d for the
providers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .region import sigmas
from .tree import OverlayNetwork, RegenerationTree, TooLarge

TOL = 1e-9
ORACLE_MAX_D = 6


class DegenerateAllocation(ValueError):
    pass


@dataclass
class FtrSolution:
    tree: RegenerationTree
    rates: np.ndarray
    t: float
    beta: np.ndarray
    flows: np.ndarray
    i: int = 0
    info: dict = field(default_factory=dict)

    @property
    def total_bandwidth(self) -> float:
        return float(self.flows[1:].sum())


def mds_traffic_ok(beta, beta_conv: float, alpha: float, d: int, k: int, tol: float = TOL) -> bool:
    """Sufficient MDS condition for flexible traffic: for every j, the d-k+j
    smallest components sum to at least min((d-k+j) beta_conv, alpha)."""
    b = np.asarray(beta, dtype=float)
    if b.size != d:
        raise ValueError(f"expected {d} components, got {b.size}")
    need = np.minimum((d - k + np.arange(1, k + 1)) * beta_conv, alpha)
    return bool(np.all(sigmas(b, k) >= need - tol * np.maximum(1.0, need)))


def time_for_alloc(c, beta_conv: float, d: int, k: int) -> float:
    s1 = float(sigmas(c, k)[0])
    if s1 <= 0:
        raise DegenerateAllocation("sigma_1 of the rate vector is zero")
    return (d - k + 1) * beta_conv / s1


def subtree_flows(tree: RegenerationTree, beta, alpha: float) -> np.ndarray:
    """f(u, parent(u)) = min(sum of beta over the subtree of u, alpha)."""
    s = np.array(beta, dtype=float)
    s[0] = 0.0
    for u in tree.postorder:
        p = tree.parent[u]
        if p > 0:
            s[p] += s[u]
    f = np.minimum(s, alpha)
    f[0] = 0.0
    return f


def flows_time(tree: RegenerationTree, flows, net: OverlayNetwork) -> float:
    worst = 0.0
    for u, v in tree.edges():
        if flows[u] > 0:
            c = net.cap[u, v]
            worst = max(worst, flows[u] / c if c > 0 else math.inf)
    return worst


def clamp_above_level(beta, d: int, k: int) -> np.ndarray:
    """Lower every component above the (d-k+1)-th smallest down to it."""
    b = np.array(beta, dtype=float)
    body = b[1:]
    level = np.sort(body)[d - k]
    b[1:] = np.minimum(body, level)
    return b


def _solution(net, tree, beta, alpha, beta_conv, d, k, i, rates=None, **info) -> FtrSolution:
    beta = clamp_above_level(beta, d, k)
    beta[0] = 0.0
    flows = subtree_flows(tree, beta, alpha)
    t = flows_time(tree, flows, net)
    if rates is None:
        rates = beta / t if t > 0 else beta.copy()
    return FtrSolution(tree, np.asarray(rates, dtype=float), t, beta, flows, i, dict(info))


# exact optimum for a fixed tree --------------------------------------------
#
# For a fixed time t, an edge e with t*c_e >= alpha is unconstrained, the others
# cap the subtree sum at t*c_e. Maximising sigma_1 under those laminar caps is
# max over lambda of [G(lambda) - (d-m) lambda], where G(lambda) is the largest
# total with every component at most lambda. G is concave piecewise linear and
# is built bottom-up. The uncapped edge set only changes at t = alpha / c_e,
# and between those breakpoints the best sigma_1 scales linearly with t.


@njit(cache=True)
def _capped_totals(parent, post, caps, lam):
    """g_u = min(cap_u, lam + sum of g over children) and its slope in lam."""
    n = parent.size
    h = np.zeros(n)
    slope = np.zeros(n)
    g = np.zeros(n)
    gs = np.zeros(n)
    for u in post:
        h[u] += lam
        slope[u] += 1.0
        if h[u] >= caps[u] - 1e-12 * max(1.0, caps[u]):
            g[u] = caps[u]
            gs[u] = 0.0
        else:
            g[u] = h[u]
            gs[u] = slope[u]
        p = parent[u]
        h[p] += g[u]
        slope[p] += gs[u]
    return h, slope, g, gs


@njit(cache=True)
def _max_sigma1(parent, post, caps, k, target):
    """Largest sigma_1 with subtree sums capped; returns (value, lambda, g).

    value = max over lambda of G(lambda) - (k-1) lambda, walked breakpoint by
    breakpoint. If unbounded, value is inf and lambda reaches ``target``.
    """
    lam = 0.0
    excess = k - 1.0
    for _ in range(2 * parent.size + 2):
        h, slope, g, gs = _capped_totals(parent, post, caps, lam)
        G = h[0] - 0.0
        sG = slope[0]
        F = G - excess * lam
        if sG - excess <= 1e-12:
            return F, lam, g
        step = np.inf
        for u in post:
            if gs[u] > 0 and np.isfinite(caps[u]):
                step = min(step, (caps[u] - h[u]) / gs[u])
        if not np.isfinite(step):
            if F < target:
                lam += (target - F) / (sG - excess)
            h, slope, g, gs = _capped_totals(parent, post, caps, lam)
            return np.inf, lam, g
        lam += max(step, 0.0)
    h, slope, g, gs = _capped_totals(parent, post, caps, lam)
    return h[0] - excess * lam, lam, g


@njit(cache=True)
def _allocate(parent, rpost, g, lam):
    """Split each subtree's budget: own share up to lam, rest to children greedily."""
    n = parent.size
    beta = np.zeros(n)
    rest = np.zeros(n)
    rest[0] = np.inf
    for u in rpost:
        p = parent[u]
        b = min(g[u], rest[p])
        rest[p] -= b
        own = min(lam, b)
        beta[u] = own
        rest[u] = b - own
    return beta


def tree_optimum(net: OverlayNetwork, tree: RegenerationTree, alpha: float, beta_conv: float, d: int, k: int):
    """Minimum FTR regeneration time on a fixed tree.

    Returns ``(t, beta)``; ``t`` is ``inf`` if the tree cannot deliver enough
    data (zero-capacity links cutting off too many providers).
    """
    L = (d - k + 1) * beta_conv
    c_edge = np.array([0.0] + [net.cap[u, tree.parent[u]] for u in range(1, d + 1)])
    with np.errstate(divide="ignore"):
        brk = np.where(c_edge > 0, alpha / np.where(c_edge > 0, c_edge, 1.0), np.inf)
    brk[0] = np.inf
    starts = [0.0] + sorted({float(x) for x in brk[1:] if np.isfinite(x)})
    par = np.array(tree.parent, dtype=np.int64)
    par[0] = 0
    post = np.array(tree.postorder, dtype=np.int64)
    post = post[post != 0]

    def interval(j, target=math.inf):
        start = starts[j]
        end = starts[j + 1] if j + 1 < len(starts) else math.inf
        caps = np.where(brk <= start, np.inf, c_edge)
        S, lam, g = _max_sigma1(par, post, caps, k, target)
        need = 0.0 if math.isinf(S) else (L / S if S > 0 else math.inf)
        return max(start, need), end, S, lam, g

    # feasibility is monotone in t, so "optimum lies before this interval's end"
    # is monotone in the interval index
    lo, hi = 0, len(starts) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        t, end, *_ = interval(mid)
        if t < end:
            hi = mid
        else:
            lo = mid + 1
    t, end, S, lam, g = interval(lo)
    if not (t < end or math.isinf(end)) or math.isinf(t):
        return math.inf, np.zeros(d + 1)
    if t <= 0:
        return 0.0, np.zeros(d + 1)
    if math.isinf(S):
        _, end, S, lam, g = interval(lo, target=L / t)
    return t, t * _allocate(par, post[::-1].copy(), g, lam)


def tree_solution(net, tree, alpha, beta_conv, d, k, i=0) -> FtrSolution:
    t, beta = tree_optimum(net, tree, alpha, beta_conv, d, k)
    if math.isinf(t):
        return FtrSolution(tree, np.zeros(d + 1), math.inf, beta, np.zeros(d + 1), i)
    return _solution(net, tree, beta, alpha, beta_conv, d, k, i)


# heuristic tree search -------------------------------------------------------


@njit(cache=True)
def _subtree_sums(parent, c):
    S = c.copy()
    S[0] = 0.0
    for u in range(1, parent.size):
        w = parent[u]
        while w != 0:
            S[w] += c[u]
            w = parent[w]
    return S


@njit(cache=True)
def _sigma1(c, m):
    return np.sort(c[1:])[:m].sum()


@njit(cache=True)
def _edge_ok(ce, s, theta):
    return ce >= min(theta, s) - 1e-9 * max(1.0, ce)


@njit(cache=True)
def _is_descendant(parent, u, w):
    while w != 0:
        if w == u:
            return True
        w = parent[w]
    return False


@njit(cache=True)
def _clamp(c, scope, m):
    idx = np.flatnonzero(scope)
    if idx.size > m:
        level = np.sort(c[idx])[m - 1]
        for u in idx:
            if c[u] > level:
                c[u] = level


@njit(cache=True)
def _repair(cap, parent, c, rho, m):
    """Scale rates inside violated subtrees, deepest first."""
    n = parent.size
    depth = np.zeros(n, np.int64)
    for u in range(1, n):
        w = u
        while w != 0:
            depth[u] += 1
            w = parent[w]
    order = np.argsort(-depth, kind="mergesort")
    for u in order:
        if u == 0:
            continue
        S = _subtree_sums(parent, c)
        theta = rho * _sigma1(c, m)
        ce = cap[u, parent[u]]
        if not _edge_ok(ce, S[u], theta):
            factor = ce / S[u] if S[u] > 0 else 0.0
            for w in range(1, n):
                if _is_descendant(parent, u, w):
                    c[w] *= factor


@njit(cache=True)
def _best_increase(cap, parent, c, S, scope, rho, m):
    n = parent.size
    idx = np.flatnonzero(scope)
    nodes = idx[np.argsort(c[idx], kind="mergesort")]
    theta = rho * _sigma1(c, m)
    reliant = np.zeros(n, np.bool_)
    slack = np.full(n, np.inf)
    for e in range(1, n):
        ce = cap[e, parent[e]]
        if ce < S[e] - 1e-9 * max(1.0, ce):
            reliant[e] = True
            slack[e] = (ce - theta) / rho
    on_path = np.zeros(n, np.bool_)
    for j in range(min(m, nodes.size)):
        x = nodes[j]
        gap = c[nodes[m]] - c[x] if nodes.size > m else np.inf
        if gap <= 0:
            continue
        bound = gap
        on_path[:] = False
        w = x
        while w != 0:
            on_path[w] = True
            ce = cap[w, parent[w]]
            bound = min(bound, max((ce - theta) / rho, ce - S[w]))
            w = parent[w]
        for e in range(1, n):
            if reliant[e] and not on_path[e]:
                bound = min(bound, slack[e])
        if np.isfinite(bound) and bound > 1e-9 * max(1.0, c[x]):
            return x, bound
    return -1, 0.0


@njit(cache=True)
def _try_pivot(cap, parent, c, S, scope, rho, m, u, v2):
    """Move u under v2 if the current rates stay feasible there and one of the
    m smallest rates can then grow. Commits both and returns True on success."""
    old = parent[u]
    s = S[u]
    theta = rho * _sigma1(c, m)
    if not _edge_ok(cap[u, v2], s, theta):
        return False
    w = v2
    while w != 0:
        if not _is_descendant(parent, w, old) and not _edge_ok(cap[w, parent[w]], S[w] + s, theta):
            return False
        w = parent[w]
    parent[u] = v2
    S2 = _subtree_sums(parent, c)
    x, delta = _best_increase(cap, parent, c, S2, scope, rho, m)
    if x < 0 or delta <= 1e-9 * max(1.0, _sigma1(c, m)):
        parent[u] = old
        return False
    c[x] += delta
    S[:] = _subtree_sums(parent, c)
    return True


@njit(cache=True)
def _heuristic_tree(cap, i, rho, m, phase2_scope, max_sweeps):
    n = cap.shape[0]
    parent = np.zeros(n, np.int64)
    parent[0] = -1
    c = np.zeros(n)
    inside = np.zeros(n, np.bool_)
    inside[0] = True
    order = [0]
    bottleneck = np.full(n, np.inf)
    for _ in range(i):
        best, bu, bv = -1.0, -1, -1
        for v in order:
            for u in range(1, n):
                if not inside[u] and cap[u, v] > best:
                    best, bu, bv = cap[u, v], u, v
        parent[bu] = bv
        bottleneck[bu] = min(bottleneck[bv], cap[bu, bv])
        c[bu] = bottleneck[bu]
        inside[bu] = True
        order.append(bu)
    phase2 = np.flatnonzero(~inside)
    for u in phase2:
        best, bv = -1.0, -1
        for v in range(n):
            if inside[v] and cap[u, v] > best:
                best, bv = cap[u, v], v
        parent[u] = bv
        c[u] = best
    scope = np.zeros(n, np.bool_)
    if phase2_scope:
        scope[phase2] = True
    else:
        scope[1:] = True
    _clamp(c, scope, m)
    _repair(cap, parent, c, rho, m)
    S = _subtree_sums(parent, c)
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        _clamp(c, scope, m)
        S = _subtree_sums(parent, c)
        updated = False
        for u in phase2:
            for v2 in range(n):
                if v2 == u or v2 == parent[u] or cap[u, v2] <= 0 or _is_descendant(parent, u, v2):
                    continue
                if _try_pivot(cap, parent, c, S, scope, rho, m, u, v2):
                    updated = True
                    break
        if not updated:
            break
    return parent, c, sweeps


def ftr_heuristic(
    net: OverlayNetwork,
    i: int,
    alpha: float,
    beta_conv: float,
    d: int,
    k: int,
    sigma_scope: str = "all",
    polish: bool = True,
    max_sweeps: int | None = None,
    _polish_cache: dict | None = None,
) -> FtrSolution:
    """Two-phase FTR tree construction for a given number ``i`` of phase-1 links.

    Phase 1 grows a subtree of ``i`` links from the newcomer, always taking the
    largest-capacity link leaving the current subtree; those providers get their
    path bottleneck as rate. Phase 2 hangs every other provider on its best link
    into that subtree, then runs pivot local search: a provider's uplink is moved
    whenever the current rates stay feasible in the new tree and one of the
    ``d-k+1`` smallest rates can then be raised (by the largest feasible amount).

    With ``polish`` the final tree's rates are replaced by the exact optimum for
    that tree when it is strictly better. ``sigma_scope="phase2"`` restricts the
    clamping/raising step to phase-2 providers.
    """
    if not 0 <= i <= d:
        raise ValueError(f"i must be in [0, {d}]")
    if net.d != d:
        raise ValueError("network size does not match d")
    if sigma_scope not in ("all", "phase2"):
        raise ValueError("sigma_scope must be 'all' or 'phase2'")
    m = d - k + 1
    rho = alpha / (m * beta_conv)
    limit = max_sweeps if max_sweeps is not None else 4 * d + 10
    parent, c, sweeps = _heuristic_tree(np.ascontiguousarray(net.cap), i, rho, m, sigma_scope == "phase2", limit)
    parent[0] = -1
    tree = RegenerationTree(tuple(int(p) for p in parent))
    if _sigma1(c, m) > 0:
        t_h = time_for_alloc(c[1:], beta_conv, d, k)
        sol = _solution(net, tree, t_h * c, alpha, beta_conv, d, k, i, rates=c, sweeps=sweeps)
    else:
        sol = FtrSolution(tree, c, math.inf, np.zeros(d + 1), np.zeros(d + 1), i, {"sweeps": sweeps})
    if polish:
        cache = {} if _polish_cache is None else _polish_cache
        if tree.parent not in cache:
            cache[tree.parent] = tree_solution(net, tree, alpha, beta_conv, d, k, i)
        exact = cache[tree.parent]
        if exact.t < sol.t * (1 - 1e-9):
            return FtrSolution(tree, exact.rates, exact.t, exact.beta, exact.flows, i, {"sweeps": sweeps, "polished": True})
    return sol


def ftr_solve(net: OverlayNetwork, alpha: float, beta_conv: float, d: int, k: int, **kw) -> FtrSolution:
    """Best ``ftr_heuristic`` candidate over i = 0..d (ties: smallest i).

    The exact optimum on the star is also a candidate, so the result is never
    worse than flexible star repair.
    """
    cache: dict = {}
    best = tree_solution(net, RegenerationTree.star(d), alpha, beta_conv, d, k, i=0)
    best.info["star_fallback"] = True
    cache[best.tree.parent] = best
    for i in range(d + 1):
        sol = ftr_heuristic(net, i, alpha, beta_conv, d, k, _polish_cache=cache, **kw)
        if sol.t < best.t * (1 - 1e-12) or (i == 0 and sol.t <= best.t * (1 + 1e-12)):
            best = sol
    return best


# exact small-instance oracle -------------------------------------------------


def _lp_max_sigma1(tree: RegenerationTree, net: OverlayNetwork, capped_edges, d: int, k: int) -> float:
    """max sigma_1(c) s.t. sum over S(u) of c <= c(u, parent) for u in capped_edges."""
    from scipy.optimize import linprog

    m = d - k + 1
    # variables: c_1..c_d, s_1..s_d, lam
    n = 2 * d + 1
    cost = np.zeros(n)
    cost[d : 2 * d] = 1.0
    cost[-1] = -m
    A, b = [], []
    for i in range(d):
        row = np.zeros(n)
        row[-1], row[d + i], row[i] = 1.0, -1.0, -1.0  # lam - s_i - c_i <= 0
        A.append(row)
        b.append(0.0)
    for u in capped_edges:
        row = np.zeros(n)
        for w in tree.subtree(u):
            row[w - 1] = 1.0
        A.append(row)
        b.append(net.cap[u, tree.parent[u]])
    bounds = [(0, None)] * (2 * d) + [(None, None)]
    res = linprog(cost, A_ub=np.array(A), b_ub=np.array(b), bounds=bounds, method="highs")
    if res.status == 3:
        return math.inf
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    return max(0.0, -res.fun)


def oracle_ftr_small(net: OverlayNetwork, tree: RegenerationTree, alpha: float, beta_conv: float, d: int, k: int) -> float:
    """Optimal FTR time on a fixed tree by enumerating which side of each
    edge's min() is active and solving one LP per case."""
    if d > ORACLE_MAX_D:
        raise TooLarge(f"d={d} exceeds oracle limit {ORACLE_MAX_D}")
    L = (d - k + 1) * beta_conv
    edges = list(range(1, d + 1))
    best = math.inf
    for mask in range(1 << d):
        A = [u for b, u in enumerate(edges) if mask >> b & 1]
        floor = 0.0
        for u in A:
            c = net.cap[u, tree.parent[u]]
            floor = max(floor, alpha / c if c > 0 else math.inf)
        if floor >= best:
            continue
        S = _lp_max_sigma1(tree, net, [u for u in edges if u not in A], d, k)
        need = 0.0 if math.isinf(S) else (L / S if S > 0 else math.inf)
        best = min(best, max(floor, need))
    return best
