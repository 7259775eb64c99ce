"""Feasible regions of repair vectors and the flexible-regeneration solver.

A repair vector assigns each of the ``d`` providers a number of blocks.
Regions are kept in canonical form: a non-decreasing k-tuple ``x`` such that
a vector is admissible iff the sum of its ``d-k+j`` smallest components is at
least ``x[j-1]`` for every ``j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TOL = 1e-9


class Infeasible(ValueError):
    pass


def sigma(beta, j: int, d: int, k: int) -> float:
    """Sum of the ``d-k+j`` smallest components of ``beta``."""
    if not 1 <= j <= k:
        raise ValueError(f"j must be in [1, {k}], got {j}")
    b = np.sort(np.asarray(beta, dtype=float))
    return float(b[: d - k + j].sum())


def sigmas(beta, k: int) -> np.ndarray:
    """All of sigma_1..sigma_k at once."""
    b = np.sort(np.asarray(beta, dtype=float))
    d = b.size
    return np.cumsum(b)[d - k:]


@dataclass(frozen=True)
class FeasibleRegion:
    x: tuple[float, ...]
    d: int

    def __post_init__(self):
        if len(self.x) > self.d:
            raise ValueError("region has more bounds than providers")
        if any(b < a - TOL for a, b in zip(self.x, self.x[1:])) or (self.x and self.x[0] < -TOL):
            raise ValueError(f"region bounds must be non-negative and non-decreasing: {self.x}")

    @property
    def k(self) -> int:
        return len(self.x)

    def is_canonical(self, alpha: float, M: float) -> bool:
        return self.x[-1] <= alpha + TOL and sum(self.x) >= M - TOL * max(1.0, M)

    def contains(self, beta, tol: float = TOL) -> bool:
        return contains(self, beta, tol)


def contains(region: FeasibleRegion, beta, tol: float = TOL) -> bool:
    s = sigmas(beta, region.k)
    x = np.asarray(region.x)
    return bool(np.all(s >= x - tol * np.maximum(1.0, x)))


def msr_region(M: float, k: int, d: int) -> FeasibleRegion:
    return FeasibleRegion(tuple([M / k] * k), d)


def heuristic_region(alpha: float, beta_conv: float, d: int, k: int) -> FeasibleRegion:
    return FeasibleRegion(tuple(min((d - k + j) * beta_conv, alpha) for j in range(1, k + 1)), d)


def conventional_beta(alpha: float, d: int, k: int, M: float) -> float:
    """Uniform per-provider traffic on the storage/bandwidth tradeoff curve.

    Solves ``sum_{i=1..k} min((d-i+1) beta, alpha) = M``. The i=1 term has the
    largest multiplier, so in the regime where ``p`` terms are capped those are
    the first ``p`` ones.
    """
    if k < 1 or d < k:
        raise ValueError("need 1 <= k <= d")
    if alpha < M / k - TOL * max(1.0, M):
        raise Infeasible(f"alpha={alpha} below the MSR point M/k={M / k}")
    for p in range(k):
        rest = sum(d - i + 1 for i in range(p + 1, k + 1))
        beta = (M - p * alpha) / rest
        upper_ok = (d - p) * beta <= alpha * (1 + TOL)
        lower_ok = p == 0 or (d - p + 1) * beta >= alpha * (1 - TOL)
        if upper_ok and lower_ok:
            return beta
    # alpha within rounding of M/k
    return alpha / (d - k + 1)


def mbr_alpha(d: int, k: int, M: float) -> float:
    """Storage per node at the minimum-bandwidth point (alpha = d * beta)."""
    return d * 2 * M / (k * (2 * d - k + 1))


def _capped(t: float, c: np.ndarray, alpha: float) -> np.ndarray:
    return np.minimum(t * c, alpha)


def fr_solve(region: FeasibleRegion, c, alpha: float, rtol: float = 1e-12):
    """Minimise ``max_i beta_i / c_i`` over the region.

    Feasibility of ``beta(t) = min(t c, alpha)`` is monotone in ``t``, so the
    optimum is found by bisection; the uncapped optimum ``max_j x_j/sigma_j(c)``
    is a lower bracket. Returns ``(t, beta)`` with ``beta`` trimmed to a
    minimal vector of the region.
    """
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0):
        raise ValueError("capacities must be positive")
    k = region.k
    x = np.asarray(region.x)
    sc = sigmas(c, k)
    lo = float(np.max(x / sc)) if np.any(x > 0) else 0.0

    def ok(t):
        return contains(region, _capped(t, c, alpha), tol=0.0)

    if ok(lo):
        hi = lo
    else:
        hi = alpha / float(c.min())
        if not ok(hi):
            raise Infeasible("region excludes (alpha, ..., alpha)")
        while hi - lo > rtol * hi:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                hi = mid
            else:
                lo = mid
    beta = trim(region, _capped(hi, c, alpha))
    return float(np.max(beta / c)), beta


def trim(region: FeasibleRegion, beta) -> np.ndarray:
    """Lower the largest components while the vector stays in the region."""
    b = np.array(beta, dtype=float)
    d = b.size
    for _ in range(d):
        order = np.argsort(-b, kind="stable")
        top = b[order[0]]
        if top <= 0:
            break
        grp = order[np.abs(b[order] - top) <= TOL * max(1.0, top)]
        nxt = b[order[len(grp)]] if len(grp) < d else 0.0

        def ok(level):
            trial = b.copy()
            trial[grp] = level
            return contains(region, trial, tol=0.0)

        if ok(nxt):
            b[grp] = nxt
            continue
        lo, hi = nxt, top
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-13 * max(1.0, top):
                break
        b[grp] = hi
        break
    return b


def msr_closed_form(c, M: float, k: int, d: int) -> np.ndarray:
    """Optimal MSR repair vector, returned in the caller's provider order."""
    c = np.asarray(c, dtype=float)
    order = np.argsort(c, kind="stable")
    cs = c[order]
    m = d - k + 1
    scale = M / (k * cs[:m].sum())
    out_sorted = np.where(np.arange(d) < m, cs, cs[m - 1]) * scale
    out = np.empty(d)
    out[order] = out_sorted
    return out


def round_up(beta, tol: float = 1e-9) -> np.ndarray:
    """Component-wise ceiling; values within ``tol`` of an integer snap to it."""
    b = np.asarray(beta, dtype=float)
    near = np.round(b)
    return np.where(np.abs(b - near) <= tol, near, np.ceil(b)).astype(np.int64)


def star_time(beta_conv: float, c) -> float:
    """Regeneration time of uniform-traffic star repair."""
    return beta_conv / float(np.min(c))


def is_integral(v: float) -> bool:
    return math.isclose(v, round(v), abs_tol=1e-9)


def repair_time(beta, c) -> float:
    """max_i beta_i / c_i over providers that send anything."""
    b = np.asarray(beta, dtype=float)
    c = np.asarray(c, dtype=float)
    used = b > 0
    if not used.any():
        return 0.0
    if np.any(c[used] <= 0):
        return math.inf
    return float(np.max(b[used] / c[used]))
