"""Binary extension fields GF(2^w) and dense matrix algebra over them.

Multiplication goes through log/antilog tables; every array routine accepts
numpy integer arrays and works element-wise, so a whole row operation of a
Gaussian elimination is a handful of vectorised table lookups.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

POLY_GF16 = 0x1100B  # x^16 + x^12 + x^3 + x + 1
POLY_GF8 = 0x11D  # x^8 + x^4 + x^3 + x^2 + 1


class NoSolution(ValueError):
    """The linear system is inconsistent."""


class UnderDetermined(ValueError):
    """A unique solution was requested but the matrix is column-rank deficient."""


class GaloisField:
    """GF(2^w) with a fixed primitive reduction polynomial.

    >>> F = GaloisField(16)
    >>> hex(F.mul(0x0002, 0x8000))
    '0x100b'
    """

    def __init__(self, width: int = 16, poly: int | None = None):
        if poly is None:
            poly = {16: POLY_GF16, 8: POLY_GF8}[width]
        self.width = width
        self.poly = poly
        self.order = 1 << width
        q1 = self.order - 1
        exp = np.zeros(2 * q1, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(q1):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.order:
                x ^= poly
        if x != 1 or len(set(exp[:q1].tolist())) != q1:
            raise ValueError(f"polynomial {poly:#x} is not primitive for width {width}")
        exp[q1:] = exp[:q1]
        exp.setflags(write=False)
        log.setflags(write=False)
        self.exp = exp
        self.log = log

    def __repr__(self) -> str:
        return f"GaloisField(width={self.width}, poly={self.poly:#x})"

    # scalar / element-wise arithmetic -----------------------------------

    @staticmethod
    def add(a, b):
        return np.bitwise_xor(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else a ^ b

    sub = add

    def mul(self, a, b):
        if isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer)):
            if a == 0 or b == 0:
                return 0
            return int(self.exp[self.log[a] + self.log[b]])
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self.exp[self.log[a] + self.log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in GF(2^w)")
        return int(self.exp[(self.order - 1 - self.log[a]) % (self.order - 1)])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        return int(self.exp[(self.log[a] * e) % (self.order - 1)])

    def clmul(self, a: int, b: int) -> int:
        """Shift-and-add multiply with explicit reduction (table-free reference)."""
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a & self.order:
                a ^= self.poly
        return r

    def random(self, shape, rng: np.random.Generator, nonzero: bool = False) -> np.ndarray:
        low = 1 if nonzero else 0
        return rng.integers(low, self.order, size=shape, dtype=np.int64)

    # matrices --------------------------------------------------------------

    def matmul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        if A.shape[1] != B.shape[0]:
            raise ValueError(f"shape mismatch {A.shape} @ {B.shape}")
        out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
        if B.shape[1] == 0:
            return out
        logB = self.log[B]
        zeroB = B == 0
        for j in range(A.shape[1]):
            col = A[:, j]
            nz = col != 0
            if not nz.any():
                continue
            prod = self.exp[self.log[col[nz]][:, None] + logB[j][None, :]]
            prod[:, zeroB[j]] = 0
            out[nz] ^= prod
        return out

    def row_reduce(self, A: np.ndarray, full: bool = True) -> tuple[np.ndarray, list[int]]:
        """Return (echelon form, pivot columns); reduced row echelon if `full`."""
        M = np.array(A, dtype=np.int64, copy=True)
        rows, cols = M.shape
        pivots: list[int] = []
        r = 0
        for c in range(cols):
            if r == rows:
                break
            nz = np.flatnonzero(M[r:, c])
            if nz.size == 0:
                continue
            p = r + int(nz[0])
            if p != r:
                M[[r, p]] = M[[p, r]]
            piv = int(M[r, c])
            if piv != 1:
                M[r] = self.mul(M[r], self.inv(piv))
            lo = 0 if full else r + 1
            factors = M[lo:, c].copy()
            if full:
                factors[r] = 0
            hit = np.flatnonzero(factors)
            if hit.size:
                M[lo + hit] ^= self.mul(factors[hit][:, None], M[r][None, :])
            pivots.append(c)
            r += 1
        return M, pivots

    def rank(self, A: np.ndarray) -> int:
        A = np.asarray(A)
        if A.size == 0:
            return 0
        return int(_rank_kernel(np.array(A, dtype=np.int64), self.exp, self.log))

    def rank_reference(self, A: np.ndarray) -> int:
        """Rank via the vectorised numpy elimination (slower, used as a cross-check)."""
        A = np.asarray(A)
        if A.size == 0:
            return 0
        return len(self.row_reduce(A, full=False)[1])

    def nullspace(self, A: np.ndarray) -> np.ndarray:
        """Basis of {x : A x = 0} as the columns of the returned matrix."""
        A = np.asarray(A, dtype=np.int64)
        cols = A.shape[1]
        R, pivots = self.row_reduce(A)
        free = [c for c in range(cols) if c not in set(pivots)]
        N = np.zeros((cols, len(free)), dtype=np.int64)
        for j, f in enumerate(free):
            N[f, j] = 1
            for i, p in enumerate(pivots):
                # characteristic 2: -R[i, f] == R[i, f]
                N[p, j] = R[i, f]
        return N

    def solve(self, A: np.ndarray, b: np.ndarray, unique: bool = True) -> np.ndarray:
        """Solve A x = b; b may be a vector or a matrix of right-hand sides."""
        A = np.asarray(A, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        vec = b.ndim == 1
        if vec:
            b = b[:, None]
        if A.shape[0] != b.shape[0]:
            raise ValueError("A and b must have the same number of rows")
        cols = A.shape[1]
        R, pivots = self.row_reduce(np.hstack([A, b]))
        if pivots and pivots[-1] >= cols:
            raise NoSolution("inconsistent system")
        if unique and len(pivots) < cols:
            raise UnderDetermined(f"rank {len(pivots)} < {cols} unknowns")
        x = np.zeros((cols, b.shape[1]), dtype=np.int64)
        for i, p in enumerate(pivots):
            x[p] = R[i, cols:]
        return x[:, 0] if vec else x


@njit(cache=True)
def _rank_kernel(M, exp, log):
    rows, cols = M.shape
    q1 = exp.size // 2
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = -1
        for i in range(r, rows):
            if M[i, c] != 0:
                p = i
                break
        if p < 0:
            continue
        if p != r:
            for j in range(c, cols):
                M[r, j], M[p, j] = M[p, j], M[r, j]
        inv_log = q1 - log[M[r, c]]
        for i in range(r + 1, rows):
            a = M[i, c]
            if a == 0:
                continue
            f = log[a] + inv_log
            for j in range(c, cols):
                b = M[r, j]
                if b != 0:
                    M[i, j] ^= exp[(f + log[b]) % q1]
        r += 1
    return r


@lru_cache(maxsize=None)
def field(width: int = 16) -> GaloisField:
    """Shared, immutable field instance per width."""
    return GaloisField(width)
