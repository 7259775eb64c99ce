"""Random linear network coding over GF(2^w) for storage, repair and decoding.

Blocks are tracked by their coding vectors (rows over the M source blocks);
payload symbols ride along when enabled, so decoding can be checked
byte-for-byte.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .gf import GaloisField, field as get_field
from .history import RepairEvent

SAMPLE_THRESHOLD = 200


class InvalidParams(ValueError):
    pass


class TooManyBlocks(ValueError):
    pass


class ReconstructionFailure(Exception):
    def __init__(self, rank: int, needed: int):
        super().__init__(f"stacked rank {rank} < {needed}")
        self.rank = rank
        self.needed = needed


@dataclass(frozen=True)
class SystemParams:
    n: int
    k: int
    d: int
    M: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (1 <= self.k <= self.d <= self.n - 1):
            raise InvalidParams(f"need 1 <= k <= d <= n-1, got n={self.n} k={self.k} d={self.d}")
        total = sum(min((self.d - i + 1) * self.beta, self.alpha) for i in range(1, self.k + 1))
        if not math.isclose(total, self.M, rel_tol=1e-9, abs_tol=1e-9):
            raise InvalidParams(f"tradeoff violated: sum of min((d-i+1)beta, alpha) = {total} != M = {self.M}")
        lo, hi = self.M / self.k, self.d * self.beta
        if self.alpha < lo * (1 - 1e-9) or self.alpha > hi * (1 + 1e-9):
            raise InvalidParams(f"alpha={self.alpha} outside [M/k, d*beta] = [{lo}, {hi}]")

    @classmethod
    def from_alpha(cls, n: int, k: int, d: int, M: float, alpha: float | None = None) -> "SystemParams":
        from .region import conventional_beta

        alpha = M / k if alpha is None else alpha
        return cls(n, k, d, M, alpha, conventional_beta(alpha, d, k, M))

    @property
    def m(self) -> int:
        return self.d - self.k + 1

    @property
    def integral(self) -> bool:
        return all(float(x).is_integer() for x in (self.M, self.alpha, self.beta))


@dataclass
class CodedBlocks:
    vectors: np.ndarray
    payload: np.ndarray | None = None

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.int64)
        if self.vectors.ndim != 2:
            raise ValueError("coding vectors must form a matrix")
        if self.payload is not None:
            self.payload = np.asarray(self.payload, dtype=np.int64)
            if self.payload.shape[0] != self.vectors.shape[0]:
                raise ValueError("one payload row per coding vector")

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def empty(cls, M: int, payload_len: int | None = None) -> "CodedBlocks":
        pay = None if payload_len is None else np.zeros((0, payload_len), dtype=np.int64)
        return cls(np.zeros((0, M), dtype=np.int64), pay)

    @classmethod
    def concat(cls, parts, M: int, payload_len: int | None = None) -> "CodedBlocks":
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty(M, payload_len)
        vec = np.vstack([p.vectors for p in parts])
        pay = None if parts[0].payload is None else np.vstack([p.payload for p in parts])
        return cls(vec, pay)

    def combine(self, coeffs: np.ndarray, F: GaloisField) -> "CodedBlocks":
        vec = F.matmul(coeffs, self.vectors)
        pay = None if self.payload is None else F.matmul(coeffs, self.payload)
        return CodedBlocks(vec, pay)


@dataclass
class StorageNode:
    id: int
    blocks: CodedBlocks


@dataclass
class StorageSystem:
    params: SystemParams
    nodes: list[StorageNode]
    rng_seed: int
    field: GaloisField = dc_field(default_factory=get_field)
    repairs: int = 0

    def stacked(self, subset) -> np.ndarray:
        return np.vstack([self.nodes[i].blocks.vectors for i in subset])

    def subset_rank(self, subset) -> int:
        return self.field.rank(self.stacked(subset))


def _ints(x, what: str) -> int:
    if not float(x).is_integer():
        raise InvalidParams(f"{what}={x} must be a whole number of blocks in coded mode")
    return int(x)


def _full_rank_coeffs(rows: int, cols: int, F: GaloisField, rng: np.random.Generator) -> np.ndarray:
    target = min(rows, cols)
    for _ in range(64):
        R = F.random((rows, cols), rng)
        if F.rank(R) == target:
            return R
    raise RuntimeError("could not draw a full-rank coefficient matrix")


def distribute(source, params: SystemParams, seed: int, F: GaloisField | None = None) -> StorageSystem:
    """Store ``alpha`` random combinations of the source blocks on each of ``n`` nodes.

    ``source`` is an ``M x L`` symbol array, or ``None`` to track coding
    vectors only.
    """
    F = F or get_field()
    M = _ints(params.M, "M")
    alpha = _ints(params.alpha, "alpha")
    if source is not None:
        source = np.asarray(source, dtype=np.int64)
        if source.shape[0] != M:
            raise InvalidParams(f"source has {source.shape[0]} blocks, expected M={M}")
    rng = np.random.default_rng(seed)
    nodes = []
    for i in range(params.n):
        vec = F.random((alpha, M), rng)
        while np.any(~vec.any(axis=1)):
            zero = ~vec.any(axis=1)
            vec[zero] = F.random((int(zero.sum()), M), rng)
        pay = None if source is None else F.matmul(vec, source)
        nodes.append(StorageNode(i, CodedBlocks(vec, pay)))
    return StorageSystem(params, nodes, seed, F)


def provider_encode(node: StorageNode, beta_i: int, alpha: int, rng: np.random.Generator, F: GaloisField) -> CodedBlocks:
    """``beta_i`` combinations of the node's blocks with a rank-``beta_i`` coefficient matrix."""
    if beta_i > alpha:
        raise TooManyBlocks(f"beta_i={beta_i} exceeds alpha={alpha}")
    blocks = node.blocks
    if beta_i == 0:
        return CodedBlocks.empty(blocks.width, None if blocks.payload is None else blocks.payload.shape[1])
    R = _full_rank_coeffs(beta_i, len(blocks), F, rng)
    return blocks.combine(R, F)


def intermediate_combine(received: CodedBlocks, own: CodedBlocks, cap: int, rng: np.random.Generator, F: GaloisField) -> CodedBlocks:
    """Forward everything if it fits in ``cap`` blocks, else ``cap`` random combinations."""
    width = own.width if len(own) or not len(received) else received.width
    pl = own.payload if own.payload is not None else received.payload
    union = CodedBlocks.concat([received, own], width, None if pl is None else pl.shape[1])
    if len(union) <= cap:
        return union
    return union.combine(F.random((cap, len(union)), rng), F)


def newcomer_regenerate(incoming: CodedBlocks, alpha: int, rng: np.random.Generator, F: GaloisField, node_id: int = -1) -> StorageNode:
    if len(incoming) < 1:
        raise ValueError("newcomer needs at least one incoming block")
    return StorageNode(node_id, incoming.combine(F.random((alpha, len(incoming)), rng), F))


def reconstruct(nodes, M: int, F: GaloisField | None = None) -> np.ndarray:
    """Decode the source blocks from the stacked blocks of the given nodes."""
    F = F or get_field()
    vec = np.vstack([n.blocks.vectors for n in nodes])
    r = F.rank(vec)
    if r < M:
        raise ReconstructionFailure(r, M)
    if any(n.blocks.payload is None for n in nodes):
        raise ValueError("payloads are disabled; only the rank can be checked")
    pay = np.vstack([n.blocks.payload for n in nodes])
    return F.solve(vec, pay, unique=True)


def execute_repair(system: StorageSystem, event: RepairEvent, seed) -> StorageNode:
    """Run one regeneration through the coded pipeline and install the newcomer."""
    F = system.field
    alpha = _ints(system.params.alpha, "alpha")
    rng = np.random.default_rng(seed)
    M = _ints(system.params.M, "M")
    pl = system.nodes[0].blocks.payload
    plen = None if pl is None else pl.shape[1]
    out: dict[int, CodedBlocks] = {}
    for j in event.postorder():
        own = provider_encode(system.nodes[event.providers[j]], _ints(event.own[j], "own"), alpha, rng, F)
        received = CodedBlocks.concat([out[c] for c in event.children(j)], M, plen)
        out[j] = intermediate_combine(received, own, _ints(event.flow[j], "flow"), rng, F)
    incoming = CodedBlocks.concat([out[j] for j in event.children(-1)], M, plen)
    node = newcomer_regenerate(incoming, alpha, rng, F, event.failed)
    system.nodes[event.failed] = node
    system.repairs += 1
    return node


@dataclass
class MdsReport:
    ok: bool
    failing_subsets: list[tuple[int, ...]]
    checked: int
    min_rank: int


def select_subsets(n: int, k: int, count: int | None, rng: np.random.Generator | None):
    """All k-subsets if there are at most ``count`` of them (or count is None), else a sample."""
    total = math.comb(n, k)
    if count is None or total <= count:
        return list(itertools.combinations(range(n), k))
    rng = rng or np.random.default_rng(0)
    seen: set[tuple[int, ...]] = set()
    while len(seen) < count:
        seen.add(tuple(sorted(rng.choice(n, size=k, replace=False).tolist())))
    return sorted(seen)


def mds_check(system: StorageSystem, mode: str = "exhaustive", count: int = SAMPLE_THRESHOLD, rng=None) -> MdsReport:
    p = system.params
    M = _ints(p.M, "M")
    subsets = select_subsets(p.n, p.k, None if mode == "exhaustive" else count, rng)
    failing, low = [], M
    for s in subsets:
        r = system.subset_rank(s)
        low = min(low, r)
        if r < M:
            failing.append(s)
    return MdsReport(not failing, failing, len(subsets), low)
