"""Experiment harness: random topologies, per-scheme solvers, sweeps, CSV output.

Fluid mode treats data as real-valued Mb and only evaluates regeneration times
and traffic. Coded mode runs the random linear coding pipeline round after
round and measures how often k random nodes can still decode.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .codec import SystemParams, distribute, execute_repair, mds_check
from .ftr import ftr_solve
from .history import RepairEvent, integral_tree_traffic, star_event, tree_event
from .infoflow import InfoFlowGraph
from .region import conventional_beta, fr_solve, heuristic_region, mbr_alpha, round_up
from .tree import OverlayNetwork, RegenerationTree, greedy_tree, rctree_tree, regen_time, tr_flows

SCHEMES = ("STAR", "FR", "TR", "FTR", "RCTREE")
DEFAULT_DISTRIBUTIONS = ((0.3, 120.0), (3.0, 120.0), (30.0, 120.0), (60.0, 120.0), (90.0, 120.0))
# (n, k, d) settings for the constant-per-link decay experiment; every survivor helps
DECAY_SETTINGS = ((9, 5, 8), (10, 5, 9), (10, 6, 9), (12, 6, 10))


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n: int = 20
    k: int = 5
    M: float = 1000.0
    alpha_mode: str | float = "MSR"
    d: int = 10
    d_range: tuple[int, int] | None = None
    low: float = 10.0
    high: float = 120.0
    distributions: tuple[tuple[float, float], ...] = DEFAULT_DISTRIBUTIONS
    alpha_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    trials: int = 1000
    seed: int = 0
    schemes: tuple[str, ...] = ("STAR", "FR", "TR", "FTR")
    mode: str = "fluid"
    asymmetric: bool = False
    rounds: int = 20
    subsets: int | None = 200
    random_failure: bool = False
    sigma_scope: str = "all"
    topology: str | None = None

    def __post_init__(self):
        self.d_range = (self.k + 1, self.n - 1) if self.d_range is None else tuple(self.d_range)
        self.distributions = tuple(tuple(float(x) for x in p) for p in self.distributions)
        self.alpha_grid = tuple(float(x) for x in self.alpha_grid)
        self.schemes = tuple(s.upper() for s in self.schemes)
        self.validate()

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not 1 <= self.k <= self.d <= self.n - 1:
            raise ConfigError(f"need 1 <= k <= d <= n-1 (n={self.n}, k={self.k}, d={self.d})")
        lo, hi = self.d_range
        if not (self.k + 1 <= lo <= hi <= self.n - 1):
            raise ConfigError(f"d_range {self.d_range} must lie within [k+1, n-1]")
        if self.low <= 0 or self.high < self.low:
            raise ConfigError("capacity range needs 0 < low <= high")
        for a, b in self.distributions:
            if a <= 0 or b < a:
                raise ConfigError(f"bad distribution [{a}, {b}]")
        if bad := [s for s in self.schemes if s not in SCHEMES]:
            raise ConfigError(f"unknown schemes {bad}")
        if self.mode not in ("fluid", "coded"):
            raise ConfigError("mode must be 'fluid' or 'coded'")
        if self.M <= 0 or self.rounds < 0:
            raise ConfigError("M must be positive and rounds non-negative")
        if isinstance(self.alpha_mode, str) and self.alpha_mode.upper() not in ("MSR", "MBR"):
            raise ConfigError("alpha_mode must be MSR, MBR or a fraction in [0, 1]")
        if not isinstance(self.alpha_mode, str) and not 0 <= float(self.alpha_mode) <= 1:
            raise ConfigError("alpha fraction must be in [0, 1]")
        if self.topology is not None and self.fixed_network().d != self.d:
            raise ConfigError(f"topology has {self.fixed_network().d} providers but d={self.d}")

    def fixed_network(self) -> OverlayNetwork | None:
        """Network used in every round instead of sampling, if ``topology`` is set.

        ``topology`` is a built-in name or a path to a capacity-matrix file.
        """
        if self.topology is None:
            return None
        from .topologies import BUILTIN

        if self.topology in BUILTIN:
            return BUILTIN[self.topology]().net
        try:
            return OverlayNetwork.from_text(Path(self.topology).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read topology {self.topology}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"bad topology file {self.topology}: {exc}") from exc

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        if unknown := set(data) - known:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


def alpha_for(mode, M: float, k: int, d: int) -> float:
    """Storage per node: MSR, MBR, or a fraction of the way from MSR to MBR."""
    lo, hi = M / k, mbr_alpha(d, k, M)
    if isinstance(mode, str):
        return lo if mode.upper() == "MSR" else hi
    return lo + float(mode) * (hi - lo)


def trial_rng(seed: int, *index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *index]))


def sample_topology(d: int, low: float, high: float, rng: np.random.Generator, symmetric: bool = True) -> OverlayNetwork:
    """Complete network on d+1 nodes with i.i.d. U[low, high] capacities."""
    A = rng.uniform(low, high, size=(d + 1, d + 1))
    if symmetric:
        A = np.triu(A, 1)
        A = A + A.T
    return OverlayNetwork(A)


@dataclass
class TrialResult:
    scheme: str
    regen_time: float
    total_bandwidth: float
    tree: tuple[int, ...] | None = None
    own: np.ndarray | None = None
    flows: np.ndarray | None = None
    note: str = ""


@dataclass(frozen=True)
class Point:
    d: int
    k: int
    M: float
    alpha: float
    beta: float


def solve_scheme(net: OverlayNetwork, p: Point, scheme: str, sigma_scope: str = "all") -> TrialResult:
    """Regeneration time and traffic of one scheme; ``own``/``flows`` are indexed
    by tree node (0 = newcomer)."""
    d, k, alpha, beta = p.d, p.k, p.alpha, p.beta
    star = RegenerationTree.star(d)
    c = net.direct
    if scheme == "STAR":
        own = np.r_[0.0, np.full(d, min(beta, alpha))]
        return TrialResult("STAR", float(own[1:].max() / c.min()), float(own.sum()), star.parent, own, own.copy())
    if scheme == "FR":
        t, b = fr_solve(heuristic_region(alpha, beta, d, k), c, alpha)
        own = np.r_[0.0, b]
        return TrialResult("FR", t, float(b.sum()), star.parent, own, own.copy())
    if scheme == "TR":
        tree = greedy_tree(net, alpha, beta)
        flows = tr_flows(tree, beta, alpha)
        t = regen_time(tree, flows, net)
        t_star = beta / c.min()
        note = "greedy_tree"
        if t_star < t * (1 - 1e-12):
            tree, flows, t, note = star, tr_flows(star, beta, alpha), t_star, "star"
        own = np.r_[0.0, np.full(d, beta)]
        return TrialResult("TR", t, float(flows.sum()), tree.parent, own, flows, note)
    if scheme == "FTR":
        sol = ftr_solve(net, alpha, beta, d, k, sigma_scope=sigma_scope)
        return TrialResult("FTR", sol.t, sol.total_bandwidth, sol.tree.parent, sol.beta, sol.flows, f"i={sol.i}")
    if scheme == "RCTREE":
        tree = rctree_tree(net, beta, k)
        flows = np.r_[0.0, np.full(d, beta)]
        return TrialResult("RCTREE", regen_time(tree, flows, net), float(flows.sum()), tree.parent, flows.copy(), flows)
    raise ValueError(f"unknown scheme {scheme}")


def run_trial(net: OverlayNetwork, p: Point, schemes=SCHEMES, sigma_scope: str = "all") -> list[TrialResult]:
    return [solve_scheme(net, p, s, sigma_scope) for s in schemes]


# fluid sweeps -----------------------------------------------------------------


def _point_trials(args):
    p, low, high, seed, trials, schemes, symmetric, sigma_scope, start = args
    times = np.zeros((trials, len(schemes)))
    bws = np.zeros((trials, len(schemes)))
    for t in range(trials):
        net = sample_topology(p.d, low, high, trial_rng(seed, start + t), symmetric)
        for j, r in enumerate(run_trial(net, p, schemes, sigma_scope)):
            times[t, j] = r.regen_time
            bws[t, j] = r.total_bandwidth
    return times, bws


def evaluate_point(p: Point, low: float, high: float, cfg: ExperimentConfig, threads: int = 1):
    """Per-trial times and bandwidths, shape ``(trials, schemes)``; STAR is always column 0."""
    schemes = ("STAR",) + tuple(s for s in cfg.schemes if s != "STAR")
    base = (p, low, high, cfg.seed)
    if threads <= 1:
        times, bws = _point_trials(base + (cfg.trials, schemes, not cfg.asymmetric, cfg.sigma_scope, 0))
    else:
        chunk = math.ceil(cfg.trials / threads)
        jobs = [
            base + (min(chunk, cfg.trials - s), schemes, not cfg.asymmetric, cfg.sigma_scope, s)
            for s in range(0, cfg.trials, chunk)
        ]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(_point_trials, jobs))
        times = np.vstack([a for a, _ in parts])
        bws = np.vstack([b for _, b in parts])
    return schemes, times, bws


def _summarise(schemes, times, bws, prefix: dict) -> list[dict]:
    """``norm_*`` divide the scheme's mean by STAR's mean over the same topologies;
    ``*_per_trial`` average the per-topology ratios instead."""
    rows = []
    for j, s in enumerate(schemes):
        rows.append({
            **prefix,
            "scheme": s,
            "trials": times.shape[0],
            "mean_time_s": float(times[:, j].mean()),
            "mean_bandwidth_mb": float(bws[:, j].mean()),
            "norm_time": float(times[:, j].mean() / times[:, 0].mean()),
            "norm_bandwidth": float(bws[:, j].mean() / bws[:, 0].mean()),
            "norm_time_per_trial": float((times[:, j] / times[:, 0]).mean()),
            "norm_bandwidth_per_trial": float((bws[:, j] / bws[:, 0]).mean()),
        })
    return rows


def make_point(cfg: ExperimentConfig, d: int, alpha_mode=None) -> Point:
    alpha = alpha_for(cfg.alpha_mode if alpha_mode is None else alpha_mode, cfg.M, cfg.k, d)
    return Point(d, cfg.k, cfg.M, alpha, conventional_beta(alpha, d, cfg.k, cfg.M))


def d_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[dict]:
    rows = []
    for d in range(cfg.d_range[0], cfg.d_range[1] + 1):
        p = make_point(cfg, d)
        rows += _summarise(*evaluate_point(p, cfg.low, cfg.high, cfg, threads), {"d": d})
    return rows


def variance_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[dict]:
    rows = []
    p = make_point(cfg, cfg.d)
    for low, high in cfg.distributions:
        prefix = {"dist": f"U[{low:g},{high:g}]", "low": low, "high": high}
        rows += _summarise(*evaluate_point(p, low, high, cfg, threads), prefix)
    return rows


def alpha_sweep(cfg: ExperimentConfig, threads: int = 1) -> list[dict]:
    rows = []
    for frac in cfg.alpha_grid:
        p = make_point(cfg, cfg.d, frac)
        prefix = {"alpha_fraction": frac, "alpha": p.alpha, "beta": p.beta}
        rows += _summarise(*evaluate_point(p, cfg.low, cfg.high, cfg, threads), prefix)
    return rows


# coded repair rounds ----------------------------------------------------------


def coded_event(net: OverlayNetwork, p: Point, scheme: str, failed: int, providers, sigma_scope: str = "all") -> RepairEvent:
    """Solve the scheme on ``net`` and turn it into a whole-block repair event."""
    r = solve_scheme(net, p, scheme, sigma_scope)
    tree = RegenerationTree(r.tree)
    if scheme in ("STAR", "FR"):
        return star_event(failed, providers, round_up(r.own[1:]), p.alpha, scheme)
    if scheme == "TR":
        b = int(round_up([p.beta])[0])
        return tree_event(failed, providers, tree, np.r_[0, np.full(p.d, b)], tr_flows(tree, b, p.alpha), scheme)
    own, flow = integral_tree_traffic(tree, r.own, p.alpha, constant_flow=scheme == "RCTREE")
    return tree_event(failed, providers, tree, own, flow, scheme)


@dataclass
class RoundRecord:
    round: int
    scheme: str
    failed: int
    success: float
    failing: list = field(default_factory=list)
    cut_ok: bool | None = None
    worst_cut: float | None = None
    worst_subset: tuple | None = None


def coded_run(cfg: ExperimentConfig, scheme, rounds: int, seed: int, min_cut: bool = False, rep: int = 0, mds_mode: str | None = None):
    """Yield one ``RoundRecord`` per round (round 0 = fresh system).

    ``scheme`` may be a name or a callable ``round -> name`` for mixed histories.
    """
    params = SystemParams.from_alpha(cfg.n, cfg.k, cfg.d, cfg.M, alpha_for(cfg.alpha_mode, cfg.M, cfg.k, cfg.d))
    if not params.integral:
        raise ConfigError(f"coded mode needs whole-block M, alpha, beta; got {params}")
    p = Point(cfg.d, cfg.k, params.M, params.alpha, params.beta)
    rng = trial_rng(seed, rep, 0)
    system = distribute(None, params, int(rng.integers(2**63)))
    graph = InfoFlowGraph(cfg.n, params.alpha) if min_cut else None
    pick = scheme if callable(scheme) else (lambda _r: scheme)
    fixed = cfg.fixed_network()
    mode = mds_mode or ("exhaustive" if cfg.subsets is None else "sampled")

    def record(rnd, name, failed):
        sub_rng = trial_rng(seed, rep, rnd, 1)
        rep_ = mds_check(system, mode, cfg.subsets or 0, sub_rng)
        rec = RoundRecord(rnd, name, failed, 1 - len(rep_.failing_subsets) / rep_.checked, rep_.failing_subsets)
        if graph is not None:
            from .infoflow import verify_scheme_min_cut

            cut = verify_scheme_min_cut(graph, cfg.k, params.M, mode, cfg.subsets or 0, trial_rng(seed, rep, rnd, 1))
            rec.cut_ok, rec.worst_cut, rec.worst_subset = cut.ok, cut.worst_cut, cut.worst_subset
        return rec

    yield record(0, pick(0), -1)
    for rnd in range(1, rounds + 1):
        r_rng = trial_rng(seed, rep, rnd)
        failed = int(r_rng.integers(cfg.n)) if cfg.random_failure else (rnd - 1) % cfg.n
        alive = [u for u in range(cfg.n) if u != failed]
        if fixed is not None and cfg.d == len(alive):
            providers = alive
        else:
            providers = [int(x) for x in r_rng.choice(alive, size=cfg.d, replace=False)]
        net = fixed if fixed is not None else sample_topology(cfg.d, cfg.low, cfg.high, r_rng, not cfg.asymmetric)
        name = pick(rnd)
        ev = coded_event(net, p, name, failed, providers, cfg.sigma_scope)
        execute_repair(system, ev, int(r_rng.integers(2**63)))
        if graph is not None:
            graph.apply(ev)
        yield record(rnd, name, failed)


def repair_round_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[dict]:
    rows = []
    for scheme in cfg.schemes:
        success = np.zeros((cfg.trials, cfg.rounds + 1))
        for rep in range(cfg.trials):
            for rec in coded_run(cfg, scheme, cfg.rounds, cfg.seed, rep=rep):
                success[rep, rec.round] = rec.success
        for rnd in range(cfg.rounds + 1):
            rows.append({
                "round": rnd,
                "scheme": scheme,
                "trials": cfg.trials,
                "success_prob": float(success[:, rnd].mean()),
                "all_ok_fraction": float((success[:, rnd] == 1.0).mean()),
            })
    return rows


SWEEPS = {"d": d_sweep, "variance": variance_sweep, "alpha": alpha_sweep, "rounds": repair_round_experiment}


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def write_csv(rows: list[dict], path) -> Path:
    path = Path(path)
    path.write_text(rows_to_csv(rows))
    return path
