import csv
import io

import numpy as np
import pytest

from regenlab import sim
from regenlab.sim import ConfigError, ExperimentConfig
from regenlab.topologies import fig1


def small(**kw):
    base = dict(n=8, k=3, M=120.0, d=5, d_range=(5, 6), trials=6, seed=3,
                distributions=((1.0, 120.0), (90.0, 120.0)), alpha_grid=(0.0, 1.0))
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_defaults_and_validation():
    cfg = ExperimentConfig()
    assert cfg.d_range == (6, 19) and cfg.schemes == ("STAR", "FR", "TR", "FTR")
    for bad in [dict(k=0), dict(d=20), dict(d_range=(3, 10)), dict(low=-1), dict(schemes=["X"]),
                dict(mode="both"), dict(alpha_mode="mid"), dict(alpha_mode=2.0), dict(trials=0)]:
        with pytest.raises(ConfigError):
            ExperimentConfig(**bad)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig(n=5, k=2, d=3, topology="fig1")


def test_config_json_roundtrip(tmp_path):
    cfg = small()
    path = tmp_path / "c.json"
    import json

    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_json(path) == cfg
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(path)


def test_alpha_for():
    assert sim.alpha_for("MSR", 1000, 5, 10) == 200
    mbr = sim.alpha_for("MBR", 1000, 5, 10)
    assert mbr == pytest.approx(10 * 2 * 1000 / (5 * 16))
    assert sim.alpha_for(0.5, 1000, 5, 10) == pytest.approx((200 + mbr) / 2)


def test_sample_topology():
    net = sim.sample_topology(6, 10, 20, np.random.default_rng(0))
    off = net.cap[~np.eye(7, dtype=bool)]
    assert np.all((off >= 10) & (off <= 20))
    assert np.array_equal(net.cap, net.cap.T)
    asym = sim.sample_topology(6, 10, 20, np.random.default_rng(0), symmetric=False)
    assert not np.array_equal(asym.cap, asym.cap.T)


def test_five_node_schemes():
    sc = fig1()
    p = sim.Point(sc.d, sc.k, sc.M, sc.alpha, sc.beta)
    got = {r.scheme: r.regen_time for r in sim.run_trial(sc.net, p)}
    assert got["STAR"] == pytest.approx(8)
    assert got["FR"] == pytest.approx(3)
    assert got["TR"] == pytest.approx(4)
    assert got["FTR"] == pytest.approx(8 / 3)
    assert got["RCTREE"] > 0


def test_sweeps_deterministic_and_thread_independent():
    cfg = small()
    a = sim.d_sweep(cfg)
    b = sim.d_sweep(cfg)
    c = sim.d_sweep(cfg, threads=2)
    assert a == b
    for x, y in zip(a, c):
        assert x.keys() == y.keys()
        assert x["norm_time"] == pytest.approx(y["norm_time"], rel=1e-12)


def test_sweep_rows():
    cfg = small()
    rows = sim.variance_sweep(cfg)
    assert len(rows) == 2 * 4
    star = [r for r in rows if r["scheme"] == "STAR"]
    assert all(r["norm_time"] == 1.0 == r["norm_time_per_trial"] for r in star)
    rows = sim.alpha_sweep(cfg)
    assert {r["alpha_fraction"] for r in rows} == {0.0, 1.0}
    for r in rows:
        assert 0 < r["norm_time"] <= 1 + 1e-9


def test_csv_output(tmp_path):
    rows = sim.d_sweep(small())
    path = sim.write_csv(rows, tmp_path / "out.csv")
    parsed = list(csv.DictReader(io.StringIO(path.read_text())))
    assert len(parsed) == len(rows)
    assert float(parsed[0]["norm_time"]) == pytest.approx(rows[0]["norm_time"], rel=1e-9)
    assert sim.rows_to_csv([]) == ""


def test_coded_run_rounds():
    cfg = ExperimentConfig(n=6, k=3, d=4, M=18, mode="coded", trials=1, subsets=None, seed=1)
    recs = list(sim.coded_run(cfg, "FTR", 6, seed=1, min_cut=True))
    assert [r.round for r in recs] == list(range(7))
    assert recs[0].failed == -1
    assert [r.failed for r in recs[1:]] == [0, 1, 2, 3, 4, 5]
    assert all(r.success == 1.0 and r.cut_ok for r in recs)


def test_coded_run_rejects_fractional_blocks():
    cfg = ExperimentConfig(n=6, k=3, d=4, M=20, mode="coded", trials=1)
    with pytest.raises(ConfigError):
        next(sim.coded_run(cfg, "STAR", 1, seed=0))


def test_mixed_scheme_history():
    cfg = ExperimentConfig(n=6, k=3, d=4, M=18, mode="coded", trials=1, subsets=None)
    names = ["STAR", "FR", "TR", "FTR"]
    recs = list(sim.coded_run(cfg, lambda r: names[r % 4], 4, seed=2, min_cut=True))
    assert [r.scheme for r in recs[1:]] == ["FR", "TR", "FTR", "STAR"]


def test_repair_round_experiment_rows():
    cfg = ExperimentConfig(n=6, k=3, d=4, M=18, mode="coded", trials=2, rounds=3, subsets=None,
                           schemes=["FTR", "RCTREE"])
    rows = sim.repair_round_experiment(cfg)
    assert len(rows) == 2 * 4
    assert all(0 <= r["success_prob"] <= 1 for r in rows)
    assert [r["success_prob"] for r in rows if r["scheme"] == "FTR"] == [1.0] * 4
