"""Why forwarding a fixed amount per tree link loses data.

Repairs v0 on the five-node network with a tree where v4 relays through v1
and every link carries exactly beta. The relay squeezes two providers' worth
of information into one share, so a collector reading v0 and v3 is left short.
The same event is checked symbolically (max-flow) and by actual coding (rank).
"""
import numpy as np

from regenlab import sim
from regenlab.codec import SystemParams, distribute, execute_repair, mds_check
from regenlab.infoflow import build_graph, verify_scheme_min_cut
from regenlab.topologies import fig1


def main():
    sc = fig1()
    p = sim.Point(sc.d, sc.k, sc.M, sc.alpha, sc.beta)
    for scheme in ("RCTREE", "TR", "FTR"):
        ev = sim.coded_event(sc.net, p, scheme, 0, [1, 2, 3, 4])
        cut = verify_scheme_min_cut(build_graph(5, [ev], sc.alpha), sc.k, sc.M)
        print(f"{scheme:<6} uplink flows {list(ev.flow)} Mb -> worst collector cut {cut.worst_cut:g} Mb "
              f"at {cut.worst_subset}")

    print("\nnow with real coding over GF(2^16), one block = 10 Mb")
    unit = 10.0
    bp = sim.Point(sc.d, sc.k, sc.M / unit, sc.alpha / unit, sc.beta / unit)
    params = SystemParams(5, 2, 4, bp.M, bp.alpha, bp.beta)
    for scheme in ("RCTREE", "FTR"):
        system = distribute(None, params, seed=1)
        execute_repair(system, sim.coded_event(sc.net.scaled(1 / unit), bp, scheme, 0, [1, 2, 3, 4]), seed=2)
        rep = mds_check(system)
        print(f"{scheme:<6} decodable subsets {rep.checked - len(rep.failing_subsets)}/{rep.checked}, "
              f"failing {rep.failing_subsets}, lowest rank {rep.min_rank}/{int(bp.M)} blocks")

    print("\nrepeated repairs make it worse:")
    cfg = sim.ExperimentConfig(n=10, k=5, d=9, M=25, mode="coded", trials=10, rounds=6, subsets=None,
                               schemes=["RCTREE", "FTR"], seed=3)
    for row in sim.repair_round_experiment(cfg):
        print(f"  round {row['round']} {row['scheme']:<6} success {row['success_prob']:.3f}")


if __name__ == "__main__":
    main()
