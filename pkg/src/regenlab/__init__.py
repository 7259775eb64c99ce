"""Repair schemes for erasure-coded distributed storage over heterogeneous links."""
from .codec import SystemParams
from .ftr import FtrSolution, ftr_heuristic, ftr_solve, mds_traffic_ok, time_for_alloc, tree_optimum
from .region import FeasibleRegion, conventional_beta, fr_solve, heuristic_region, msr_closed_form, msr_region
from .tree import OverlayNetwork, RegenerationTree, greedy_tree, brute_force_ort, regen_time, tr_flows

__all__ = [
    "FeasibleRegion", "FtrSolution", "OverlayNetwork", "RegenerationTree", "SystemParams",
    "greedy_tree", "ftr_heuristic", "brute_force_ort", "conventional_beta", "fr_solve", "ftr_solve",
    "heuristic_region", "msr_closed_form", "msr_region", "regen_time", "mds_traffic_ok",
    "time_for_alloc", "tr_flows", "tree_optimum",
]
