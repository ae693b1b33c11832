"""
Evaluation metrics for backmapped structures.
"""
from .bond_graph import exclusion_codes, exclusion_pairs, ged_ratio, infer_bond_graph, reference_graph
from .histograms import AtomSelector, DistanceHistogram, distance_histogram, pair_distances
from .interactions import InteractionSet, identify_interactions, interaction_scores
from .metrics import MetricsReport, StructureMetrics, clash_ratio, clash_ratio_from_coords, frame_pairs, rmsd
from .neighbors import neighbor_pairs, nonbonded_pairs
from .runner import FrameRunner

__all__ = [
    "AtomSelector",
    "DistanceHistogram",
    "FrameRunner",
    "InteractionSet",
    "MetricsReport",
    "StructureMetrics",
    "clash_ratio",
    "clash_ratio_from_coords",
    "distance_histogram",
    "exclusion_codes",
    "exclusion_pairs",
    "frame_pairs",
    "ged_ratio",
    "identify_interactions",
    "infer_bond_graph",
    "interaction_scores",
    "neighbor_pairs",
    "nonbonded_pairs",
    "pair_distances",
    "reference_graph",
    "rmsd",
]
