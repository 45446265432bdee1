"""Diversity-driven social workload synthesis and replay for Git forges."""

__version__ = "0.1.0"

from .dataset import (
    EdgeList,
    EventCounts,
    EventType,
    FollowSet,
    parse_gharchive_lines,
    read_edge_list,
    summarize,
    synthetic_community,
    write_edge_list,
)
from .discrepancy import DiscrepancyConfig, star_discrepancy_approx, star_discrepancy_exact
from .evolve import EaConfig, EvolutionLog, evaluate, mutate, run_ea
from .features import FeaturePoints, PageRankConfig, feature_points, pagerank
from .followgraph import InteractionGraph, assemble_graph, build_count_matrix, derive_follows

__all__ = [
    "DiscrepancyConfig",
    "EaConfig",
    "EdgeList",
    "EventCounts",
    "EventType",
    "EvolutionLog",
    "FeaturePoints",
    "FollowSet",
    "InteractionGraph",
    "PageRankConfig",
    "assemble_graph",
    "build_count_matrix",
    "derive_follows",
    "evaluate",
    "feature_points",
    "mutate",
    "pagerank",
    "parse_gharchive_lines",
    "read_edge_list",
    "run_ea",
    "star_discrepancy_approx",
    "star_discrepancy_exact",
    "summarize",
    "synthetic_community",
    "write_edge_list",
]
