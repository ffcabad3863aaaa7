"""Hierarchical min-cut-tree clustering of software dependency graphs."""

from .cut_clustering import Partition, basic_cut_cluster, cut_tree_clusters, min_cut_tree
from .exporters import TextStyle, export_h3, export_text, export_treeviz, export_xml
from .hierarchizer import AlphaSearch, init_search, priority, run_search
from .maxflow import FlowNetwork, PushRelabel, max_flow, min_cut_between
from .metrics import PrefixStats, ubiquity_stats
from .normalizer import (LiftOrder, Leverage, NormalizationConfig, UndirectedGraph,
                         build_clustering_input, normalize)
from .perfectizer import PerfectizeConfig, RootHeuristic, perfectize
from .relation_graph import RelationGraph, RelationKind, load_relations, parse_relations
from .tree import ClusterTree, NestingViolation

__version__ = "0.1.0"

__all__ = [
    "AlphaSearch", "ClusterTree", "FlowNetwork", "LiftOrder", "Leverage",
    "NestingViolation", "NormalizationConfig", "Partition", "PerfectizeConfig",
    "PrefixStats", "PushRelabel", "RelationGraph", "RelationKind", "RootHeuristic",
    "TextStyle", "UndirectedGraph", "basic_cut_cluster", "build_clustering_input",
    "cut_tree_clusters", "export_h3", "export_text", "export_treeviz", "export_xml",
    "init_search", "load_relations", "max_flow", "min_cut_between", "min_cut_tree",
    "normalize", "parse_relations", "perfectize", "priority", "run_search",
    "ubiquity_stats",
]
