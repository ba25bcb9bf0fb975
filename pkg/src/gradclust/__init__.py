"""Clustering engine that grows clusters by community detection and gradual
merging on similarity graphs, with contrastive embedding refinement."""

from .detect import DetectionResult, is_internally_connected, leiden, louvain, modularity
from .graph import WeightedGraph, avg_degree, build_graph, cosine_similarity
from .merging import (
    MergeCandidate,
    community_distance,
    delta_avg_degree,
    delta_modularity,
    ensemble_scores,
    merge_round,
)
from .metrics import accuracy, ari, nmi, purity
from .model import ClusterState, Community, Dataset, Partition, RunConfig, centroid
from .pipeline import RunReport, generate_blobs, parse_config, run_pipeline
from .refine import RefineBatch, infonce_grad, infonce_loss, refine_embeddings
from .seeding import detect_initial_communities, kmeans_init, risk_screen, select_main

__version__ = "0.1.0"

__all__ = [
    "ClusterState",
    "Community",
    "Dataset",
    "DetectionResult",
    "MergeCandidate",
    "Partition",
    "RefineBatch",
    "RunConfig",
    "RunReport",
    "WeightedGraph",
    "accuracy",
    "ari",
    "avg_degree",
    "build_graph",
    "centroid",
    "community_distance",
    "cosine_similarity",
    "delta_avg_degree",
    "delta_modularity",
    "detect_initial_communities",
    "ensemble_scores",
    "generate_blobs",
    "infonce_grad",
    "infonce_loss",
    "is_internally_connected",
    "kmeans_init",
    "leiden",
    "louvain",
    "merge_round",
    "modularity",
    "nmi",
    "parse_config",
    "purity",
    "refine_embeddings",
    "risk_screen",
    "run_pipeline",
    "select_main",
]
