"""Graph embedding with self-clustering.

Learns skip-gram node embeddings jointly with a set of cluster centers; the
clustering weight is annealed over training and an optional smoothness
penalty ties embeddings of strongly overlapping neighbors together. Plain
DeepWalk is the degenerate mode with the clustering weight pinned to zero.
"""

from .evaluation import ClusterAssignment, assign_clusters, kmeans, modularity
from .graph import (
    EdgeWeightTable,
    Graph,
    compute_edge_weights,
    erdos_renyi,
    from_edges,
    jaccard_overlap,
    load_edge_list,
)
from .model import (
    EmbeddingState,
    NoiseDistribution,
    TrainConfig,
    adam_update,
    alpha_at,
    closest_center,
    full_loss,
    gamma_at,
    grad_centers,
    grad_node,
    init_state,
    nce_minibatch_loss,
    sample_noise,
    train,
)
from .walks import (
    WalkConfig,
    WalkContextBatch,
    epoch_order,
    extract_features,
    first_order_walk,
    second_order_walk,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterAssignment",
    "EdgeWeightTable",
    "EmbeddingState",
    "Graph",
    "NoiseDistribution",
    "TrainConfig",
    "WalkConfig",
    "WalkContextBatch",
    "adam_update",
    "alpha_at",
    "assign_clusters",
    "closest_center",
    "compute_edge_weights",
    "epoch_order",
    "erdos_renyi",
    "extract_features",
    "first_order_walk",
    "from_edges",
    "full_loss",
    "gamma_at",
    "grad_centers",
    "grad_node",
    "init_state",
    "jaccard_overlap",
    "kmeans",
    "load_edge_list",
    "modularity",
    "nce_minibatch_loss",
    "sample_noise",
    "second_order_walk",
    "train",
]
