"""Cluster extraction and quality scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .model import EmbeddingState


@dataclass(frozen=True)
class ClusterAssignment:
    """Hard node-to-cluster assignment."""

    labels: np.ndarray  # (node_count,) cluster id per node
    cluster_count: int

    def __post_init__(self):
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.cluster_count):
            raise ValueError("label out of range")

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)


def assign_clusters(state: EmbeddingState) -> ClusterAssignment:
    """Assign every node to its nearest cluster center (ties to the lowest
    cluster id)."""
    dists = np.linalg.norm(state.embeddings[:, None, :] - state.centers[None, :, :], axis=2)
    return ClusterAssignment(labels=np.argmin(dists, axis=1), cluster_count=len(state.centers))


def modularity(g: Graph, assignment: ClusterAssignment) -> float:
    """Newman modularity of a hard partition, computed from per-community
    edge and degree sums in O(|E| + |V|).

    Q = sum_c [ m_c / m  -  (D_c / 2m)^2 ]  with m_c the number of
    within-community edges, D_c the total degree of community c and m the
    number of edges.
    """
    labels = np.asarray(assignment.labels)
    if len(labels) != g.node_count:
        raise ValueError(f"assignment covers {len(labels)} nodes, graph has {g.node_count}")
    m = g.edge_count
    if m == 0:
        raise ValueError("modularity is undefined for a graph without edges")
    edges = g.edges()
    same = labels[edges[:, 0]] == labels[edges[:, 1]]
    intra = np.bincount(labels[edges[:, 0]][same], minlength=assignment.cluster_count)
    deg_sum = np.bincount(labels, weights=g.degrees(), minlength=assignment.cluster_count)
    return float(np.sum(intra / m - (deg_sum / (2.0 * m)) ** 2))


def _kmeans_pp_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    closest_sq = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = closest_sq.sum()
        if total == 0:
            centers[i] = points[rng.integers(n)]
            continue
        cum = np.cumsum(closest_sq / total)
        centers[i] = points[min(np.searchsorted(cum, rng.random(), side="right"), n - 1)]
        closest_sq = np.minimum(closest_sq, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def kmeans_fit(points: np.ndarray, k: int, max_iter: int, rng: np.random.Generator):
    """One Lloyd run from a k-means++ seeding.

    Returns (centers, labels, wcss_history); the within-cluster sum of
    squares is recorded after every assignment step and never increases.
    Empty clusters are re-seeded to the point farthest from its center.
    """
    centers = _kmeans_pp_seed(points, k, rng)
    labels = np.zeros(len(points), dtype=np.int64)
    history = []
    for _ in range(max_iter):
        dists_sq = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dists_sq, axis=1)
        history.append(float(dists_sq[np.arange(len(points)), new_labels].sum()))
        for c in range(k):
            members = points[new_labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                farthest = np.argmax(dists_sq[np.arange(len(points)), new_labels])
                centers[c] = points[farthest]
        if np.array_equal(new_labels, labels) and len(history) > 1:
            labels = new_labels
            break
        labels = new_labels
    return centers, labels, history


def kmeans(points: np.ndarray, k: int, max_iter: int = 100, seed: int = 0,
           n_init: int = 1) -> ClusterAssignment:
    """Cluster points into k groups; deterministic per seed. ``n_init``
    restarts keep the run with the lowest final within-cluster sum of
    squares."""
    points = np.asarray(points, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(points) < k:
        raise ValueError(f"cannot form {k} clusters from {len(points)} points")
    rng = np.random.default_rng(seed)
    best_labels, best_wcss = None, np.inf
    for _ in range(n_init):
        _, labels, history = kmeans_fit(points, k, max_iter, rng)
        if history[-1] < best_wcss:
            best_wcss = history[-1]
            best_labels = labels
    return ClusterAssignment(labels=best_labels, cluster_count=k)
