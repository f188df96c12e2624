"""Shared independent oracles for the model tests: a scalar reimplementation
of the losses in plain Python floats, central finite differences, and a
generator of small random gradient-check instances."""

import math

import numpy as np

from gemsec.graph import compute_edge_weights, from_edges
from gemsec.model import (
    NoiseDistribution,
    TrainConfig,
    full_loss,
    init_state,
    sample_noise,
)
from gemsec.walks import WalkConfig, extract_features, first_order_walk


def scalar_sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def scalar_nce_loss(emb, sources, contexts, noise_ids):
    """Mean NCE loss computed pair by pair with math-library floats."""
    total = 0.0
    for i in range(len(sources)):
        fv = emb[sources[i]]
        fn = emb[contexts[i]]
        dot = sum(a * b for a, b in zip(fv, fn))
        total += -math.log(scalar_sigmoid(dot))
        for u in noise_ids[i]:
            dot_u = sum(a * b for a, b in zip(fv, emb[u]))
            total += -math.log(scalar_sigmoid(-dot_u))
    return total / len(sources)


def scalar_full_loss(emb, centers, sources, contexts, noise_ids, edges, edge_weights,
                     gamma, lam):
    loss = scalar_nce_loss(emb, sources, contexts, noise_ids)
    for v in sorted(set(sources)):
        best = min(
            math.sqrt(sum((a - b) ** 2 for a, b in zip(emb[v], mu)))
            for mu in centers
        )
        loss += gamma * best
    for a, b in edges:
        dist = math.sqrt(sum((x - y) ** 2 for x, y in zip(emb[a], emb[b])))
        loss += lam * edge_weights[(min(a, b), max(a, b))] * dist
    return loss


def fd_node_gradient(state, v, batch, noise_ids, gamma, lam, weights, h=1e-6):
    grad = np.zeros(state.dims)
    for j in range(state.dims):
        orig = state.embeddings[v, j]
        state.embeddings[v, j] = orig + h
        up = full_loss(state, batch, noise_ids, gamma, lam, weights)
        state.embeddings[v, j] = orig - h
        down = full_loss(state, batch, noise_ids, gamma, lam, weights)
        state.embeddings[v, j] = orig
        grad[j] = (up - down) / (2 * h)
    return grad


def fd_center_gradient(state, batch, noise_ids, gamma, lam, weights, h=1e-6):
    grad = np.zeros_like(state.centers)
    for c in range(len(state.centers)):
        for j in range(state.dims):
            orig = state.centers[c, j]
            state.centers[c, j] = orig + h
            up = full_loss(state, batch, noise_ids, gamma, lam, weights)
            state.centers[c, j] = orig - h
            down = full_loss(state, batch, noise_ids, gamma, lam, weights)
            state.centers[c, j] = orig
            grad[c, j] = (up - down) / (2 * h)
    return grad


def rel_err(a, b):
    return np.max(np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b))))


def make_gradient_instance(seed, margin=1e-3):
    """Random small instance away from the norm singularities and assignment
    ties, or None when the guards reject the draw."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 11))
    d = int(rng.integers(1, 5))
    clusters = int(rng.integers(1, 4))
    k = int(rng.integers(1, 4))

    edges = [(i, i + 1) for i in range(n - 1)]
    for i in range(n):
        for j in range(i + 2, n):
            if rng.random() < 0.3:
                edges.append((i, j))
    g = from_edges(n, edges)

    cfg = TrainConfig(dims=d, clusters=clusters, negatives=k,
                      walk=WalkConfig(walk_length=6, window=2))
    state = init_state(n, cfg, seed=int(rng.integers(1 << 30)))
    state.embeddings[:] = rng.standard_normal((n, d))
    state.centers[:] = rng.standard_normal((clusters, d))

    walk = first_order_walk(g, int(rng.integers(n)), 6, rng)
    batch = extract_features(walk, 2)
    noise = NoiseDistribution.from_graph(g)
    noise_ids = sample_noise(noise, batch, k, rng)
    weights = compute_edge_weights(g)
    gamma = float(rng.uniform(0.2, 1.5))
    lam = float(rng.uniform(0.2, 1.5))

    # reject draws near the min/norm kinks where the loss is not differentiable
    batch_nodes = np.unique(batch.sources)
    dists = np.linalg.norm(state.embeddings[batch_nodes][:, None, :]
                           - state.centers[None, :, :], axis=2)
    closest = np.sort(dists, axis=1)
    if np.any(closest[:, 0] < margin):
        return None
    if clusters > 1 and np.any(closest[:, 1] - closest[:, 0] < margin):
        return None
    for a, b in batch.traversed_edges:
        if np.linalg.norm(state.embeddings[a] - state.embeddings[b]) < margin:
            return None
    return state, batch, noise_ids, weights, gamma, lam
