"""Random-walk corpus generation and window feature extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph

# Entropy tags keep the shuffle / walk / noise RNG streams disjoint while all
# deriving from (seed, epoch, source), so corpora do not depend on worker
# scheduling.
SHUFFLE_STREAM = 1
WALK_STREAM = 2
NOISE_STREAM = 3


@dataclass(frozen=True)
class WalkConfig:
    """Sampling controls: walks per node, walk length, context window, walk
    order and the second-order bias parameters."""

    walks_per_node: int = 5
    walk_length: int = 80
    window: int = 5
    order: str = "first"
    return_param: float = 1.0
    inout_param: float = 1.0
    seed: int = 0

    def validate(self):
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if not 1 <= self.window < self.walk_length:
            raise ValueError("window must satisfy 1 <= window < walk_length")
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if self.return_param <= 0 or self.inout_param <= 0:
            raise ValueError("return and in-out parameters must be positive")
        if self.order not in ("first", "second"):
            raise ValueError(f"unknown walk order {self.order!r}")


@dataclass(frozen=True)
class WalkContextBatch:
    """Windowed (source, context) pairs and the multiset of edges one walk
    traversed."""

    sources: np.ndarray
    contexts: np.ndarray
    traversed_edges: np.ndarray  # (steps, 2), consecutive walk nodes

    def __len__(self) -> int:
        return len(self.sources)

    def pair_set(self) -> set:
        return set(zip(self.sources.tolist(), self.contexts.tolist()))


def walk_rng(seed: int, epoch: int, source: int) -> np.random.Generator:
    return np.random.default_rng([seed, WALK_STREAM, epoch, source])


def noise_rng(seed: int, epoch: int, source: int) -> np.random.Generator:
    return np.random.default_rng([seed, NOISE_STREAM, epoch, source])


def first_order_walk(g: Graph, source: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform-neighbor walk of the given length; an isolated source yields
    the length-1 walk [source]."""
    indptr, indices = g.indptr, g.indices
    if not 0 <= source < g.node_count:
        raise ValueError(f"node id {source} out of range")
    if indptr[source] == indptr[source + 1]:
        return np.array([source], dtype=np.int64)
    walk = np.empty(length, dtype=np.int64)
    walk[0] = source
    cur = source
    for i in range(1, length):
        lo, hi = indptr[cur], indptr[cur + 1]
        cur = indices[lo + rng.integers(hi - lo)]
        walk[i] = cur
    return walk


def second_order_step_weights(g: Graph, prev: int, cur: int, p: float, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized transition weights from ``cur`` given the walk came from
    ``prev``: 1/p back to prev, 1 to common neighbors of prev, 1/q otherwise."""
    nbrs = g.neighbors(cur)
    weights = np.full(len(nbrs), 1.0 / q)
    weights[np.isin(nbrs, g.neighbors(prev), assume_unique=True)] = 1.0
    weights[nbrs == prev] = 1.0 / p
    return nbrs, weights


def second_order_walk(g: Graph, source: int, length: int, p: float, q: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Biased walk whose step distribution conditions on the previous node;
    p = q = 1 reduces to the uniform first-order walk."""
    if p <= 0 or q <= 0:
        raise ValueError("return and in-out parameters must be positive")
    indptr, indices = g.indptr, g.indices
    if not 0 <= source < g.node_count:
        raise ValueError(f"node id {source} out of range")
    if indptr[source] == indptr[source + 1]:
        return np.array([source], dtype=np.int64)
    walk = np.empty(length, dtype=np.int64)
    walk[0] = source
    # first step has no previous node and is uniform
    lo, hi = indptr[source], indptr[source + 1]
    walk[1] = indices[lo + rng.integers(hi - lo)]
    for i in range(2, length):
        nbrs, weights = second_order_step_weights(g, int(walk[i - 2]), int(walk[i - 1]), p, q)
        cum = np.cumsum(weights)
        walk[i] = nbrs[np.searchsorted(cum, rng.random() * cum[-1], side="right")]
    return walk


def sample_walk(g: Graph, source: int, cfg: WalkConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.order == "second":
        return second_order_walk(g, source, cfg.walk_length, cfg.return_param, cfg.inout_param, rng)
    return first_order_walk(g, source, cfg.walk_length, rng)


def extract_features(walk: np.ndarray, window: int) -> WalkContextBatch:
    """All ordered pairs (walk[i], walk[j]) with 0 < |i - j| <= window, windows
    truncated at the walk boundaries, plus the walk's consecutive edges."""
    if len(walk) == 0:
        raise ValueError("walk must be non-empty")
    walk = np.asarray(walk, dtype=np.int64)
    srcs, ctxs = [], []
    for off in range(1, window + 1):
        if off >= len(walk):
            break
        a, b = walk[:-off], walk[off:]
        srcs.extend([a, b])
        ctxs.extend([b, a])
    if srcs:
        sources = np.concatenate(srcs)
        contexts = np.concatenate(ctxs)
    else:
        sources = np.empty(0, dtype=np.int64)
        contexts = np.empty(0, dtype=np.int64)
    if len(walk) > 1:
        edges = np.column_stack([walk[:-1], walk[1:]])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return WalkContextBatch(sources=sources, contexts=contexts, traversed_edges=edges)


def epoch_order(node_count: int, epoch: int, seed: int) -> np.ndarray:
    """Uniform shuffle of the node ids, deterministic per (seed, epoch)."""
    if node_count < 1:
        raise ValueError("node_count must be >= 1")
    rng = np.random.default_rng([seed, SHUFFLE_STREAM, epoch])
    return rng.permutation(node_count)


def dump_walk(fh, walk: np.ndarray):
    """Append one walk as space-separated dense node ids."""
    fh.write(" ".join(str(int(v)) for v in walk))
    fh.write("\n")
