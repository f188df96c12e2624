"""Undirected graph container, edge-list ingestion, Jaccard edge weights and
random-graph generation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

_SEPARATORS = {"csv": ",", "tsv": "\t", "whitespace": None, "auto": "auto"}


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph in compressed adjacency form.

    Node ids are dense integers 0..node_count-1. Neighbor lists are sorted
    ascending, contain no self-loops and no duplicates. ``edge_count`` counts
    each undirected edge once.
    """

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    edge_count: int

    def __post_init__(self):
        self.indptr.flags.writeable = False
        self.indices.flags.writeable = False

    def neighbors(self, v: int) -> np.ndarray:
        if not 0 <= v < self.node_count:
            raise ValueError(f"node id {v} out of range [0, {self.node_count})")
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> np.ndarray:
        """All undirected edges once, as an (edge_count, 2) array with u < v."""
        u = np.repeat(np.arange(self.node_count), self.degrees())
        v = self.indices
        keep = u < v
        return np.column_stack([u[keep], v[keep]])

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return i < len(nbrs) and nbrs[i] == v


def from_edges(node_count: int, edges) -> Graph:
    """Build a Graph from an iterable of (u, v) pairs over dense ids.

    Self-loops are dropped and duplicates merged; both directions of each
    surviving edge are stored so neighbor queries are O(1) slices.
    """
    pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if node_count < 1:
        raise ValueError("graph must have at least one node")
    if pairs.size and (pairs.min() < 0 or pairs.max() >= node_count):
        raise ValueError("edge endpoint out of range")
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    uniq = np.unique(np.column_stack([lo, hi]), axis=0) if len(lo) else np.empty((0, 2), np.int64)
    both = np.concatenate([uniq, uniq[:, ::-1]]) if len(uniq) else np.empty((0, 2), np.int64)
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=node_count)
    indptr = np.concatenate([[0], np.cumsum(counts)])
    return Graph(
        node_count=node_count,
        indptr=indptr.astype(np.int64),
        indices=both[:, 1].copy(),
        edge_count=len(uniq),
    )


def _split_line(line: str, fmt: str):
    if fmt == "auto":
        return line.replace(",", " ").split()
    sep = _SEPARATORS[fmt]
    return [tok for tok in line.split(sep) if tok.strip()]


def load_edge_list(path, fmt: str = "auto") -> tuple[Graph, dict[int, int]]:
    """Read an edge list file into a Graph plus the original->dense id map.

    Accepts comma-, tab- or whitespace-separated integer pairs; lines starting
    with ``#`` and blank lines are skipped. Self-loops are dropped, duplicate
    edges merged, and ids compacted to 0..n-1 in order of first appearance.

    Raises ValueError on a malformed line (with its line number) or if the
    file yields no nodes at all.
    """
    if fmt not in _SEPARATORS:
        raise ValueError(f"unknown edge list format {fmt!r}")
    path = Path(path)
    id_map: dict[int, int] = {}
    raw_edges = []
    self_loops = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = _split_line(line, fmt)
            if len(tokens) != 2:
                raise ValueError(f"{path}:{lineno}: expected two integer tokens, got {line!r}")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer token in {line!r}") from None
            for orig in (u, v):
                if orig not in id_map:
                    id_map[orig] = len(id_map)
            if u == v:
                self_loops += 1
                continue
            raw_edges.append((id_map[u], id_map[v]))
    if not id_map:
        raise ValueError(f"{path}: empty graph (no nodes)")
    g = from_edges(len(id_map), raw_edges)
    dropped = len(raw_edges) - g.edge_count
    if self_loops or dropped:
        log.info("%s: dropped %d self-loops, merged %d duplicate edges", path, self_loops, dropped)
    return g, id_map


def jaccard_overlap(g: Graph, u: int, v: int) -> float:
    """Jaccard similarity of the open neighborhoods of two distinct nodes.

    Endpoints are not excluded from each other's neighbor sets; an empty
    union gives 0.
    """
    if u == v:
        raise ValueError("jaccard_overlap requires two distinct nodes")
    nu, nv = g.neighbors(u), g.neighbors(v)
    inter = np.intersect1d(nu, nv, assume_unique=True).size
    union = nu.size + nv.size - inter
    return inter / union if union else 0.0


@dataclass(frozen=True)
class EdgeWeightTable:
    """Per-edge weights in [0, 1], keyed by unordered node pair."""

    weights: dict = field(repr=False)

    def __getitem__(self, edge) -> float:
        u, v = edge
        key = (u, v) if u < v else (v, u)
        try:
            return self.weights[key]
        except KeyError:
            raise KeyError(f"no weight for edge {edge}") from None

    def __len__(self) -> int:
        return len(self.weights)

    def items(self):
        return self.weights.items()


def compute_edge_weights(g: Graph) -> EdgeWeightTable:
    """Jaccard neighborhood overlap for every edge of the graph."""
    weights = {}
    for u, v in g.edges():
        weights[(int(u), int(v))] = jaccard_overlap(g, int(u), int(v))
    return EdgeWeightTable(weights)


def erdos_renyi(n: int, avg_degree: float, seed: int) -> Graph:
    """G(n, p) random graph with p = avg_degree / (n - 1), deterministic per seed.

    Uses geometric edge skipping so generation is O(n + edges).
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    if not 0 < avg_degree <= n - 1:
        raise ValueError("avg_degree must be in (0, n-1]")
    p = avg_degree / (n - 1)
    rng = np.random.default_rng(seed)
    edges = []
    if p >= 1.0:
        for v in range(1, n):
            for w in range(v):
                edges.append((w, v))
        return from_edges(n, edges)
    log_1p = math.log1p(-p)
    v, w = 1, -1
    while v < n:
        r = rng.random()
        w = w + 1 + int(math.log1p(-r) / log_1p)
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            edges.append((w, v))
    return from_edges(n, edges)
