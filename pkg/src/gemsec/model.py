"""Joint embedding-and-clustering optimizer.

Skip-gram embeddings with noise-contrastive estimation, an annealed
clustering cost pulling nodes toward learned centers, and an optional
smoothness penalty over the edges each walk traversed.
"""

from __future__ import annotations

import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .graph import EdgeWeightTable, Graph, compute_edge_weights
from .walks import (
    WalkConfig,
    WalkContextBatch,
    epoch_order,
    extract_features,
    noise_rng,
    sample_walk,
    walk_rng,
)

INIT_STREAM = 0

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    """Hyperparameters of one training run."""

    dims: int = 16
    clusters: int = 20
    negatives: int = 10
    gamma0: float = 0.1
    alpha0: float = 0.01
    alpha_final: float = 0.001
    smoothing: bool = False
    smoothness_weight: float = 0.0625
    deepwalk: bool = False            # force the clustering weight to 0 throughout
    noise: str = "degree"             # "degree": unigram^0.75; "uniform" over non-isolated nodes
    schedule_horizon: str = "paper"   # "paper": window*length*|V|*N; "reached": |V|*N
    walk: WalkConfig = field(default_factory=WalkConfig)
    seed: int = 0

    def validate(self):
        self.walk.validate()
        if self.dims < 1 or self.clusters < 1:
            raise ValueError("dims and clusters must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if not 0.0 < self.gamma0 <= 1.0:
            raise ValueError("gamma0 must be in (0, 1]")
        if self.alpha0 <= 0 or self.alpha_final <= 0 or self.alpha_final > self.alpha0:
            raise ValueError("need 0 < alpha_final <= alpha0")
        if self.smoothness_weight < 0:
            raise ValueError("smoothness_weight must be nonnegative")
        if self.noise not in ("degree", "uniform"):
            raise ValueError(f"unknown noise distribution {self.noise!r}")
        if self.schedule_horizon not in ("paper", "reached"):
            raise ValueError(f"unknown schedule_horizon {self.schedule_horizon!r}")

    def total_steps(self, node_count: int) -> int:
        per_node = node_count * self.walk.walks_per_node
        if self.schedule_horizon == "reached":
            return per_node
        return self.walk.window * self.walk.walk_length * per_node


@dataclass
class EmbeddingState:
    """Node embeddings, cluster centers and their optimizer moments."""

    embeddings: np.ndarray  # (node_count, dims)
    centers: np.ndarray     # (clusters, dims)
    emb_m1: np.ndarray
    emb_m2: np.ndarray
    ctr_m1: np.ndarray
    ctr_m2: np.ndarray
    step: int = 0

    @property
    def node_count(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dims(self) -> int:
        return self.embeddings.shape[1]


def init_state(node_count: int, cfg: TrainConfig, seed: int | None = None) -> EmbeddingState:
    """Embeddings and centers drawn i.i.d. uniform on [-1/(2d), 1/(2d)],
    moments zeroed; deterministic per seed."""
    if seed is None:
        seed = cfg.seed
    rng = np.random.default_rng([seed, INIT_STREAM])
    bound = 1.0 / (2.0 * cfg.dims)
    emb = rng.uniform(-bound, bound, size=(node_count, cfg.dims))
    ctr = rng.uniform(-bound, bound, size=(cfg.clusters, cfg.dims))
    return EmbeddingState(
        embeddings=emb,
        centers=ctr,
        emb_m1=np.zeros_like(emb),
        emb_m2=np.zeros_like(emb),
        ctr_m1=np.zeros_like(ctr),
        ctr_m2=np.zeros_like(ctr),
    )


def gamma_at(t: int, cfg: TrainConfig, total_steps: int) -> float:
    """Clustering weight after t steps: exponential ramp from gamma0 at t=0
    to 1 at t=total_steps. Identically 0 in deepwalk mode."""
    if cfg.deepwalk:
        return 0.0
    if not 0 <= t <= total_steps:
        raise ValueError("t must lie in [0, total_steps]")
    # == gamma0 * 10 ** (-t * log10(gamma0) / total_steps), written so the
    # endpoints come out exact
    return float(cfg.gamma0 ** (1.0 - t / total_steps))


def alpha_at(t: int, cfg: TrainConfig, total_steps: int) -> float:
    """Learning rate after t steps: linear ramp from alpha0 to alpha_final."""
    if not 0 <= t <= total_steps:
        raise ValueError("t must lie in [0, total_steps]")
    frac = t / total_steps
    return float(cfg.alpha0 * (1.0 - frac) + cfg.alpha_final * frac)


def closest_center(state: EmbeddingState, v: int) -> tuple[int, float]:
    """Nearest cluster center of node v and its distance; ties go to the
    lowest cluster id."""
    dists = np.linalg.norm(state.centers - state.embeddings[v], axis=1)
    c = int(np.argmin(dists))
    return c, float(dists[c])


@dataclass(frozen=True)
class NoiseDistribution:
    """Normalized per-node sampling weights for negative draws; support is
    the non-isolated nodes."""

    probs: np.ndarray
    cumulative: np.ndarray

    @classmethod
    def from_graph(cls, g: Graph, kind: str = "degree") -> "NoiseDistribution":
        deg = g.degrees().astype(np.float64)
        if kind == "degree":
            w = np.where(deg > 0, deg ** 0.75, 0.0)
        elif kind == "uniform":
            w = (deg > 0).astype(np.float64)
        else:
            raise ValueError(f"unknown noise distribution {kind!r}")
        total = w.sum()
        if total == 0:
            raise ValueError("graph has no edges; noise distribution is undefined")
        probs = w / total
        return cls(probs=probs, cumulative=np.cumsum(probs))

    def sample(self, rng: np.random.Generator, exclude: np.ndarray, k: int) -> np.ndarray:
        """Draw k noise nodes per row of ``exclude``, never returning the
        excluded (source) node of that row."""
        m = len(exclude)
        n = len(self.probs)
        draws = np.searchsorted(self.cumulative, rng.random((m, k)), side="right")
        draws = np.minimum(draws, n - 1)
        bad = draws == exclude[:, None]
        while bad.any():
            redraw = np.searchsorted(self.cumulative, rng.random(int(bad.sum())), side="right")
            draws[bad] = np.minimum(redraw, n - 1)
            bad = draws == exclude[:, None]
        return draws


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softplus(x: np.ndarray) -> np.ndarray:
    # log(1 + exp(x)) without overflow
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def sample_noise(noise: NoiseDistribution, batch: WalkContextBatch, k: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Frozen negative draws for a batch: shape (num_pairs, k), per-pair
    exclusion of the pair's source node."""
    if k < 1:
        raise ValueError("need at least one negative sample per pair")
    if len(batch) == 0:
        return np.empty((0, k), dtype=np.int64)
    return noise.sample(rng, batch.sources, k)


def _evaluate(f: np.ndarray, centers: np.ndarray, batch: WalkContextBatch,
              noise_ids: np.ndarray, gamma: float, lam: float,
              weights: EdgeWeightTable | None, want_grads: bool):
    """Loss of one minibatch and, when requested, its exact gradients as
    (embedding rows, row gradients, center rows, center row gradients)."""
    d = f.shape[1]
    m = len(batch)
    loss = 0.0
    idx_parts: list[np.ndarray] = []
    val_parts: list[np.ndarray] = []

    if m:
        src, ctx = batch.sources, batch.contexts
        fs, fc, fn = f[src], f[ctx], f[noise_ids]
        s_pos = np.einsum("ij,ij->i", fs, fc)
        s_neg = np.einsum("ij,ikj->ik", fs, fn)
        inv_m = 1.0 / m
        loss += (_softplus(-s_pos).sum() + _softplus(s_neg).sum()) * inv_m
        if want_grads:
            c_pos = (_sigmoid(s_pos) - 1.0) * inv_m
            c_neg = _sigmoid(s_neg) * inv_m
            idx_parts += [src, ctx, noise_ids.ravel()]
            val_parts += [
                c_pos[:, None] * fc + np.einsum("ik,ikj->ij", c_neg, fn),
                c_pos[:, None] * fs,
                (c_neg[:, :, None] * fs[:, None, :]).reshape(m * noise_ids.shape[1], d),
            ]

    batch_nodes = np.unique(batch.sources)
    ctr_rows = np.empty(0, dtype=np.int64)
    ctr_grads = np.empty((0, d))
    if gamma != 0.0 and len(batch_nodes):
        dists = np.linalg.norm(f[batch_nodes][:, None, :] - centers[None, :, :], axis=2)
        assign = np.argmin(dists, axis=1)
        diffs = f[batch_nodes] - centers[assign]
        norms = dists[np.arange(len(batch_nodes)), assign]
        loss += gamma * norms.sum()
        if want_grads:
            # zero subgradient where a node sits exactly on its center
            unit = np.divide(diffs, norms[:, None], out=np.zeros_like(diffs), where=norms[:, None] > 0)
            idx_parts.append(batch_nodes)
            val_parts.append(gamma * unit)
            ctr_rows, inv = np.unique(assign, return_inverse=True)
            ctr_grads = np.zeros((len(ctr_rows), d))
            np.add.at(ctr_grads, inv, -gamma * unit)

    if lam != 0.0 and len(batch.traversed_edges):
        if weights is None:
            raise ValueError("edge weights are required when the smoothness term is active")
        a = batch.traversed_edges[:, 0]
        b = batch.traversed_edges[:, 1]
        w = np.array([weights[(int(x), int(y))] for x, y in zip(a, b)])
        diffs = f[a] - f[b]
        norms = np.linalg.norm(diffs, axis=1)
        loss += lam * float(w @ norms)
        if want_grads:
            unit = np.divide(diffs, norms[:, None], out=np.zeros_like(diffs), where=norms[:, None] > 0)
            gvec = lam * w[:, None] * unit
            idx_parts += [a, b]
            val_parts += [gvec, -gvec]

    if not want_grads:
        return float(loss), None, None, None, None

    if idx_parts:
        idx = np.concatenate(idx_parts)
        vals = np.vstack(val_parts)
        rows, inv = np.unique(idx, return_inverse=True)
        flat = inv[:, None] * d + np.arange(d)[None, :]
        row_grads = np.bincount(flat.ravel(), weights=vals.ravel(),
                                minlength=len(rows) * d).reshape(len(rows), d)
    else:
        rows = np.empty(0, dtype=np.int64)
        row_grads = np.empty((0, d))
    return float(loss), rows, row_grads, ctr_rows, ctr_grads


def nce_minibatch_loss(state: EmbeddingState, batch: WalkContextBatch,
                       noise: NoiseDistribution, k: int, rng: np.random.Generator) -> float:
    """Mean noise-contrastive loss over the batch pairs: per positive pair,
    -log sigmoid(f(n) . f(v)) minus the log-sigmoid of k negated noise dots."""
    if len(batch) == 0:
        raise ValueError("batch has no pairs")
    noise_ids = sample_noise(noise, batch, k, rng)
    loss, *_ = _evaluate(state.embeddings, state.centers, batch, noise_ids,
                         gamma=0.0, lam=0.0, weights=None, want_grads=False)
    return loss


def full_loss(state: EmbeddingState, batch: WalkContextBatch, noise_ids: np.ndarray,
              gamma: float, lam: float, weights: EdgeWeightTable | None = None) -> float:
    """NCE loss plus gamma-weighted distances of the batch nodes to their
    nearest centers plus the lambda-weighted smoothness penalty over the
    walk's traversed edges. ``noise_ids`` are frozen negative draws."""
    if len(batch) == 0:
        raise ValueError("batch has no pairs")
    loss, *_ = _evaluate(state.embeddings, state.centers, batch, noise_ids,
                         gamma=gamma, lam=lam, weights=weights, want_grads=False)
    return loss


def grad_node(state: EmbeddingState, v: int, batch: WalkContextBatch, noise_ids: np.ndarray,
              gamma: float, lam: float, weights: EdgeWeightTable | None = None) -> np.ndarray:
    """Exact gradient of full_loss with respect to the embedding of node v,
    under the same frozen noise draws. Counts v's appearances as source,
    context and noise sample; singular norm terms contribute zero."""
    if len(batch) == 0:
        return np.zeros(state.dims)
    _, rows, row_grads, _, _ = _evaluate(state.embeddings, state.centers, batch, noise_ids,
                                         gamma=gamma, lam=lam, weights=weights, want_grads=True)
    pos = np.searchsorted(rows, v)
    if pos < len(rows) and rows[pos] == v:
        return row_grads[pos].copy()
    return np.zeros(state.dims)


def grad_centers(state: EmbeddingState, nodes: np.ndarray, gamma: float) -> np.ndarray:
    """Gradient of the clustering cost with respect to every center: each
    listed node pulls its closest center toward itself; centers with no
    assigned nodes get a zero row."""
    out = np.zeros_like(state.centers)
    nodes = np.asarray(nodes, dtype=np.int64)
    if gamma == 0.0 or len(nodes) == 0:
        return out
    dists = np.linalg.norm(state.embeddings[nodes][:, None, :] - state.centers[None, :, :], axis=2)
    assign = np.argmin(dists, axis=1)
    diffs = state.embeddings[nodes] - state.centers[assign]
    norms = dists[np.arange(len(nodes)), assign]
    unit = np.divide(diffs, norms[:, None], out=np.zeros_like(diffs), where=norms[:, None] > 0)
    np.add.at(out, assign, -gamma * unit)
    return out


def _adam_block(param, m1, m2, grad, alpha, step):
    m1 *= ADAM_BETA1
    m1 += (1.0 - ADAM_BETA1) * grad
    m2 *= ADAM_BETA2
    m2 += (1.0 - ADAM_BETA2) * np.square(grad)
    mhat = m1 / (1.0 - ADAM_BETA1 ** step)
    vhat = m2 / (1.0 - ADAM_BETA2 ** step)
    param -= alpha * mhat / (np.sqrt(vhat) + ADAM_EPS)


def adam_update(state: EmbeddingState, node_grads: np.ndarray, center_grads: np.ndarray,
                alpha: float) -> EmbeddingState:
    """One dense adaptive-moment step over both parameter blocks (beta1=0.9,
    beta2=0.999, eps=1e-8, bias-corrected). Mutates and returns the state."""
    if node_grads.shape != state.embeddings.shape or center_grads.shape != state.centers.shape:
        raise ValueError("gradient shapes must match parameter shapes")
    state.step += 1
    _adam_block(state.embeddings, state.emb_m1, state.emb_m2, node_grads, alpha, state.step)
    _adam_block(state.centers, state.ctr_m1, state.ctr_m2, center_grads, alpha, state.step)
    return state


def adam_update_rows(state: EmbeddingState, rows: np.ndarray, row_grads: np.ndarray,
                     ctr_rows: np.ndarray, ctr_grads: np.ndarray, alpha: float) -> EmbeddingState:
    """Adam step touching only the listed embedding and center rows, so the
    per-step cost is independent of the graph size. Rows absent from the
    batch keep their parameters and moments bit-identical; bias correction
    uses the shared step counter."""
    state.step += 1
    if len(rows):
        p, m1, m2 = state.embeddings[rows], state.emb_m1[rows], state.emb_m2[rows]
        _adam_block(p, m1, m2, row_grads, alpha, state.step)
        state.embeddings[rows], state.emb_m1[rows], state.emb_m2[rows] = p, m1, m2
    if len(ctr_rows):
        p, m1, m2 = state.centers[ctr_rows], state.ctr_m1[ctr_rows], state.ctr_m2[ctr_rows]
        _adam_block(p, m1, m2, ctr_grads, alpha, state.step)
        state.centers[ctr_rows], state.ctr_m1[ctr_rows], state.ctr_m2[ctr_rows] = p, m1, m2
    return state


def _produce_batch(g: Graph, cfg: TrainConfig, noise: NoiseDistribution, epoch: int, v: int):
    walk = sample_walk(g, v, cfg.walk, walk_rng(cfg.walk.seed, epoch, v))
    batch = extract_features(walk, cfg.walk.window)
    noise_ids = sample_noise(noise, batch, cfg.negatives, noise_rng(cfg.seed, epoch, v))
    return walk, batch, noise_ids


def _ordered_prefetch(fn, items, workers: int, depth: int = 64):
    """Run fn over items with worker threads, yielding results in input
    order through a bounded queue; with one worker, run inline."""
    if workers <= 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = deque()
        for item in items:
            pending.append(pool.submit(fn, item))
            if len(pending) >= depth:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def train(g: Graph, cfg: TrainConfig, workers: int = 1, walk_sink=None) -> tuple[EmbeddingState, list[dict]]:
    """Run the full training loop and return the final state plus a
    per-epoch log.

    Per epoch the nodes are shuffled; each source node advances the schedule
    counter, gets one sampled walk, and triggers exactly one optimizer update
    from that walk's window pairs (plus clustering and, when enabled,
    smoothness terms). Walk production may use worker threads; updates are
    applied by this single consumer in shuffle order, so results are
    deterministic per seed regardless of ``workers``.
    """
    cfg.validate()
    n = g.node_count
    state = init_state(n, cfg)
    noise = NoiseDistribution.from_graph(g, cfg.noise)
    weights = compute_edge_weights(g) if cfg.smoothing else None
    lam = cfg.smoothness_weight if cfg.smoothing else 0.0
    total = cfg.total_steps(n)
    t = 0
    epoch_log = []
    for epoch in range(cfg.walk.walks_per_node):
        started = time.perf_counter()
        order = epoch_order(n, epoch, cfg.walk.seed)
        produce = partial(_produce_batch, g, cfg, noise, epoch)
        losses = []
        for walk, batch, noise_ids in _ordered_prefetch(produce, order.tolist(), workers):
            t += 1
            gamma = gamma_at(t, cfg, total)
            alpha = alpha_at(t, cfg, total)
            if walk_sink is not None:
                walk_sink(walk)
            if len(batch) == 0:
                continue  # isolated source: no pairs, no update
            # the NCE term is a mean over pairs, so the clustering and
            # smoothness weights are divided by the pair count to keep the
            # batch objective proportional to the summed per-pair/per-node
            # cost they anneal against
            scale = 1.0 / len(batch)
            loss, rows, row_grads, ctr_rows, ctr_grads = _evaluate(
                state.embeddings, state.centers, batch, noise_ids,
                gamma=gamma * scale, lam=lam * scale, weights=weights, want_grads=True)
            adam_update_rows(state, rows, row_grads, ctr_rows, ctr_grads, alpha)
            if __debug__ and len(rows):
                assert np.isfinite(state.embeddings[rows]).all(), "non-finite embedding after update"
            losses.append(loss)
        assert np.isfinite(state.embeddings).all() and np.isfinite(state.centers).all()
        epoch_log.append({
            "epoch": epoch,
            "loss": float(np.mean(losses)) if losses else float("nan"),
            "gamma": gamma,
            "alpha": alpha,
            "seconds": time.perf_counter() - started,
        })
    return state, epoch_log
