"""Class-aware contrastive refinement of sentence embeddings.

A two-layer MLP (dim -> dim -> dim, one relu) is trained so that rows
sharing a difficulty class move closer on the unit sphere and rows from
different classes move apart. Output rows are L2-normalized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import UsageError

log = logging.getLogger(__name__)


@dataclass
class RefinerConfig:
    temperature: float = 0.1
    batch_size: int = 64
    epochs: int = 200
    # At the default temperature the loss plateaus near collapse with a
    # smaller step size; 1e-2 escapes it reliably on clustered data.
    learning_rate: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise UsageError(f"temperature must be > 0, got {self.temperature}")
        if self.batch_size < 2:
            raise UsageError("batch must contain at least 2 samples")


def contrastive_loss(embeddings, labels, temperature: float = 0.1) -> T.Tensor:
    """Supervised contrastive loss over L2-normalized rows.

    Each anchor is pulled toward same-label rows and pushed from all
    other rows; anchors without positives contribute nothing, and the
    result is the mean over anchors that have positives.
    """
    z = embeddings if isinstance(embeddings, T.Tensor) else T.Tensor(embeddings)
    n = z.data.shape[0]
    if n < 2:
        raise UsageError("contrastive loss needs a batch of at least 2")
    norms = np.linalg.norm(z.data, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-3):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise UsageError(f"row {bad} is not L2-normalized (norm {norms[bad]:.6f})")
    labels = np.asarray(labels)
    if labels.shape[0] != n:
        raise UsageError(f"{labels.shape[0]} labels for {n} rows")

    sims = T.scale(T.matmul(z, T.transpose(z)), 1.0 / temperature)
    # Self-similarities leave the denominator via a large negative mask
    # (finite, so masked log-probabilities stay multiplicable by zero).
    mask = np.zeros((n, n))
    np.fill_diagonal(mask, -1e30)
    masked = T.add(sims, T.Tensor(mask))
    log_denom = T.row_logsumexp(masked)              # (n, 1)
    log_prob = T.sub(masked, log_denom)              # broadcasts over cols

    pos = (labels[:, None] == labels[None, :]).astype(float)
    np.fill_diagonal(pos, 0.0)
    pos_counts = pos.sum(axis=1)
    anchors = pos_counts > 0
    if not np.any(anchors):
        return T.Tensor(np.array(0.0))
    # -mean_i (1/|P(i)|) sum_p log_prob[i, p], over anchors with positives
    weight = np.zeros((n, n))
    weight[anchors] = pos[anchors] / pos_counts[anchors, None]
    weighted = T.elementwise_mul(log_prob, T.Tensor(weight))
    total = T.sum_all(weighted)
    return T.scale(total, -1.0 / float(anchors.sum()))


def _init_mlp(dim: int, rng: np.random.Generator) -> dict[str, T.Tensor]:
    return {
        "W1": T.Tensor(T.glorot_init(dim, dim, rng)),
        "b1": T.Tensor(np.zeros((1, dim))),
        "W2": T.Tensor(T.glorot_init(dim, dim, rng)),
        "b2": T.Tensor(np.zeros((1, dim))),
    }


def _mlp_forward(params: dict[str, T.Tensor], x) -> T.Tensor:
    h = T.relu(T.add(T.matmul(_as_t(x), params["W1"]), params["b1"]))
    out = T.add(T.matmul(h, params["W2"]), params["b2"])
    return T.l2_normalize_rows(out)


def _as_t(x):
    return x if isinstance(x, T.Tensor) else T.Tensor(x)


def _balanced_batches(labels: np.ndarray, batch_size: int,
                      rng: np.random.Generator):
    """Batches drawing evenly across classes; classes with < 2 members
    are excluded from training (they can never form a positive pair)."""
    classes = [np.where(labels == c)[0] for c in np.unique(labels)]
    usable = [idx for idx in classes if idx.size >= 2]
    if len(usable) < len(classes):
        log.warning("excluding %d singleton class(es) from contrastive batches",
                    len(classes) - len(usable))
    if not usable:
        raise UsageError("no class has >= 2 members; cannot form positives")
    per_class = max(2, batch_size // len(usable))
    pool = np.concatenate(usable)
    n_batches = max(1, pool.size // max(per_class * len(usable), 1))
    for _ in range(n_batches):
        batch = np.concatenate([
            rng.choice(idx, size=min(per_class, idx.size), replace=False)
            for idx in usable])
        yield batch


def refine_embeddings(embeddings: np.ndarray, labels,
                      config: RefinerConfig = RefinerConfig()) -> np.ndarray:
    """Train the refiner and return the refined, L2-normalized matrix.

    Output dtype is float32 (the on-disk embedding dtype); dimensionality
    matches the input. With epochs=0 this is just the forward pass of
    the randomly initialized MLP.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.shape[0] != emb.shape[0]:
        raise UsageError(f"{labels.shape[0]} labels for {emb.shape[0]} rows")
    rng = np.random.default_rng(config.seed)
    params = _init_mlp(emb.shape[1], rng)
    names = list(params)
    state = T.AdamState([params[k].data.shape for k in names],
                        lr=config.learning_rate)
    unit_in = emb / np.maximum(np.linalg.norm(emb, axis=1, keepdims=True), 1e-12)
    for _epoch in range(config.epochs):
        for batch in _balanced_batches(labels, config.batch_size, rng):
            z = _mlp_forward(params, unit_in[batch])
            loss = contrastive_loss(z, labels[batch], config.temperature)
            if loss._parents == ():
                continue  # batch without positives
            T.backward(loss)
            grads = [params[k].grad if params[k].grad is not None
                     else np.zeros_like(params[k].data) for k in names]
            new_values = T.adam_step([params[k].data for k in names], grads, state)
            params = {k: T.Tensor(v) for k, v in zip(names, new_values)}
    refined = _mlp_forward(params, unit_in)
    return refined.data.astype(np.float32)
