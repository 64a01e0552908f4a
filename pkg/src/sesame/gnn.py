"""Message-passing networks with an ordinal-regression head.

Four aggregation schemes (gcn, gin, sage, gat) share a common training
loop: full-batch transductive training with per-epoch edge dropping,
binary cross entropy against cumulative ordinal targets, Adam with
decoupled weight decay, and a best-validation-loss checkpoint.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import tensor as T
from .errors import DataError, NumericError, ShapeError, UsageError
from .simgraph import SemanticGraph

ARCHITECTURES = ("gcn", "gin", "sage", "gat")

_SCKP_MAGIC = b"SCKP"

_ACTIVATIONS = {"tanh": T.tanh, "relu": T.relu}


@dataclass
class GnnConfig:
    architecture: str = "gcn"
    layers: int = 4
    input_dim: int = 768
    hidden_dim: int = 128
    activation: str = "tanh"
    k: int = 7
    drop_edge_p: float = 0.25
    epochs: int = 2100
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    val_fraction: float = 0.1
    seed: int = 0
    gat_heads: int = 1
    gin_eps_init: float = 0.0

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise UsageError(f"unknown architecture '{self.architecture}'")
        if not (0.0 <= self.drop_edge_p < 1.0):
            raise UsageError(f"drop_edge_p must be in [0, 1), got {self.drop_edge_p}")
        if self.layers < 1 or self.hidden_dim < 1 or self.input_dim < 1 or self.k < 2:
            raise UsageError("layers/dims/classes out of range")
        if self.activation not in _ACTIVATIONS:
            raise UsageError(f"unknown activation '{self.activation}'")
        if self.architecture == "gat" and self.hidden_dim % self.gat_heads != 0:
            raise UsageError("hidden_dim must be divisible by gat_heads")


def encode_ordinal(label: int, k: int) -> np.ndarray:
    """Cumulative target: bits 0..label set, the rest zero."""
    if not (0 <= label <= k - 1):
        raise UsageError(f"label {label} outside [0, {k - 1}]")
    target = np.zeros(k)
    target[: label + 1] = 1.0
    return target


def decode_ordinal(scores) -> int:
    """Length of the maximal leading run of scores > 0.5, minus one."""
    scores = np.asarray(scores)
    run = 0
    for s in scores:
        if s > 0.5:
            run += 1
        else:
            break
    return max(run - 1, 0)


def decode_ordinal_batch(scores: np.ndarray) -> np.ndarray:
    above = np.asarray(scores) > 0.5
    # First position (per row) that breaks the prefix of ones.
    breaks = np.argmin(above, axis=1)
    run = np.where(above.all(axis=1), above.shape[1], breaks)
    return np.maximum(run - 1, 0)


def prefix_violation_rate(scores: np.ndarray) -> float:
    """Fraction of rows whose thresholded bits are not a clean prefix.

    Reported for diagnostics only; decoding applies the prefix rule
    regardless.
    """
    above = np.asarray(scores) > 0.5
    run = decode_ordinal_batch(scores) + 1
    total_on = above.sum(axis=1)
    return float(np.mean(total_on != run))


def drop_edge(edges: np.ndarray, weights: np.ndarray, p: float,
              seed: int, epoch: int = 0):
    """Remove each undirected edge with probability p, deterministically
    in (seed, epoch). Virtual self-loops are unaffected."""
    if not (0.0 <= p < 1.0):
        raise UsageError(f"drop probability must be in [0, 1), got {p}")
    if p == 0.0 or edges.shape[0] == 0:
        return edges, weights
    rng = np.random.default_rng([seed, epoch])
    keep = rng.random(edges.shape[0]) >= p
    return edges[keep], weights[keep]


def _dense_adjacency(n: int, edges: np.ndarray, weights: np.ndarray) -> np.ndarray:
    a = np.zeros((n, n))
    if edges.shape[0]:
        u, v = edges[:, 0], edges[:, 1]
        a[u, v] = weights
        a[v, u] = weights
    return a


def _layer_operator(kind: str, n: int, edges: np.ndarray, weights: np.ndarray):
    """Per-architecture structural constant derived from the edge set."""
    adj = _dense_adjacency(n, edges, weights)
    if kind == "gcn":
        # Self-loop weight 1; symmetric sqrt-degree normalization.
        a_hat = adj + np.eye(n)
        d = a_hat.sum(axis=1)
        inv_sqrt = 1.0 / np.sqrt(d)
        return a_hat * inv_sqrt[:, None] * inv_sqrt[None, :]
    if kind == "gin":
        return adj
    if kind == "sage":
        deg = adj.sum(axis=1)
        out = np.zeros_like(adj)
        nz = deg > 0
        out[nz] = adj[nz] / deg[nz, None]
        return out
    if kind == "gat":
        # log edge weight as an additive attention bias; self-loops get
        # log 1 = 0; non-edges are masked out of the softmax.
        with np.errstate(divide="ignore"):
            logw = np.where(adj > 0, np.log(np.where(adj > 0, adj, 1.0)), -np.inf)
        np.fill_diagonal(logw, 0.0)
        return logw
    raise UsageError(f"unknown architecture '{kind}'")


def init_params(config: GnnConfig, rng: np.random.Generator) -> dict[str, T.Tensor]:
    """Seeded parameter dictionary; iteration order is the declared
    serialization order."""
    params: dict[str, T.Tensor] = {}
    dims = [config.input_dim] + [config.hidden_dim] * config.layers
    for layer in range(config.layers):
        d_in, d_out = dims[layer], dims[layer + 1]
        pre = f"layer{layer}"
        if config.architecture == "gcn":
            params[f"{pre}.W"] = T.Tensor(T.glorot_init(d_in, d_out, rng))
            params[f"{pre}.b"] = T.Tensor(np.zeros((1, d_out)))
        elif config.architecture == "gin":
            params[f"{pre}.eps"] = T.Tensor(np.array(config.gin_eps_init))
            params[f"{pre}.W1"] = T.Tensor(T.glorot_init(d_in, config.hidden_dim, rng))
            params[f"{pre}.b1"] = T.Tensor(np.zeros((1, config.hidden_dim)))
            params[f"{pre}.W2"] = T.Tensor(T.glorot_init(config.hidden_dim, d_out, rng))
            params[f"{pre}.b2"] = T.Tensor(np.zeros((1, d_out)))
        elif config.architecture == "sage":
            params[f"{pre}.Wself"] = T.Tensor(T.glorot_init(d_in, d_out, rng))
            params[f"{pre}.Wnbr"] = T.Tensor(T.glorot_init(d_in, d_out, rng))
            params[f"{pre}.b"] = T.Tensor(np.zeros((1, d_out)))
        elif config.architecture == "gat":
            dph = d_out // config.gat_heads
            for h in range(config.gat_heads):
                params[f"{pre}.head{h}.W"] = T.Tensor(T.glorot_init(d_in, dph, rng))
                params[f"{pre}.head{h}.a_src"] = T.Tensor(T.glorot_init(dph, 1, rng))
                params[f"{pre}.head{h}.a_dst"] = T.Tensor(T.glorot_init(dph, 1, rng))
            params[f"{pre}.b"] = T.Tensor(np.zeros((1, d_out)))
    params["head.W"] = T.Tensor(T.glorot_init(config.hidden_dim, config.k, rng))
    params["head.b"] = T.Tensor(np.zeros((1, config.k)))
    return params


def layer_forward(kind: str, h: T.Tensor, operator: np.ndarray,
                  params: dict[str, T.Tensor], layer: int,
                  config: GnnConfig) -> T.Tensor:
    """One message-passing layer; ``operator`` comes from _layer_operator."""
    act = _ACTIVATIONS[config.activation]
    pre = f"layer{layer}"
    n = h.data.shape[0]
    if operator.shape[0] != n:
        raise ShapeError(f"{kind}: operator for {operator.shape[0]} nodes, features for {n}")
    op = T.Tensor(operator)
    if kind == "gcn":
        agg = T.matmul(op, h)
        return act(T.add(T.matmul(agg, params[f"{pre}.W"]), params[f"{pre}.b"]))
    if kind == "gin":
        eps = params[f"{pre}.eps"]
        self_term = T.elementwise_mul(T.add(eps, T.Tensor(np.array(1.0))), h)
        agg = T.add(self_term, T.matmul(op, h))
        hidden = act(T.add(T.matmul(agg, params[f"{pre}.W1"]), params[f"{pre}.b1"]))
        return T.add(T.matmul(hidden, params[f"{pre}.W2"]), params[f"{pre}.b2"])
    if kind == "sage":
        self_term = T.matmul(h, params[f"{pre}.Wself"])
        nbr_term = T.matmul(T.matmul(op, h), params[f"{pre}.Wnbr"])
        return act(T.add(T.add(self_term, nbr_term), params[f"{pre}.b"]))
    if kind == "gat":
        heads = []
        for head in range(config.gat_heads):
            hp = f"{pre}.head{head}"
            z = T.matmul(h, params[f"{hp}.W"])
            s_src = T.matmul(z, params[f"{hp}.a_src"])   # (n, 1)
            s_dst = T.matmul(z, params[f"{hp}.a_dst"])   # (n, 1)
            logits = T.leaky_relu(T.add(s_src, T.transpose(s_dst)), 0.2)
            alpha = T.row_softmax(T.add(logits, op))
            heads.append(T.matmul(alpha, z))
        mixed = heads[0]
        for extra in heads[1:]:
            mixed = T.concat_cols(mixed, extra)
        return act(T.add(mixed, params[f"{pre}.b"]))
    raise UsageError(f"unknown architecture '{kind}'")


def forward(params: dict[str, T.Tensor], config: GnnConfig,
            features: np.ndarray, edges: np.ndarray,
            weights: np.ndarray) -> T.Tensor:
    """Logits (pre-sigmoid) of shape (n, k)."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[1] != config.input_dim:
        raise ShapeError(f"feature dim {features.shape[1]} vs model input {config.input_dim}")
    n = features.shape[0]
    operator = _layer_operator(config.architecture, n, edges, weights)
    h = T.Tensor(features)
    for layer in range(config.layers):
        h = layer_forward(config.architecture, h, operator, params, layer, config)
    return T.add(T.matmul(h, params["head.W"]), params["head.b"])


@dataclass
class GnnModel:
    config: GnnConfig
    params: dict[str, T.Tensor]

    def scores(self, graph: SemanticGraph) -> np.ndarray:
        """Sigmoid outputs (n, k) for every node, full edge set."""
        logits = forward(self.params, self.config, graph.features,
                         graph.edges, graph.weights)
        return T._sigmoid_np(logits.data)


def ordinal_targets(labels: np.ndarray, k: int) -> np.ndarray:
    t = np.zeros((len(labels), k))
    for i, lab in enumerate(labels):
        if lab >= 0:
            t[i] = encode_ordinal(int(lab), k)
    return t


def train_gnn(graph: SemanticGraph, config: GnnConfig):
    """Full-batch transductive training; returns (model, history).

    A validation fraction of the labeled nodes is masked out of the
    loss; the returned parameters are the best-validation-loss epoch.
    """
    labeled = np.where((graph.labels >= 0) & ~graph.holdout)[0]
    if labeled.size == 0:
        raise DataError("no labeled nodes to train on")
    if np.any((graph.labels < 0) & ~graph.holdout):
        raise DataError("unlabeled non-holdout node in training graph")
    if np.any(graph.labels >= config.k):
        raise DataError(f"label >= {config.k} present")
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(labeled)
    n_val = int(round(config.val_fraction * labeled.size))
    val_nodes = perm[:n_val]
    train_nodes = perm[n_val:]
    if train_nodes.size == 0:
        raise UsageError("validation fraction leaves no training nodes")

    n = graph.node_count
    targets = ordinal_targets(graph.labels, config.k)
    train_mask = np.zeros(n)
    train_mask[train_nodes] = 1.0
    val_mask = np.zeros(n)
    val_mask[val_nodes] = 1.0

    params = init_params(config, rng)
    names = list(params)
    state = T.AdamState([params[k].data.shape for k in names],
                        lr=config.learning_rate,
                        weight_decay=config.weight_decay)
    history = []
    best_val = np.inf
    best_params = {k: params[k].data.copy() for k in names}
    truth = graph.labels.astype(np.int64)

    for epoch in range(config.epochs):
        edges_e, weights_e = drop_edge(graph.edges, graph.weights,
                                       config.drop_edge_p, config.seed, epoch)
        logits = forward(params, config, graph.features, edges_e, weights_e)
        loss = T.bce_with_logits(logits, targets, mask=train_mask)
        if not np.isfinite(loss.data):
            raise NumericError(f"non-finite training loss at epoch {epoch}")
        T.backward(loss)
        grads = [params[k].grad for k in names]
        new_values = T.adam_step([params[k].data for k in names], grads, state)
        params = {k: T.Tensor(v) for k, v in zip(names, new_values)}

        # Evaluate on the full (undropped) edge set.
        eval_logits = forward(params, config, graph.features,
                              graph.edges, graph.weights)
        scores = T._sigmoid_np(eval_logits.data)
        pred = decode_ordinal_batch(scores)
        record = {"epoch": epoch, "train_loss": float(loss.data)}
        record["train_acc"] = float(np.mean(pred[train_nodes] == truth[train_nodes]))
        record["train_ofa"] = float(
            np.mean(np.abs(pred[train_nodes] - truth[train_nodes]) <= 1))
        if val_nodes.size:
            val_loss = T.bce_with_logits(eval_logits, targets, mask=val_mask)
            record["val_loss"] = float(val_loss.data)
            record["val_acc"] = float(np.mean(pred[val_nodes] == truth[val_nodes]))
            record["val_ofa"] = float(
                np.mean(np.abs(pred[val_nodes] - truth[val_nodes]) <= 1))
            if record["val_loss"] < best_val:
                best_val = record["val_loss"]
                best_params = {k: params[k].data.copy() for k in names}
        else:
            best_params = {k: params[k].data.copy() for k in names}
        history.append(record)

    model = GnnModel(config=config,
                     params={k: T.Tensor(v) for k, v in best_params.items()})
    return model, history


def predict(model: GnnModel, graph: SemanticGraph):
    """Classes and sigmoid scores for the holdout nodes of an extended
    graph. Returns (node_indices, classes, scores)."""
    if graph.dim != model.config.input_dim:
        raise ShapeError(f"graph feature dim {graph.dim} vs model input "
                         f"{model.config.input_dim}")
    scores = model.scores(graph)
    holdout_idx = np.where(graph.holdout)[0]
    classes = decode_ordinal_batch(scores[holdout_idx])
    return holdout_idx, classes, scores[holdout_idx]


def save_model(model: GnnModel, path: str | Path) -> None:
    """SCKP checkpoint: JSON header plus float32 parameter payload."""
    names = list(model.params)
    header = {
        "arch": model.config.architecture,
        "config": asdict(model.config),
        "params": [{"name": k, "shape": list(model.params[k].data.shape)}
                   for k in names],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(_SCKP_MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for k in names:
            fh.write(model.params[k].data.astype("<f4").tobytes())


def load_model(path: str | Path) -> GnnModel:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _SCKP_MAGIC:
        raise DataError(f"{path}: bad magic {raw[:4]!r}")
    (header_len,) = struct.unpack("<I", raw[4:8])
    header = json.loads(raw[8:8 + header_len].decode("utf-8"))
    config = GnnConfig(**header["config"])
    off = 8 + header_len
    params: dict[str, T.Tensor] = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(raw[off:off + 4 * count], dtype="<f4")
        if data.size != count:
            raise DataError(f"{path}: truncated payload at '{entry['name']}'")
        params[entry["name"]] = T.Tensor(data.reshape(shape).astype(np.float64))
        off += 4 * count
    if off != len(raw):
        raise DataError(f"{path}: {len(raw) - off} trailing bytes")
    return GnnModel(config=config, params=params)
