"""Prediction metrics (accuracy, one-off agreement, MSE) and graph
homophily diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, UsageError
from .simgraph import SemanticGraph


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    ofa: float
    mse: float
    confusion: np.ndarray   # (k, k) counts, truth rows x prediction cols
    n: int

    def summary(self) -> str:
        return (f"n={self.n} accuracy={self.accuracy:.4f} "
                f"ofa={self.ofa:.4f} mse={self.mse:.4f}")


def _check_pair(pred, truth):
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise UsageError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise UsageError("empty prediction list")
    return pred, truth


def accuracy(pred, truth) -> float:
    """Fraction of exact class matches."""
    pred, truth = _check_pair(pred, truth)
    return float(np.mean(pred == truth))


def ofa(pred, truth) -> float:
    """One-off agreement: predictions within one class count as correct."""
    pred, truth = _check_pair(pred, truth)
    return float(np.mean(np.abs(pred - truth) <= 1))


def mse(pred, truth) -> float:
    """Mean squared class-index error."""
    pred, truth = _check_pair(pred, truth)
    return float(np.mean((pred - truth) ** 2.0))


def evaluate(pred, truth, k: int | None = None) -> EvalReport:
    pred, truth = _check_pair(pred, truth)
    if k is None:
        k = int(max(pred.max(), truth.max())) + 1
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (truth, pred), 1)
    return EvalReport(accuracy=accuracy(pred, truth), ofa=ofa(pred, truth),
                      mse=mse(pred, truth), confusion=confusion, n=pred.size)


def edge_homophily(graph: SemanticGraph, labels=None) -> float:
    """Fraction of edges whose endpoints share a label."""
    labels = graph.labels if labels is None else np.asarray(labels)
    if graph.edge_count == 0:
        raise UsageError("graph has no edges")
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    if np.any(labels[u] < 0) or np.any(labels[v] < 0):
        raise DataError("edge endpoint with unknown label")
    return float(np.mean(labels[u] == labels[v]))


def neighborhood_homophily(graph: SemanticGraph, labels=None):
    """Per-node fraction of neighbours sharing the node's label.

    Returns (mean over non-isolated nodes, per-node array with NaN for
    isolated nodes). The degree-weighted mean of the per-node fractions
    equals edge homophily.
    """
    labels = graph.labels if labels is None else np.asarray(labels)
    same = np.zeros(graph.node_count)
    deg = np.zeros(graph.node_count)
    for u, v in graph.edges:
        u, v = int(u), int(v)
        if labels[u] < 0 or labels[v] < 0:
            raise DataError("edge endpoint with unknown label")
        match = 1.0 if labels[u] == labels[v] else 0.0
        same[u] += match
        same[v] += match
        deg[u] += 1
        deg[v] += 1
    active = deg > 0
    if not np.any(active):
        raise UsageError("no neighborhoods: all nodes isolated")
    per_node = np.full(graph.node_count, np.nan)
    per_node[active] = same[active] / deg[active]
    return float(np.mean(per_node[active])), per_node


def homophily_report(graph: SemanticGraph, labels=None, bins: int = 10) -> dict:
    mean, per_node = neighborhood_homophily(graph, labels)
    valid = per_node[~np.isnan(per_node)]
    hist, edges = np.histogram(valid, bins=bins, range=(0.0, 1.0))
    return {
        "edge_homophily": edge_homophily(graph, labels),
        "neighborhood_mean": mean,
        "neighborhood_min": float(valid.min()),
        "histogram": hist.tolist(),
        "bin_edges": edges.tolist(),
        "isolated_nodes": int(np.isnan(per_node).sum()),
    }
