"""Semantic similarity graphs over utterance embeddings.

Nodes are embedding rows; edges connect cosine nearest neighbours whose
similarity clears a threshold. The fine-tune pass appends holdout nodes
whose edges point only at the original (training) nodes.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ShapeError, UsageError

log = logging.getLogger(__name__)

_SGRF_MAGIC = b"SGRF"
_SGRF_VERSION = 1

DEFAULT_K = 10
DEFAULT_THRESHOLD = 0.7


def _normalized_rows(embeddings: np.ndarray) -> np.ndarray:
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2:
        raise UsageError(f"embeddings must be 2-D, got shape {emb.shape}")
    norms = np.linalg.norm(emb, axis=1)
    bad = np.where(norms == 0)[0]
    if bad.size:
        raise UsageError(f"zero-norm embedding row {bad[0]}")
    return emb / norms[:, None]


class ExactIndex:
    """Brute-force cosine index; the oracle for the approximate one."""

    mode = "exact"

    def __init__(self, embeddings: np.ndarray):
        self._unit = _normalized_rows(embeddings)

    @property
    def size(self) -> int:
        return self._unit.shape[0]

    @property
    def dim(self) -> int:
        return self._unit.shape[1]

    def query(self, vector: np.ndarray, k: int, exclude: int | None = None):
        if k < 1:
            raise UsageError(f"k must be >= 1, got {k}")
        v = np.asarray(vector, dtype=np.float64).ravel()
        if v.shape[0] != self.dim:
            raise ShapeError(f"query dim {v.shape[0]} vs index dim {self.dim}")
        norm = np.linalg.norm(v)
        if norm == 0:
            raise UsageError("zero-norm query vector")
        sims = self._unit @ (v / norm)
        if exclude is not None:
            sims = sims.copy()
            sims[exclude] = -np.inf
        k_eff = min(k, self.size - (1 if exclude is not None else 0))
        if k_eff <= 0:
            return []
        idx = np.argpartition(-sims, k_eff - 1)[:k_eff]
        # Stable by (descending similarity, ascending id).
        idx = idx[np.lexsort((idx, -sims[idx]))]
        return [(int(i), float(sims[i])) for i in idx]


class HnswIndex:
    """Layered navigable small-world proximity graph over cosine similarity.

    Single-threaded construction for determinism; read-only queries
    afterwards are safe to run concurrently.
    """

    mode = "ann"

    def __init__(self, embeddings: np.ndarray, seed: int = 0,
                 m: int = 16, ef_construction: int = 100, ef_search: int = 80):
        self._unit = _normalized_rows(embeddings)
        self._m = m
        self._m0 = 2 * m
        self._ef_construction = ef_construction
        self.ef_search = ef_search
        rng = np.random.default_rng(seed)
        n = self._unit.shape[0]
        mult = 1.0 / np.log(m)
        self._levels = np.floor(-np.log(rng.uniform(1e-12, 1.0, size=n)) * mult).astype(int)
        self._max_level = int(self._levels.max()) if n else 0
        # neighbours[level][node] -> list of node ids
        self._neighbours: list[dict[int, list[int]]] = [
            {} for _ in range(self._max_level + 1)]
        self._entry = 0
        for i in range(n):
            self._insert(i)

    @property
    def size(self) -> int:
        return self._unit.shape[0]

    @property
    def dim(self) -> int:
        return self._unit.shape[1]

    def _sim(self, q: np.ndarray, ids) -> np.ndarray:
        return self._unit[list(ids)] @ q

    def _greedy(self, q: np.ndarray, entry: int, level: int) -> int:
        cur = entry
        cur_sim = float(self._unit[cur] @ q)
        improved = True
        while improved:
            improved = False
            for nb in self._neighbours[level].get(cur, ()):
                s = float(self._unit[nb] @ q)
                if s > cur_sim:
                    cur, cur_sim = nb, s
                    improved = True
        return cur

    def _search_layer(self, q: np.ndarray, entry: int, ef: int, level: int):
        """Best-first search; returns list of (sim, id) sorted descending."""
        entry_sim = float(self._unit[entry] @ q)
        visited = {entry}
        candidates = [(entry_sim, entry)]
        best = [(entry_sim, entry)]
        while candidates:
            candidates.sort(reverse=True)
            c_sim, c = candidates.pop(0)
            worst = min(best)[0] if len(best) >= ef else -np.inf
            if c_sim < worst:
                break
            for nb in self._neighbours[level].get(c, ()):
                if nb in visited:
                    continue
                visited.add(nb)
                s = float(self._unit[nb] @ q)
                if len(best) < ef or s > min(best)[0]:
                    candidates.append((s, nb))
                    best.append((s, nb))
                    if len(best) > ef:
                        best.remove(min(best))
        best.sort(reverse=True)
        return best

    def _insert(self, node: int) -> None:
        level = min(int(self._levels[node]), self._max_level)
        q = self._unit[node]
        if node == 0:
            for lv in range(level + 1):
                self._neighbours[lv][node] = []
            self._entry = node
            self._entry_level = level
            return
        cur = self._entry
        top = getattr(self, "_entry_level", 0)
        for lv in range(top, level, -1):
            cur = self._greedy(q, cur, lv)
        for lv in range(min(level, top), -1, -1):
            found = self._search_layer(q, cur, self._ef_construction, lv)
            m_max = self._m0 if lv == 0 else self._m
            selected = [i for _, i in found[:self._m]]
            self._neighbours[lv][node] = selected
            for nb in selected:
                links = self._neighbours[lv].setdefault(nb, [])
                links.append(node)
                if len(links) > m_max:
                    sims = self._sim(self._unit[nb], links)
                    order = np.argsort(-sims, kind="stable")[:m_max]
                    self._neighbours[lv][nb] = [links[i] for i in order]
            cur = found[0][1]
        if level > getattr(self, "_entry_level", 0):
            self._entry = node
            self._entry_level = level
            for lv in range(self._max_level + 1):
                self._neighbours[lv].setdefault(node, [])

    def query(self, vector: np.ndarray, k: int, exclude: int | None = None):
        if k < 1:
            raise UsageError(f"k must be >= 1, got {k}")
        v = np.asarray(vector, dtype=np.float64).ravel()
        if v.shape[0] != self.dim:
            raise ShapeError(f"query dim {v.shape[0]} vs index dim {self.dim}")
        norm = np.linalg.norm(v)
        if norm == 0:
            raise UsageError("zero-norm query vector")
        q = v / norm
        cur = self._entry
        for lv in range(getattr(self, "_entry_level", 0), 0, -1):
            cur = self._greedy(q, cur, lv)
        ef = max(self.ef_search, k + 1)
        found = self._search_layer(q, cur, ef, 0)
        out = [(i, s) for s, i in found if i != exclude]
        out.sort(key=lambda pair: (-pair[1], pair[0]))
        return [(int(i), float(s)) for i, s in out[:k]]


AnnIndex = ExactIndex | HnswIndex


def build_index(embeddings: np.ndarray, mode: str = "exact",
                seed: int = 0) -> AnnIndex:
    """Cosine k-NN index; exact brute force or approximate small-world."""
    emb = np.asarray(embeddings)
    if emb.ndim != 2 or emb.shape[0] < 1:
        raise UsageError(f"need a non-empty 2-D embedding matrix, got shape {emb.shape}")
    if not np.all(np.isfinite(emb)):
        raise DataError("non-finite values in embeddings")
    if mode == "exact":
        return ExactIndex(emb)
    if mode == "ann":
        return HnswIndex(emb, seed=seed)
    raise UsageError(f"unknown index mode '{mode}'")


def knn_query(index: AnnIndex, vector: np.ndarray, k: int,
              exclude: int | None = None):
    """Up to k (node id, cosine) pairs, descending cosine."""
    return index.query(vector, k, exclude=exclude)


@dataclass(frozen=True, eq=False)
class SemanticGraph:
    """Undirected weighted graph; immutable after construction.

    ``edges`` is an (m, 2) array with u < v per row; ``weights`` holds
    the cosine similarity of the endpoints' feature rows. Self-loops are
    not stored; layers add them virtually.
    """

    features: np.ndarray            # (n, d) float32
    edges: np.ndarray               # (m, 2) uint32, u < v, lexicographically sorted
    weights: np.ndarray             # (m,) float32
    labels: np.ndarray              # (n,) int16, -1 = absent
    holdout: np.ndarray             # (n,) bool
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def node_count(self) -> int:
        return self.features.shape[0]

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def isolated_nodes(self) -> np.ndarray:
        present = np.zeros(self.node_count, dtype=bool)
        present[self.edges.ravel()] = True
        return np.where(~present)[0]

    def adjacency(self) -> np.ndarray:
        """Dense weighted adjacency (float64), zero diagonal."""
        a = np.zeros((self.node_count, self.node_count))
        u, v = self.edges[:, 0], self.edges[:, 1]
        a[u, v] = self.weights
        a[v, u] = self.weights
        return a

    def neighbour_lists(self) -> list[list[tuple[int, float]]]:
        out: list[list[tuple[int, float]]] = [[] for _ in range(self.node_count)]
        for (u, v), w in zip(self.edges, self.weights):
            out[int(u)].append((int(v), float(w)))
            out[int(v)].append((int(u), float(w)))
        return out


def _finalize_edges(pairs: dict[tuple[int, int], float]):
    if not pairs:
        return (np.zeros((0, 2), dtype=np.uint32), np.zeros(0, dtype=np.float32))
    keys = sorted(pairs)
    edges = np.array(keys, dtype=np.uint32)
    weights = np.array([pairs[k] for k in keys], dtype=np.float32)
    return edges, weights


def build_graph(embeddings: np.ndarray, k: int = DEFAULT_K,
                threshold: float = DEFAULT_THRESHOLD,
                labels=None, mode: str = "exact", seed: int = 0) -> SemanticGraph:
    """k-NN edges per node, threshold-filtered, symmetrized by union."""
    emb = np.asarray(embeddings)
    n = emb.shape[0]
    if k < 1 or k >= n:
        raise UsageError(f"k must be in [1, node_count-1], got k={k}, n={n}")
    # Thresholds above 1 are legal and simply produce an empty edge set.
    if threshold < -1.0:
        raise UsageError(f"threshold must be >= -1, got {threshold}")
    if labels is not None and len(labels) != n:
        raise UsageError(f"labels length {len(labels)} vs {n} nodes")
    index = build_index(emb, mode=mode, seed=seed)
    unit = _normalized_rows(emb)
    pairs: dict[tuple[int, int], float] = {}
    for u in range(n):
        for v, _ in knn_query(index, emb[u], k, exclude=u):
            # Exact cosine of the raw rows, not the index's estimate.
            w = float(unit[u] @ unit[v])
            if w >= threshold:
                key = (u, v) if u < v else (v, u)
                pairs.setdefault(key, w)
    edges, weights = _finalize_edges(pairs)
    lab = np.full(n, -1, dtype=np.int16) if labels is None \
        else np.asarray(labels, dtype=np.int16)
    return SemanticGraph(
        features=np.ascontiguousarray(emb, dtype=np.float32),
        edges=edges, weights=weights, labels=lab,
        holdout=np.zeros(n, dtype=bool))


def extend_graph(graph: SemanticGraph, holdout_embeddings: np.ndarray,
                 k: int = DEFAULT_K, threshold: float = DEFAULT_THRESHOLD,
                 mode: str = "exact", seed: int = 0) -> SemanticGraph:
    """Append holdout nodes connected only to the original training nodes."""
    hold = np.asarray(holdout_embeddings)
    if hold.ndim != 2 or hold.shape[1] != graph.dim:
        raise ShapeError(f"holdout dim {hold.shape} vs graph dim {graph.dim}")
    if threshold < -1.0:
        raise UsageError(f"threshold must be >= -1, got {threshold}")
    n_train = graph.node_count
    # Neighbours are drawn from the training nodes only.
    index = build_index(graph.features, mode=mode, seed=seed)
    train_unit = _normalized_rows(graph.features)
    hold_unit = _normalized_rows(hold)
    pairs = {(int(u), int(v)): float(w)
             for (u, v), w in zip(graph.edges, graph.weights)}
    k_eff = min(k, n_train)
    isolated = 0
    for i in range(hold.shape[0]):
        node = n_train + i
        attached = 0
        for v, _ in knn_query(index, hold[i], k_eff):
            w = float(hold_unit[i] @ train_unit[v])
            if w >= threshold:
                pairs[(v, node)] = w
                attached += 1
        if attached == 0:
            isolated += 1
    if isolated:
        log.warning("extend_graph: %d holdout node(s) attached no edges", isolated)
    edges, weights = _finalize_edges(pairs)
    features = np.concatenate(
        [graph.features, np.ascontiguousarray(hold, dtype=np.float32)])
    labels = np.concatenate(
        [graph.labels, np.full(hold.shape[0], -1, dtype=np.int16)])
    holdout = np.concatenate(
        [graph.holdout, np.ones(hold.shape[0], dtype=bool)])
    return SemanticGraph(features=features, edges=edges, weights=weights,
                         labels=labels, holdout=holdout,
                         diagnostics={"isolated_holdout": isolated})


def save_graph(graph: SemanticGraph, path: str | Path) -> None:
    """SGRF binary format; deterministic byte-for-byte."""
    with Path(path).open("wb") as fh:
        fh.write(_SGRF_MAGIC)
        fh.write(struct.pack("<H", _SGRF_VERSION))
        fh.write(struct.pack("<QQ", graph.node_count, graph.edge_count))
        fh.write(np.packbits(graph.holdout, bitorder="little").tobytes())
        fh.write(graph.labels.astype("<i2").tobytes())
        rec = np.zeros(graph.edge_count,
                       dtype=[("u", "<u4"), ("v", "<u4"), ("w", "<f4")])
        rec["u"] = graph.edges[:, 0]
        rec["v"] = graph.edges[:, 1]
        rec["w"] = graph.weights
        fh.write(rec.tobytes())


def load_graph(path: str | Path, features: np.ndarray | None = None) -> SemanticGraph:
    """Read an SGRF file; ``features`` reattaches the embedding matrix
    (the file itself stores only the structure)."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _SGRF_MAGIC:
        raise DataError(f"{path}: bad magic {raw[:4]!r}")
    (version,) = struct.unpack("<H", raw[4:6])
    if version != _SGRF_VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    n, m = struct.unpack("<QQ", raw[6:22])
    off = 22
    mask_bytes = (n + 7) // 8
    holdout = np.unpackbits(
        np.frombuffer(raw[off:off + mask_bytes], dtype=np.uint8),
        bitorder="little")[:n].astype(bool)
    off += mask_bytes
    labels = np.frombuffer(raw[off:off + 2 * n], dtype="<i2").copy()
    off += 2 * n
    rec = np.frombuffer(raw[off:off + 12 * m],
                        dtype=[("u", "<u4"), ("v", "<u4"), ("w", "<f4")])
    if rec.shape[0] != m:
        raise DataError(f"{path}: truncated edge section")
    edges = np.stack([rec["u"], rec["v"]], axis=1).astype(np.uint32)
    weights = rec["w"].copy()
    if features is None:
        features = np.zeros((n, 0), dtype=np.float32)
    else:
        features = np.ascontiguousarray(features, dtype=np.float32)
        if features.shape[0] != n:
            raise DataError(
                f"{path}: {n} nodes but {features.shape[0]} feature rows")
    return SemanticGraph(features=features, edges=edges, weights=weights,
                         labels=labels, holdout=holdout)
