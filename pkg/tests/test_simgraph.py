import numpy as np
import pytest

from sesame.errors import ShapeError, UsageError
from sesame.simgraph import (build_graph, build_index, extend_graph,
                             knn_query, load_graph, save_graph)


def unit_rows(mat):
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)


class TestIndex:
    def test_orthogonal_vectors_exact(self):
        emb = np.eye(3)
        index = build_index(emb, mode="exact")
        (top, cos), *_ = knn_query(index, emb[0], 1, exclude=0)
        assert top != 0
        assert cos == pytest.approx(0.0, abs=1e-12)

    def test_duplicate_row_is_top_hit(self):
        emb = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        index = build_index(emb, mode="exact")
        (top, cos), *_ = knn_query(index, emb[0], 1, exclude=0)
        assert top == 1 and cos == pytest.approx(1.0)

    def test_exclude_self(self):
        rng = np.random.default_rng(0)
        emb = rng.normal(size=(20, 8))
        index = build_index(emb, mode="exact")
        for i in range(20):
            hits = knn_query(index, emb[i], 5, exclude=i)
            assert i not in [h for h, _ in hits]

    def test_k_larger_than_store(self):
        emb = np.random.default_rng(1).normal(size=(4, 3))
        index = build_index(emb, mode="exact")
        assert len(knn_query(index, emb[0], 100)) == 4

    def test_descending_cosine(self):
        emb = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        index = build_index(emb, mode="exact")
        hits = knn_query(index, emb[0], 2, exclude=0)
        assert hits == [(1, pytest.approx(1.0)), (2, pytest.approx(0.0))]

    def test_zero_norm_row_rejected(self):
        emb = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(UsageError, match="row 1"):
            build_index(emb, mode="exact")

    def test_dim_mismatch(self):
        index = build_index(np.eye(3), mode="exact")
        with pytest.raises(ShapeError):
            knn_query(index, np.ones(5), 1)

    def test_ann_recall_at_10(self):
        rng = np.random.default_rng(42)
        emb = rng.normal(size=(1000, 64))
        exact = build_index(emb, mode="exact")
        ann = build_index(emb, mode="ann", seed=7)
        hits = 0
        total = 0
        for q in range(0, 1000, 10):
            truth = {i for i, _ in knn_query(exact, emb[q], 10, exclude=q)}
            found = {i for i, _ in knn_query(ann, emb[q], 10, exclude=q)}
            hits += len(truth & found)
            total += len(truth)
        assert hits / total >= 0.9

    def test_ann_deterministic(self):
        rng = np.random.default_rng(3)
        emb = rng.normal(size=(200, 16))
        a = build_index(emb, mode="ann", seed=5)
        b = build_index(emb, mode="ann", seed=5)
        q = rng.normal(size=16)
        assert knn_query(a, q, 10) == knn_query(b, q, 10)


class TestBuildGraph:
    def test_impossible_threshold_gives_empty_graph(self):
        emb = np.random.default_rng(0).normal(size=(5, 4))
        g = build_graph(emb, k=2, threshold=1.01, labels=np.zeros(5))
        assert g.edge_count == 0

    def test_threshold_below_minus_one_rejected(self):
        emb = np.random.default_rng(0).normal(size=(5, 4))
        with pytest.raises(UsageError, match="threshold"):
            build_graph(emb, k=2, threshold=-1.5, labels=np.zeros(5))

    def test_threshold_one_keeps_only_duplicates(self):
        emb = np.array([[1.0, 0.0], [1.0, 0.0], [0.2, 0.9]])
        g = build_graph(emb, k=1, threshold=1.0, labels=np.zeros(3))
        assert g.edge_count == 1
        assert g.weights[0] == pytest.approx(1.0)

    def test_identical_pair(self):
        emb = np.array([[0.5, 0.5], [0.5, 0.5], [1.0, -1.0]])
        g = build_graph(emb, k=1, threshold=0.9, labels=np.zeros(3))
        assert g.edge_count == 1
        assert tuple(g.edges[0]) == (0, 1)

    def test_two_clusters_no_cross_edges(self):
        rng = np.random.default_rng(1)
        a = unit_rows(np.array([1.0, 0.0, 0.0]) + 0.05 * rng.normal(size=(3, 3)))
        b = unit_rows(np.array([0.0, 0.0, 1.0]) + 0.05 * rng.normal(size=(2, 3)))
        emb = np.concatenate([a, b])
        g = build_graph(emb, k=2, threshold=0.5, labels=np.zeros(5))
        for u, v in g.edges:
            assert (u < 3) == (v < 3)

    def test_k_too_large(self):
        with pytest.raises(UsageError, match="k"):
            build_graph(np.eye(3), k=3, labels=np.zeros(3))

    def test_symmetric_weights_match_cosine(self):
        rng = np.random.default_rng(2)
        emb = rng.normal(size=(40, 8))
        g = build_graph(emb, k=5, threshold=-1.0, labels=np.zeros(40))
        unit = unit_rows(emb)
        for (u, v), w in zip(g.edges, g.weights):
            assert u < v
            assert abs(float(unit[u] @ unit[v]) - w) < 1e-6

    def test_matches_bruteforce_all_pairs(self):
        rng = np.random.default_rng(3)
        emb = rng.normal(size=(60, 6))
        k, thr = 4, 0.2
        g = build_graph(emb, k=k, threshold=thr, labels=np.zeros(60))
        unit = unit_rows(emb)
        sims = unit @ unit.T
        np.fill_diagonal(sims, -np.inf)
        expected = set()
        for u in range(60):
            order = np.argsort(-sims[u], kind="stable")[:k]
            for v in order:
                if sims[u, v] >= thr:
                    expected.add((min(u, int(v)), max(u, int(v))))
        got = {(int(u), int(v)) for u, v in g.edges}
        assert got == expected

    def test_holdout_mask_all_false(self):
        emb = np.random.default_rng(4).normal(size=(10, 4))
        g = build_graph(emb, k=2, threshold=-1.0, labels=np.zeros(10))
        assert not g.holdout.any()


class TestExtendGraph:
    def base_graph(self):
        rng = np.random.default_rng(5)
        emb = rng.normal(size=(20, 6))
        return build_graph(emb, k=3, threshold=-1.0,
                           labels=np.zeros(20, dtype=np.int16)), emb

    def test_duplicate_of_training_vector(self):
        g, emb = self.base_graph()
        ext = extend_graph(g, emb[0:1], k=1, threshold=0.9)
        new_edges = [(int(u), int(v)) for u, v in ext.edges
                     if 20 in (u, v)]
        assert new_edges == [(0, 20)]
        assert ext.holdout[20] and not ext.holdout[:20].any()
        assert ext.labels[20] == -1

    def test_far_holdout_isolated(self):
        g, emb = self.base_graph()
        far = np.zeros((1, 6))
        far[0, 0] = 1.0
        ext = extend_graph(g, far, k=3, threshold=0.999)
        assert ext.diagnostics["isolated_holdout"] == 1
        assert ext.edge_count == g.edge_count

    def test_no_holdout_holdout_edges(self):
        g, emb = self.base_graph()
        pair = np.tile(np.array([[10.0, 0, 0, 0, 0, 0]]), (2, 1))
        ext = extend_graph(g, pair, k=5, threshold=-1.0)
        holdout_ids = {20, 21}
        for u, v in ext.edges:
            assert not ({int(u), int(v)} <= holdout_ids)

    def test_original_edges_unchanged(self):
        g, emb = self.base_graph()
        ext = extend_graph(g, emb[:3], k=2, threshold=0.5)
        old = {(int(u), int(v)): float(w) for (u, v), w in zip(g.edges, g.weights)}
        new = {(int(u), int(v)): float(w) for (u, v), w in zip(ext.edges, ext.weights)
               if v < 20}
        assert new == old

    def test_dim_mismatch(self):
        g, _ = self.base_graph()
        with pytest.raises(ShapeError):
            extend_graph(g, np.ones((1, 3)))


class TestGraphIO:
    def test_bit_exact_roundtrip(self, tmp_path):
        rng = np.random.default_rng(6)
        emb = rng.normal(size=(30, 5)).astype(np.float32)
        g = build_graph(emb, k=4, threshold=-1.0,
                        labels=rng.integers(0, 7, 30).astype(np.int16))
        ext = extend_graph(g, rng.normal(size=(3, 5)), k=2, threshold=-1.0)
        path = tmp_path / "g.sgrf"
        save_graph(ext, path)
        first = path.read_bytes()
        loaded = load_graph(path, features=ext.features)
        assert loaded.node_count == ext.node_count
        assert np.array_equal(loaded.edges, ext.edges)
        assert np.array_equal(loaded.weights, ext.weights)
        assert np.array_equal(loaded.labels, ext.labels)
        assert np.array_equal(loaded.holdout, ext.holdout)
        save_graph(loaded, path)
        assert path.read_bytes() == first
