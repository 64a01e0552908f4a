import numpy as np
import pytest

from sesame import tensor as T
from sesame.errors import DataError, ShapeError, UsageError
from sesame.gnn import (GnnConfig, GnnModel, _layer_operator, decode_ordinal,
                        decode_ordinal_batch, drop_edge, encode_ordinal,
                        forward, init_params, layer_forward, load_model,
                        ordinal_targets, predict, prefix_violation_rate,
                        save_model, train_gnn)
from sesame.simgraph import SemanticGraph, build_graph, extend_graph


def random_graph(n=10, dim=5, k_classes=7, seed=0, p_edge=0.3):
    rng = np.random.default_rng(seed)
    features = rng.normal(size=(n, dim)).astype(np.float32)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)
             if rng.random() < p_edge]
    edges = np.array(pairs, dtype=np.uint32).reshape(-1, 2)
    weights = rng.uniform(0.1, 1.0, len(pairs)).astype(np.float32)
    labels = rng.integers(0, k_classes, n).astype(np.int16)
    return SemanticGraph(features=features, edges=edges, weights=weights,
                         labels=labels, holdout=np.zeros(n, dtype=bool))


class TestOrdinalCoding:
    def test_middle_label(self):
        assert np.array_equal(encode_ordinal(3, 7),
                              [1, 1, 1, 1, 0, 0, 0])

    def test_first_label(self):
        assert np.array_equal(encode_ordinal(0, 7),
                              [1, 0, 0, 0, 0, 0, 0])

    def test_last_label_all_ones(self):
        assert np.array_equal(encode_ordinal(6, 7), np.ones(7))

    def test_out_of_range(self):
        with pytest.raises(UsageError):
            encode_ordinal(7, 7)
        with pytest.raises(UsageError):
            encode_ordinal(-1, 7)

    def test_decode_prefix(self):
        assert decode_ordinal([0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.05]) == 2

    def test_decode_all_low_clamps_to_zero(self):
        assert decode_ordinal([0.1] * 7) == 0

    def test_roundtrip_sharpened(self):
        for y in range(7):
            sharp = np.where(encode_ordinal(y, 7) > 0, 0.99, 0.01)
            assert decode_ordinal(sharp) == y

    def test_batch_decode_matches_scalar(self):
        rng = np.random.default_rng(0)
        scores = rng.random((50, 7))
        batch = decode_ordinal_batch(scores)
        assert all(batch[i] == decode_ordinal(scores[i]) for i in range(50))

    def test_prefix_violation_rate(self):
        clean = np.array([[0.9, 0.9, 0.1]])
        broken = np.array([[0.9, 0.1, 0.9]])
        assert prefix_violation_rate(clean) == 0.0
        assert prefix_violation_rate(broken) == 1.0


class TestDropEdge:
    def test_p_zero_identity(self):
        g = random_graph(20, p_edge=0.5)
        e, w = drop_edge(g.edges, g.weights, 0.0, seed=1, epoch=0)
        assert np.array_equal(e, g.edges) and np.array_equal(w, g.weights)

    def test_quarter_drop_within_5_sigma(self):
        m = 10_000
        edges = np.array([(i, i + 1) for i in range(0, 2 * m, 2)],
                         dtype=np.uint32)
        weights = np.ones(m, dtype=np.float32)
        e, _ = drop_edge(edges, weights, 0.25, seed=3, epoch=0)
        expected = 0.75 * m
        sigma = np.sqrt(m * 0.25 * 0.75)
        assert abs(e.shape[0] - expected) < 5 * sigma

    def test_heavy_drop(self):
        m = 10_000
        edges = np.array([(i, i + 1) for i in range(0, 2 * m, 2)],
                         dtype=np.uint32)
        e, _ = drop_edge(edges, np.ones(m, dtype=np.float32), 0.999,
                         seed=5, epoch=0)
        sigma = np.sqrt(m * 0.999 * 0.001)
        assert e.shape[0] <= m * 0.001 + 5 * sigma

    def test_deterministic_in_seed_and_epoch(self):
        g = random_graph(30, p_edge=0.5)
        a, _ = drop_edge(g.edges, g.weights, 0.5, seed=7, epoch=3)
        b, _ = drop_edge(g.edges, g.weights, 0.5, seed=7, epoch=3)
        c, _ = drop_edge(g.edges, g.weights, 0.5, seed=7, epoch=4)
        assert np.array_equal(a, b)
        assert a.shape != c.shape or not np.array_equal(a, c)


class TestLayerForward:
    def config(self, arch, dim=4, hidden=3):
        return GnnConfig(architecture=arch, input_dim=dim, hidden_dim=hidden,
                         layers=1, k=3)

    def test_gcn_single_node_self_loop(self):
        config = self.config("gcn")
        rng = np.random.default_rng(0)
        params = init_params(config, rng)
        h = rng.normal(size=(1, 4))
        op = _layer_operator("gcn", 1, np.zeros((0, 2), dtype=np.uint32),
                             np.zeros(0))
        out = layer_forward("gcn", T.Tensor(h), op, params, 0, config)
        expected = np.tanh(h @ params["layer0.W"].data + params["layer0.b"].data)
        assert np.allclose(out.data, expected)

    def test_gcn_two_nodes_half_half(self):
        # one edge, weight 1: d_u = d_v = 2, both coefficients 1/2
        config = self.config("gcn")
        rng = np.random.default_rng(1)
        params = init_params(config, rng)
        h = rng.normal(size=(2, 4))
        edges = np.array([[0, 1]], dtype=np.uint32)
        op = _layer_operator("gcn", 2, edges, np.array([1.0]))
        out = layer_forward("gcn", T.Tensor(h), op, params, 0, config)
        expected = np.tanh((h / 2 + h[::-1] / 2) @ params["layer0.W"].data
                           + params["layer0.b"].data)
        assert np.allclose(out.data, expected)

    def test_zero_weights_zero_output(self):
        config = self.config("gcn")
        params = init_params(config, np.random.default_rng(2))
        params["layer0.W"].data[:] = 0.0
        op = _layer_operator("gcn", 2, np.array([[0, 1]], dtype=np.uint32),
                             np.array([0.5]))
        out = layer_forward("gcn", T.Tensor(np.ones((2, 4))), op, params, 0,
                            self.config("gcn"))
        assert np.allclose(out.data, 0.0)

    def test_sage_empty_neighborhood(self):
        config = self.config("sage")
        rng = np.random.default_rng(3)
        params = init_params(config, rng)
        h = rng.normal(size=(1, 4))
        op = _layer_operator("sage", 1, np.zeros((0, 2), dtype=np.uint32),
                             np.zeros(0))
        out = layer_forward("sage", T.Tensor(h), op, params, 0, config)
        expected = np.tanh(h @ params["layer0.Wself"].data
                           + params["layer0.b"].data)
        assert np.allclose(out.data, expected)

    def test_gat_attention_rows_sum_to_one(self):
        g = random_graph(8, dim=4, seed=4, p_edge=0.4)
        config = self.config("gat")
        params = init_params(config, np.random.default_rng(4))
        op = _layer_operator("gat", 8, g.edges, g.weights)
        z = T.matmul(T.Tensor(g.features.astype(np.float64)),
                     params["layer0.head0.W"])
        s_src = T.matmul(z, params["layer0.head0.a_src"])
        s_dst = T.matmul(z, params["layer0.head0.a_dst"])
        logits = T.leaky_relu(T.add(s_src, T.transpose(s_dst)), 0.2)
        alpha = T.row_softmax(T.add(logits, T.Tensor(op))).data
        assert np.allclose(alpha.sum(axis=1), 1.0, atol=1e-6)
        # mass only on the neighbourhood plus the self loop
        allowed = np.isfinite(op)
        assert np.all(alpha[~allowed] == 0.0)

    def test_shape_mismatch(self):
        config = self.config("gcn")
        params = init_params(config, np.random.default_rng(5))
        op = _layer_operator("gcn", 3, np.zeros((0, 2), dtype=np.uint32),
                             np.zeros(0))
        with pytest.raises(ShapeError):
            layer_forward("gcn", T.Tensor(np.ones((2, 4))), op, params, 0, config)

    @pytest.mark.parametrize("arch", ["gcn", "gin", "sage", "gat"])
    def test_permutation_equivariance(self, arch):
        g = random_graph(9, dim=4, seed=6, p_edge=0.4)
        config = GnnConfig(architecture=arch, input_dim=4, hidden_dim=4,
                           layers=2, k=3)
        params = init_params(config, np.random.default_rng(7))
        out = forward(params, config, g.features, g.edges, g.weights).data
        perm = np.random.default_rng(8).permutation(9)
        inv = np.argsort(perm)
        # relabel: node i becomes inv[i]
        p_edges = inv[g.edges.astype(int)].astype(np.uint32)
        p_feat = g.features[perm]
        p_out = forward(params, config, p_feat, p_edges, g.weights).data
        assert np.allclose(p_out, out[perm], atol=1e-8)

    @pytest.mark.parametrize("arch", ["gcn", "gin", "sage", "gat"])
    def test_bce_gradient_vs_finite_differences(self, arch):
        g = random_graph(10, dim=3, seed=9, p_edge=0.4)
        config = GnnConfig(architecture=arch, input_dim=3, hidden_dim=4,
                           layers=2, k=3)
        params = init_params(config, np.random.default_rng(10))
        targets = ordinal_targets(np.clip(g.labels, 0, 2), 3)
        names = list(params)

        def loss():
            logits = forward(params, config, g.features, g.edges, g.weights)
            return T.bce_with_logits(logits, targets)

        for p in params.values():
            p.grad = None
        out = loss()
        T.backward(out)
        eps = 1e-4
        for name in names:
            p = params[name]
            ana = p.grad if p.grad is not None else np.zeros_like(p.data)
            it = np.nditer(p.data, flags=["multi_index"])
            for _ in it:
                i = it.multi_index
                orig = p.data[i]
                p.data[i] = orig + eps
                lp = loss().data
                p.data[i] = orig - eps
                lm = loss().data
                p.data[i] = orig
                num = (lp - lm) / (2 * eps)
                denom = max(abs(num) + abs(ana[i]), 1e-6)
                assert abs(num - ana[i]) / denom < 1e-3, (arch, name, i)


class TestTraining:
    def test_uniform_label_graph_hits_full_accuracy(self):
        g = random_graph(20, dim=4, seed=11, p_edge=0.3)
        uniform = SemanticGraph(features=g.features, edges=g.edges,
                                weights=g.weights,
                                labels=np.full(20, 2, dtype=np.int16),
                                holdout=g.holdout)
        config = GnnConfig(architecture="gcn", input_dim=4, hidden_dim=8,
                           layers=2, k=7, epochs=200, seed=0,
                           val_fraction=0.0, drop_edge_p=0.0)
        _, history = train_gnn(uniform, config)
        assert any(rec["train_acc"] == 1.0 for rec in history)

    def test_same_seed_identical_parameters(self):
        g = random_graph(15, dim=4, seed=12, p_edge=0.3)
        config = GnnConfig(architecture="sage", input_dim=4, hidden_dim=8,
                           layers=2, k=7, epochs=10, seed=3)
        m1, _ = train_gnn(g, config)
        m2, _ = train_gnn(g, config)
        for name in m1.params:
            assert np.array_equal(m1.params[name].data, m2.params[name].data)

    def test_history_records_metrics(self):
        g = random_graph(30, dim=4, seed=13, p_edge=0.3)
        config = GnnConfig(architecture="gcn", input_dim=4, hidden_dim=8,
                           layers=2, k=7, epochs=5, seed=1)
        _, history = train_gnn(g, config)
        assert len(history) == 5
        for key in ("train_loss", "train_acc", "train_ofa",
                    "val_loss", "val_acc", "val_ofa"):
            assert key in history[0]

    def test_unlabeled_node_rejected(self):
        g = random_graph(10, dim=4, seed=14)
        labels = g.labels.copy()
        labels[0] = -1
        bad = SemanticGraph(features=g.features, edges=g.edges,
                            weights=g.weights, labels=labels,
                            holdout=g.holdout)
        config = GnnConfig(architecture="gcn", input_dim=4, k=7, epochs=1)
        with pytest.raises(DataError):
            train_gnn(bad, config)


class TestPredict:
    def trained_setup(self):
        rng = np.random.default_rng(15)
        centers = np.eye(3)
        labels = np.repeat(np.arange(3), 10).astype(np.int16)
        emb = centers[labels] + 0.05 * rng.normal(size=(30, 3))
        emb /= np.linalg.norm(emb, axis=1, keepdims=True)
        g = build_graph(emb, k=3, threshold=0.5, labels=labels)
        config = GnnConfig(architecture="gcn", input_dim=3, hidden_dim=8,
                           layers=2, k=3, epochs=120, seed=0,
                           drop_edge_p=0.0, val_fraction=0.0)
        model, _ = train_gnn(g, config)
        return g, emb, labels, model

    def test_duplicated_holdout_matches_training_scores(self):
        g, emb, labels, model = self.trained_setup()
        ext = extend_graph(g, emb[:3], k=3, threshold=0.5)
        idx, classes, scores = predict(model, ext)
        full_scores = model.scores(ext)
        for j, node in enumerate(idx):
            assert np.allclose(scores[j], full_scores[node])
        # prediction matches the training nodes' own class
        assert np.array_equal(classes, labels[:3])

    def test_isolated_holdout_uses_own_features(self):
        g, emb, labels, model = self.trained_setup()
        far = np.zeros((1, 3))
        far[0, 0] = -1.0
        ext = extend_graph(g, far, k=3, threshold=0.999)
        idx, classes, scores = predict(model, ext)
        assert len(idx) == 1
        assert np.all(np.isfinite(scores))

    def test_dim_mismatch_rejected(self):
        g, emb, labels, model = self.trained_setup()
        other = SemanticGraph(features=np.ones((4, 5), dtype=np.float32),
                              edges=np.zeros((0, 2), dtype=np.uint32),
                              weights=np.zeros(0, dtype=np.float32),
                              labels=np.full(4, -1, dtype=np.int16),
                              holdout=np.ones(4, dtype=bool))
        with pytest.raises(ShapeError):
            predict(model, other)


class TestCheckpoint:
    @pytest.mark.parametrize("arch", ["gcn", "gin", "sage", "gat"])
    def test_bit_exact_roundtrip(self, tmp_path, arch):
        config = GnnConfig(architecture=arch, input_dim=6, hidden_dim=4,
                           layers=2, k=7, seed=5)
        params = init_params(config, np.random.default_rng(16))
        # float32-representable values so save/load is lossless
        for p in params.values():
            p.data = p.data.astype(np.float32).astype(np.float64)
        model = GnnModel(config=config, params=params)
        path = tmp_path / "m.sckp"
        save_model(model, path)
        first = path.read_bytes()
        loaded = load_model(path)
        assert loaded.config == config
        assert list(loaded.params) == list(params)
        for name in params:
            assert np.array_equal(loaded.params[name].data, params[name].data)
        save_model(loaded, path)
        assert path.read_bytes() == first
