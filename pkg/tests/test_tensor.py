import numpy as np
import pytest

from sesame import tensor as T
from sesame.errors import NumericError, ShapeError, UsageError


def finite_diff(fn, params, eps=1e-4):
    """Central finite differences for a scalar fn of Tensor params."""
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        it = np.nditer(p.data, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            orig = p.data[i]
            p.data[i] = orig + eps
            lp = fn().data
            p.data[i] = orig - eps
            lm = fn().data
            p.data[i] = orig
            g[i] = (lp - lm) / (2 * eps)
        grads.append(g)
    return grads


def check_gradients(fn, params, rtol=1e-3):
    for p in params:
        p.grad = None
    loss = fn()
    T.backward(loss)
    numeric = finite_diff(fn, params)
    for p, num in zip(params, numeric):
        ana = p.grad if p.grad is not None else np.zeros_like(p.data)
        denom = np.maximum(np.abs(num) + np.abs(ana), 1e-6)
        assert np.max(np.abs(num - ana) / denom) < rtol


class TestForwardOps:
    def test_tanh_zero(self):
        assert np.array_equal(T.tanh(np.zeros((2, 3))).data, np.zeros((2, 3)))

    def test_sigmoid_half(self):
        assert T.sigmoid(np.zeros((1, 1))).data[0, 0] == 0.5

    def test_sigmoid_open_interval(self):
        x = np.array([[-800.0, -20.0, 0.0, 20.0, 800.0]])
        out = T.sigmoid(x).data
        assert np.all(out > 0) and np.all(out < 1)

    def test_matmul_identity(self):
        a = np.random.default_rng(0).normal(size=(2, 4))
        assert np.allclose(T.matmul(np.eye(2), a).data, a)

    def test_matmul_shape_error(self):
        with pytest.raises(ShapeError, match="matmul"):
            T.matmul(np.zeros((2, 3)), np.zeros((4, 5)))

    def test_add_shape_error(self):
        with pytest.raises(ShapeError, match="add"):
            T.add(np.zeros((2, 3)), np.zeros((3, 4)))

    def test_row_softmax_sums_to_one(self):
        x = np.random.default_rng(1).normal(size=(5, 7)) * 10
        rows = T.row_softmax(x).data.sum(axis=1)
        assert np.allclose(rows, 1.0, atol=1e-6)

    def test_row_softmax_with_minus_inf(self):
        x = np.array([[0.0, -np.inf, 1.0]])
        out = T.row_softmax(x).data
        assert out[0, 1] == 0.0
        assert np.isclose(out.sum(), 1.0)

    def test_leaky_relu_slope(self):
        out = T.leaky_relu(np.array([[-1.0, 2.0]]), 0.2).data
        assert np.allclose(out, [[-0.2, 2.0]])

    def test_concat_cols(self):
        a, b = np.ones((2, 2)), np.zeros((2, 3))
        assert T.concat_cols(a, b).data.shape == (2, 5)

    def test_deterministic_forward(self):
        x = np.random.default_rng(2).normal(size=(3, 3))
        assert np.array_equal(T.tanh(x).data, T.tanh(x).data)


class TestGradients:
    def test_square_at_three(self):
        x = T.Tensor(np.array(3.0))
        loss = T.elementwise_mul(x, x)
        T.backward(loss)
        assert np.isclose(x.grad, 6.0)

    def test_constant_has_zero_grad(self):
        x = T.Tensor(np.array(2.0))
        loss = T.Tensor(np.array(5.0))
        T.backward(loss)
        assert x.grad is None

    def test_non_scalar_loss_rejected(self):
        with pytest.raises(UsageError, match="scalar"):
            T.backward(T.Tensor(np.zeros((2, 2))))

    @pytest.mark.parametrize("seed", range(5))
    def test_elementwise_ops(self, seed):
        rng = np.random.default_rng(seed)
        shape = (rng.integers(1, 5), rng.integers(1, 5))
        x = T.Tensor(rng.normal(size=shape))
        for op in (T.tanh, T.sigmoid, lambda t: T.leaky_relu(t, 0.2),
                   lambda t: T.scale(t, 1.7), T.row_softmax):
            weight = T.Tensor(rng.normal(size=shape))
            check_gradients(
                lambda op=op, weight=weight: T.sum_all(
                    T.elementwise_mul(op(x), weight)), [x])

    @pytest.mark.parametrize("seed", range(5))
    def test_matmul_add_chain(self, seed):
        rng = np.random.default_rng(100 + seed)
        a = T.Tensor(rng.normal(size=(3, 4)))
        b = T.Tensor(rng.normal(size=(4, 2)))
        bias = T.Tensor(rng.normal(size=(1, 2)))
        check_gradients(
            lambda: T.sum_all(T.tanh(T.add(T.matmul(a, b), bias))),
            [a, b, bias])

    @pytest.mark.parametrize("seed", range(5))
    def test_logsumexp_normalize_concat(self, seed):
        rng = np.random.default_rng(200 + seed)
        x = T.Tensor(rng.normal(size=(4, 3)))
        y = T.Tensor(rng.normal(size=(4, 2)))
        check_gradients(
            lambda: T.sum_all(T.row_logsumexp(T.concat_cols(
                T.l2_normalize_rows(x), y))), [x, y])

    @pytest.mark.parametrize("seed", range(5))
    def test_mlp_bce_vs_finite_differences(self, seed):
        rng = np.random.default_rng(300 + seed)
        w1 = T.Tensor(rng.normal(size=(4, 6)))
        b1 = T.Tensor(np.zeros((1, 6)))
        w2 = T.Tensor(rng.normal(size=(6, 3)))
        b2 = T.Tensor(np.zeros((1, 3)))
        x = rng.normal(size=(5, 4))
        t = rng.integers(0, 2, size=(5, 3)).astype(float)

        def loss():
            h = T.tanh(T.add(T.matmul(T.Tensor(x), w1), b1))
            return T.bce_with_logits(T.add(T.matmul(h, w2), b2), t)

        check_gradients(loss, [w1, b1, w2, b2])

    def test_mean_rows_grad(self):
        rng = np.random.default_rng(4)
        x = T.Tensor(rng.normal(size=(5, 3)))
        weight = T.Tensor(rng.normal(size=(1, 3)))
        check_gradients(lambda: T.sum_all(T.elementwise_mul(
            T.mean_rows(x), weight)), [x])


class TestAdam:
    def test_zero_gradient_no_decay(self):
        p = np.array([1.0, 2.0])
        state = T.AdamState([p.shape], lr=1e-3, weight_decay=0.0)
        (new,) = T.adam_step([p], [np.zeros(2)], state)
        assert np.array_equal(new, p)

    def test_first_step_moves_by_lr(self):
        state = T.AdamState([()], lr=1e-3, weight_decay=0.0)
        (new,) = T.adam_step([np.array(1.0)], [np.array(1.0)], state)
        assert np.isclose(new, 0.999, atol=1e-6)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        p = rng.normal(size=(3, 3))
        g = rng.normal(size=(3, 3))
        s1 = T.AdamState([p.shape], lr=1e-2, weight_decay=1e-4)
        s2 = T.AdamState([p.shape], lr=1e-2, weight_decay=1e-4)
        (a,) = T.adam_step([p.copy()], [g.copy()], s1)
        (b,) = T.adam_step([p.copy()], [g.copy()], s2)
        assert np.array_equal(a, b)

    def test_decoupled_weight_decay_applied_to_params(self):
        state = T.AdamState([()], lr=0.1, weight_decay=0.5)
        (new,) = T.adam_step([np.array(1.0)], [np.array(0.0)], state)
        # Only the decay term moves the parameter when the gradient is 0.
        assert np.isclose(new, 1.0 - 0.1 * 0.5)

    def test_non_finite_gradient_rejected(self):
        state = T.AdamState([()])
        with pytest.raises(NumericError, match="non-finite"):
            T.adam_step([np.array(1.0)], [np.array(np.nan)], state)

    def test_t_incremented(self):
        state = T.AdamState([()])
        T.adam_step([np.array(1.0)], [np.array(1.0)], state)
        assert state.t == 1
