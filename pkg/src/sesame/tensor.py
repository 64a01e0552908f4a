"""Minimal reverse-mode autodiff over numpy arrays, plus Adam.

Values are float64 internally; file formats downcast to float32 on
write. The tape is the implicit graph of Tensor parents; calling
``backward`` on a scalar loss fills ``grad`` on every reachable tensor.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ShapeError, UsageError


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum gradient over axes that were broadcast in the forward pass."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _accumulate(t: Tensor, grad: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += grad


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.data.shape} x {b.data.shape}")
    out = Tensor(a.data @ b.data, (a, b))

    def backward(grad):
        _accumulate(a, grad @ b.data.T)
        _accumulate(b, a.data.T @ grad)

    out._backward = backward
    return out


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data + b.data
    except ValueError as exc:
        raise ShapeError(f"add: incompatible shapes {a.data.shape} + {b.data.shape}") from exc
    out = Tensor(data, (a, b))

    def backward(grad):
        _accumulate(a, _unbroadcast(grad, a.data.shape))
        _accumulate(b, _unbroadcast(grad, b.data.shape))

    out._backward = backward
    return out


def sub(a, b) -> Tensor:
    return add(a, scale(b, -1.0))


def scale(a, c: float) -> Tensor:
    """Multiply by a python constant (not differentiated w.r.t. c)."""
    a = _as_tensor(a)
    out = Tensor(a.data * c, (a,))
    out._backward = lambda grad: _accumulate(a, grad * c)
    return out


def elementwise_mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data * b.data
    except ValueError as exc:
        raise ShapeError(f"elementwise_mul: incompatible shapes {a.data.shape} * {b.data.shape}") from exc
    out = Tensor(data, (a, b))

    def backward(grad):
        _accumulate(a, _unbroadcast(grad * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(grad * a.data, b.data.shape))

    out._backward = backward
    return out


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.tanh(a.data), (a,))
    out._backward = lambda grad: _accumulate(a, grad * (1.0 - out.data ** 2))
    return out


def relu(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0), (a,))
    out._backward = lambda grad: _accumulate(a, grad * (a.data > 0))
    return out


def leaky_relu(a, negative_slope: float = 0.2) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.where(a.data > 0, a.data, negative_slope * a.data), (a,))
    out._backward = lambda grad: _accumulate(
        a, grad * np.where(a.data > 0, 1.0, negative_slope))
    return out


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    # Stable in both tails.
    pos = x >= 0
    val = np.empty_like(x)
    val[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    val[~pos] = ex / (1.0 + ex)
    # Keep outputs strictly inside (0, 1) even for saturated inputs.
    np.clip(val, 1e-300, 1.0 - 1e-15, out=val)
    out = Tensor(val, (a,))
    out._backward = lambda grad: _accumulate(a, grad * out.data * (1.0 - out.data))
    return out


def row_softmax(a) -> Tensor:
    """Softmax along the last axis; -inf entries get probability 0."""
    a = _as_tensor(a)
    shifted = a.data - np.max(a.data, axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(out_data, (a,))

    def backward(grad):
        dot = np.sum(grad * out.data, axis=-1, keepdims=True)
        _accumulate(a, out.data * (grad - dot))

    out._backward = backward
    return out


def row_logsumexp(a) -> Tensor:
    """log(sum(exp(x))) along the last axis, keepdims."""
    a = _as_tensor(a)
    m = np.max(a.data, axis=-1, keepdims=True)
    lse = m + np.log(np.sum(np.exp(a.data - m), axis=-1, keepdims=True))
    out = Tensor(lse, (a,))

    def backward(grad):
        _accumulate(a, grad * np.exp(a.data - out.data))

    out._backward = backward
    return out


def log(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.log(a.data), (a,))
    out._backward = lambda grad: _accumulate(a, grad / a.data)
    return out


def transpose(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.T, (a,))
    out._backward = lambda grad: _accumulate(a, grad.T)
    return out


def concat_cols(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.shape[0] != b.data.shape[0]:
        raise ShapeError(f"concat_cols: row mismatch {a.data.shape} vs {b.data.shape}")
    out = Tensor(np.concatenate([a.data, b.data], axis=1), (a, b))
    na = a.data.shape[1]

    def backward(grad):
        _accumulate(a, grad[:, :na])
        _accumulate(b, grad[:, na:])

    out._backward = backward
    return out


def mean_rows(a) -> Tensor:
    """Mean over axis 0, returning a (1, cols) row vector."""
    a = _as_tensor(a)
    out = Tensor(a.data.mean(axis=0, keepdims=True), (a,))
    n = a.data.shape[0]
    out._backward = lambda grad: _accumulate(a, np.broadcast_to(grad / n, a.data.shape).copy())
    return out


def sum_all(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.sum(), (a,))
    out._backward = lambda grad: _accumulate(a, np.full_like(a.data, float(grad)))
    return out


def mean_all(a) -> Tensor:
    a = _as_tensor(a)
    return scale(sum_all(a), 1.0 / a.data.size)


def l2_normalize_rows(a, eps: float = 1e-12) -> Tensor:
    a = _as_tensor(a)
    norms = np.linalg.norm(a.data, axis=1, keepdims=True)
    norms = np.maximum(norms, eps)
    out = Tensor(a.data / norms, (a,))

    def backward(grad):
        dot = np.sum(grad * out.data, axis=1, keepdims=True)
        _accumulate(a, (grad - out.data * dot) / norms)

    out._backward = backward
    return out


def bce_with_logits(logits, targets, mask=None) -> Tensor:
    """Mean binary cross entropy between sigmoid(logits) and targets.

    ``mask`` (same leading shape, 0/1 per row) restricts which rows
    contribute; the mean is over contributing elements.
    """
    logits = _as_tensor(logits)
    t = np.asarray(targets, dtype=np.float64)
    if t.shape != logits.data.shape:
        raise ShapeError(f"bce: target shape {t.shape} vs logits {logits.data.shape}")
    x = logits.data
    # log(1 + exp(-|x|)) + max(x, 0) - x*t, elementwise, stable
    per = np.logaddexp(0.0, -np.abs(x)) + np.maximum(x, 0.0) - x * t
    if mask is not None:
        m = np.asarray(mask, dtype=np.float64).reshape(-1, 1)
        denom = m.sum() * x.shape[1]
        if denom == 0:
            raise UsageError("bce: empty mask")
        per = per * m
    else:
        m = None
        denom = x.size
    out = Tensor(per.sum() / denom, (logits,))

    def backward(grad):
        g = (_sigmoid_np(x) - t) / denom
        if m is not None:
            g = g * m
        _accumulate(logits, grad * g)

    out._backward = backward
    return out


def _sigmoid_np(x: np.ndarray) -> np.ndarray:
    pos = x >= 0
    val = np.empty_like(x)
    val[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    val[~pos] = ex / (1.0 + ex)
    return val


def backward(loss: Tensor) -> None:
    """Reverse pass from a scalar loss; fills .grad on reachable tensors."""
    if loss.data.ndim != 0 and loss.data.size != 1:
        raise UsageError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)


def glorot_init(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class AdamState:
    """Adam moments for a list of parameter arrays, decoupled weight decay."""

    def __init__(self, shapes, lr=1e-3, beta1=0.9, beta2=0.999,
                 epsilon=1e-8, weight_decay=0.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState) -> list[np.ndarray]:
    """One Adam update; mutates ``state``, returns new parameter arrays.

    Weight decay is decoupled: applied directly to the parameters before
    the moment update, not folded into the gradient.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise UsageError("adam_step: params/grads/state length mismatch")
    new_params = []
    state.t += 1
    t = state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ShapeError(f"adam_step: param {i} shape {p.shape} vs grad {g.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"adam_step: non-finite gradient for parameter {i}")
        p = p * (1.0 - state.lr * state.weight_decay)
        state.m[i] = state.beta1 * state.m[i] + (1 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1 - state.beta2) * g * g
        m_hat = state.m[i] / (1 - state.beta1 ** t)
        v_hat = state.v[i] / (1 - state.beta2 ** t)
        new_params.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon))
    return new_params
