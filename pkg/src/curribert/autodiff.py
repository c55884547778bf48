"""Reverse-mode automatic differentiation over numpy buffers.

A Tensor wraps a row-major numpy array (f32 or f64) plus the tape plumbing
needed for backpropagation. Each op builds the output value eagerly and
records a closure that routes the output gradient to its parents. Gradients
accumulate additively into ``.grad``, so several backward passes between
``zero_grads`` calls implement gradient accumulation.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

IGNORE_INDEX = -100

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class Tensor:
    """Numpy array with shape/values/precision plus gradient bookkeeping."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        parents: tuple["Tensor", ...] = (),
        backward: Callable[[np.ndarray], None] | None = None,
    ):
        self.data = np.asarray(data)
        if self.data.dtype not in (np.float32, np.float64):
            self.data = self.data.astype(np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def precision(self) -> str:
        return "f32" if self.data.dtype == np.float32 else "f64"

    @property
    def values(self) -> np.ndarray:
        """Flat row-major view of the buffer."""
        return self.data.reshape(-1)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, {self.precision}, requires_grad={self.requires_grad})"

    # Operator sugar; everything routes through the module-level ops.
    def __add__(self, other):
        return add(self, _as_tensor(other, self.dtype))

    def __radd__(self, other):
        return add(_as_tensor(other, self.dtype), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other, self.dtype))

    def __mul__(self, other):
        return mul(self, _as_tensor(other, self.dtype))

    def __rmul__(self, other):
        return mul(_as_tensor(other, self.dtype), self)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def parameter(data, dtype=np.float32) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=True)


def constant(data, dtype=np.float32) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype))


def _as_tensor(x, dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def accumulate_grad(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def zero_grads(tensors: Iterable[Tensor]) -> None:
    for t in tensors:
        t.grad = np.zeros_like(t.data)


def backward(loss: Tensor) -> None:
    """Backpropagate from a scalar loss, accumulating into ``.grad`` fields."""
    if loss.data.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.shape}")
    # Iterative topological order (children before parents after reversal).
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited and p.requires_grad:
                stack.append((p, False))
    accumulate_grad(loss, np.ones_like(loss.data))
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def back(g):
        accumulate_grad(a, _unbroadcast(g, a.shape))
        accumulate_grad(b, _unbroadcast(g, b.shape))

    return Tensor(out_data, parents=(a, b), backward=back)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data - b.data

    def back(g):
        accumulate_grad(a, _unbroadcast(g, a.shape))
        accumulate_grad(b, _unbroadcast(-g, b.shape))

    return Tensor(out_data, parents=(a, b), backward=back)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def back(g):
        accumulate_grad(a, _unbroadcast(g * b.data, a.shape))
        accumulate_grad(b, _unbroadcast(g * a.data, b.shape))

    return Tensor(out_data, parents=(a, b), backward=back)


def scale(a: Tensor, c: float) -> Tensor:
    out_data = a.data * a.dtype.type(c)

    def back(g):
        accumulate_grad(a, g * a.dtype.type(c))

    return Tensor(out_data, parents=(a,), backward=back)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ValueError("matmul requires operands with ndim >= 2")
    out_data = np.matmul(a.data, b.data)

    def back(g):
        accumulate_grad(a, _unbroadcast(np.matmul(g, b.data.swapaxes(-1, -2)), a.shape))
        accumulate_grad(b, _unbroadcast(np.matmul(a.data.swapaxes(-1, -2), g), b.shape))

    return Tensor(out_data, parents=(a, b), backward=back)


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    out_data = a.data.transpose(axes)
    inv = tuple(np.argsort(axes))

    def back(g):
        accumulate_grad(a, g.transpose(inv))

    return Tensor(out_data, parents=(a,), backward=back)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    out_data = a.data.reshape(shape)

    def back(g):
        accumulate_grad(a, g.reshape(a.shape))

    return Tensor(out_data, parents=(a,), backward=back)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather; the gradient scatter-adds back into the table."""
    ids = np.asarray(ids)
    out_data = table.data[ids]

    def back(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        accumulate_grad(table, gt)

    return Tensor(out_data, parents=(table,), backward=back)


def first_position(a: Tensor) -> Tensor:
    """Select position 0 along axis 1: [B, T, H] -> [B, H]."""
    out_data = a.data[:, 0, :]

    def back(g):
        ga = np.zeros_like(a.data)
        ga[:, 0, :] = g
        accumulate_grad(a, ga)

    return Tensor(out_data, parents=(a,), backward=back)


def tensor_sum(a: Tensor) -> Tensor:
    out_data = a.data.sum()

    def back(g):
        accumulate_grad(a, np.broadcast_to(g, a.shape).copy())

    return Tensor(out_data, parents=(a,), backward=back)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Max-subtracted softmax along ``axis``."""
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        inner = (g * y).sum(axis=axis, keepdims=True)
        accumulate_grad(x, y * (g - inner))

    return Tensor(y, parents=(x,), backward=back)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-12) -> Tensor:
    """Normalize the last axis to zero mean and unit population variance, then affine."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + x.dtype.type(eps))
    xhat = xc * inv

    def back(g):
        reduce_axes = tuple(range(g.ndim - 1))
        accumulate_grad(gamma, (g * xhat).sum(axis=reduce_axes))
        accumulate_grad(beta, g.sum(axis=reduce_axes))
        dxhat = g * gamma.data
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        accumulate_grad(x, inv * (dxhat - m1 - xhat * m2))

    return Tensor(xhat * gamma.data + beta.data, parents=(x, gamma, beta), backward=back)


def gelu(x: Tensor) -> Tensor:
    """x * Phi(x) with the exact Gaussian CDF."""
    phi_cdf = special.ndtr(x.data)
    out_data = x.data * phi_cdf

    def back(g):
        pdf = _INV_SQRT_2PI * np.exp(x.dtype.type(-0.5) * x.data * x.data)
        accumulate_grad(x, g * (phi_cdf + x.data * pdf))

    return Tensor(out_data, parents=(x,), backward=back)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def back(g):
        accumulate_grad(x, g * (1.0 - y * y))

    return Tensor(y, parents=(x,), backward=back)


def dropout(x: Tensor, p: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; identity when p == 0."""
    if p <= 0.0:
        return x
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability out of range: {p}")
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / x.dtype.type(1.0 - p)

    def back(g):
        accumulate_grad(x, g * keep)

    return Tensor(x.data * keep, parents=(x,), backward=back)


def masked_cross_entropy_sum(logits: Tensor, labels: np.ndarray) -> tuple[Tensor, int]:
    """Summed negative log-likelihood over positions whose label is not IGNORE_INDEX.

    labels has the shape of logits minus the final (class) axis. Returns the
    scalar sum and the supervised-position count.
    """
    labels = np.asarray(labels)
    if labels.shape != logits.shape[:-1]:
        raise ValueError(
            f"labels shape {labels.shape} does not match logits {logits.shape[:-1]}"
        )
    mask = labels != IGNORE_INDEX
    count = int(mask.sum())
    if count == 0:
        raise ValueError("no supervised positions")

    flat_logits = logits.data.reshape(-1, logits.shape[-1])
    flat_labels = labels.reshape(-1)
    flat_mask = mask.reshape(-1)
    rows = np.nonzero(flat_mask)[0]
    targets = flat_labels[rows]

    z = flat_logits[rows]
    z = z - z.max(axis=-1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=-1))
    picked = z[np.arange(rows.size), targets]
    total = (logsumexp - picked).sum()

    def back(g):
        # d/dlogits of sum_i (-log softmax(z_i)[y_i]) = softmax - onehot, per row.
        e = np.exp(z)
        p = e / e.sum(axis=-1, keepdims=True)
        p[np.arange(rows.size), targets] -= 1.0
        gl = np.zeros_like(flat_logits)
        gl[rows] = p * g
        accumulate_grad(logits, gl.reshape(logits.shape))

    return Tensor(np.asarray(total, dtype=logits.dtype), parents=(logits,), backward=back), count


def masked_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-likelihood over non-ignored positions."""
    total, count = masked_cross_entropy_sum(logits, labels)
    return scale(total, 1.0 / count)
