"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just enough operator coverage for the candidate scorer: embedding
lookup, affine maps, batched attention matmuls, masked softmax, masked
max-pooling, and a weighted binary cross-entropy head.  Everything runs
in float64; gradients are checked against finite differences in the test
suite.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("value", "grad", "parents", "_backward")

    def __init__(self, value, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def _ensure_grad(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)

    def backward(self, seed=None):
        """Accumulate gradients of this (scalar) node into the graph."""
        if seed is None:
            if self.value.shape != ():
                raise ValueError("backward() without seed needs a scalar output")
            seed = np.array(1.0)
        order = []
        seen = set()

        def visit(node):
            if id(node) in seen:
                return
            seen.add(id(node))
            for parent in node.parents:
                visit(parent)
            order.append(node)

        visit(self)
        for node in order:
            node._ensure_grad()
        self.grad = self.grad + seed
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def add(a: Tensor, b: Tensor) -> Tensor:
    def backward(g):
        a.grad += _unbroadcast(g, a.value.shape)
        b.grad += _unbroadcast(g, b.value.shape)

    return Tensor(a.value + b.value, (a, b), backward)


def mul_const(a: Tensor, c) -> Tensor:
    c = np.asarray(c, dtype=np.float64)

    def backward(g):
        a.grad += _unbroadcast(g * c, a.value.shape)

    return Tensor(a.value * c, (a,), backward)


def linear(x: Tensor, w: Tensor) -> Tensor:
    """x @ w for x of shape (..., k) and weight matrix w of shape (k, n)."""
    k, n = w.value.shape

    def backward(g):
        x.grad += g @ w.value.T
        w.grad += x.value.reshape(-1, k).T @ g.reshape(-1, n)

    return Tensor(x.value @ w.value, (x, w), backward)


def bmm(a: Tensor, b: Tensor) -> Tensor:
    """Batched matmul over identical leading dimensions."""

    def backward(g):
        a.grad += g @ b.value.swapaxes(-1, -2)
        b.grad += a.value.swapaxes(-1, -2) @ g

    return Tensor(a.value @ b.value, (a, b), backward)


def transpose_last(a: Tensor) -> Tensor:
    def backward(g):
        a.grad += g.swapaxes(-1, -2)

    return Tensor(a.value.swapaxes(-1, -2), (a,), backward)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    def backward(g):
        np.add.at(table.grad, ids, g)

    return Tensor(table.value[ids], (table,), backward)


def concat_last(a: Tensor, b: Tensor) -> Tensor:
    na = a.value.shape[-1]

    def backward(g):
        a.grad += g[..., :na]
        b.grad += g[..., na:]

    return Tensor(np.concatenate([a.value, b.value], axis=-1), (a, b), backward)


def masked_softmax(scores: Tensor, key_mask: np.ndarray) -> Tensor:
    """Softmax over the last axis with invalid keys excluded.

    key_mask has shape (..., N) matching the last axis and must have at
    least one valid key per row of interest.
    """
    neg = np.where(key_mask, 0.0, -np.inf)[..., None, :]
    z = scores.value + neg
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        inner = (g * y).sum(axis=-1, keepdims=True)
        scores.grad += y * (g - inner)

    return Tensor(y, (scores,), backward)


def masked_max(x: Tensor, mask: np.ndarray) -> Tensor:
    """Coordinate-wise max over axis 1 restricted to mask=True rows.

    x: (B, N, d); mask: (B, N).  Ties route the gradient to the first
    argmax, which keeps training deterministic.
    """
    masked = np.where(mask[:, :, None], x.value, -np.inf)
    idx = masked.argmax(axis=1)  # (B, d)
    b_idx = np.arange(x.value.shape[0])[:, None]
    d_idx = np.arange(x.value.shape[2])[None, :]
    out = masked[b_idx, idx, d_idx]

    def backward(g):
        np.add.at(x.grad, (b_idx, idx, d_idx), g)

    return Tensor(out, (x,), backward)


def rowwise_affine(x: Tensor, w: Tensor, b: Tensor, idx: np.ndarray) -> Tensor:
    """Per-row affine head: out[i] = x[i] . w[idx[i]] + b[idx[i]]."""

    def backward(g):
        x.grad += g[:, None] * w.value[idx]
        np.add.at(w.grad, idx, g[:, None] * x.value)
        np.add.at(b.grad, idx, g)

    return Tensor((x.value * w.value[idx]).sum(axis=1) + b.value[idx], (x, w, b), backward)


def sigmoid(x: Tensor) -> Tensor:
    y = sigmoid_values(x.value)

    def backward(g):
        x.grad += g * y * (1.0 - y)

    return Tensor(y, (x,), backward)


def sigmoid_values(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def weighted_bce_with_logits(
    logits: Tensor, labels: np.ndarray, weights: np.ndarray
) -> Tensor:
    """Weighted-mean binary cross-entropy on logits, numerically stable."""
    z = logits.value
    per = np.maximum(z, 0.0) - z * labels + np.log1p(np.exp(-np.abs(z)))
    total = weights.sum()
    value = (weights * per).sum() / total

    def backward(g):
        logits.grad += g * weights * (sigmoid_values(z) - labels) / total

    return Tensor(value, (logits,), backward)
