"""Minimal reverse-mode differentiation over numpy arrays.

Only the operations the training objective needs are provided. Every node
stores its value and a closure mapping the output gradient to parent
gradients; ``backward`` walks the graph in reverse topological order.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class Var:
    __slots__ = ("value", "grad", "parents", "name")

    def __init__(self, value, parents: Sequence[tuple["Var", Callable]] = (), name: str = ""):
        self.value = np.asarray(value, dtype=float)
        self.grad: np.ndarray | None = None
        self.parents = tuple(parents)
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var({self.name or 'anon'}, shape={self.value.shape})"

    # arithmetic
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def backward(self):
        if self.value.size != 1:
            raise ValueError("backward needs a scalar output")
        order: list[Var] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _ in node.parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        grads = {id(self): np.ones_like(self.value)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node.parents:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, fn in node.parents:
                pg = fn(g)
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg


def const(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b) -> Var:
    a, b = const(a), const(b)
    return Var(a.value + b.value, [(a, lambda g: _unbroadcast(g, a.shape)),
                                   (b, lambda g: _unbroadcast(g, b.shape))])


def sub(a, b) -> Var:
    a, b = const(a), const(b)
    return Var(a.value - b.value, [(a, lambda g: _unbroadcast(g, a.shape)),
                                   (b, lambda g: -_unbroadcast(g, b.shape))])


def mul(a, b) -> Var:
    a, b = const(a), const(b)
    return Var(a.value * b.value, [(a, lambda g: _unbroadcast(g * b.value, a.shape)),
                                   (b, lambda g: _unbroadcast(g * a.value, b.shape))])


def matmul(a, b) -> Var:
    a, b = const(a), const(b)
    return Var(a.value @ b.value, [(a, lambda g: g @ b.value.T),
                                   (b, lambda g: a.value.T @ g)])


def tanh(a: Var) -> Var:
    y = np.tanh(a.value)
    return Var(y, [(a, lambda g: g * (1.0 - y * y))])


def square(a: Var) -> Var:
    return Var(a.value ** 2, [(a, lambda g: 2.0 * g * a.value)])


def total(a: Var) -> Var:
    return Var(a.value.sum(), [(a, lambda g: np.broadcast_to(g, a.shape).copy())])


def mean(a: Var) -> Var:
    n = a.value.size
    return Var(a.value.mean(), [(a, lambda g: np.broadcast_to(g / n, a.shape).copy())])


def cumsum(a: Var, axis: int = 0) -> Var:
    def back(g):
        return np.flip(np.cumsum(np.flip(g, axis), axis=axis), axis)
    return Var(np.cumsum(a.value, axis=axis), [(a, back)])


def getitem(a: Var, idx) -> Var:
    def back(g):
        out = np.zeros_like(a.value)
        np.add.at(out, idx, g)
        return out
    return Var(a.value[idx], [(a, back)])


def concat(parts: Sequence, axis: int = 0) -> Var:
    parts = [const(p) for p in parts]
    sizes = [p.shape[axis] for p in parts]
    bounds = np.cumsum([0] + sizes)
    parents = []
    for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
        def back(g, lo=lo, hi=hi):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            return g[tuple(sl)]
        parents.append((p, back))
    return Var(np.concatenate([p.value for p in parts], axis=axis), parents)


def reshape(a: Var, shape) -> Var:
    return Var(a.value.reshape(shape), [(a, lambda g: g.reshape(a.shape))])


def swapaxes(a: Var, i: int, j: int) -> Var:
    return Var(np.swapaxes(a.value, i, j), [(a, lambda g: np.swapaxes(g, i, j))])


def prepend_zero(a: Var) -> Var:
    """Prepend a row of zeros along axis 0."""
    z = np.zeros((1,) + a.shape[1:])
    return concat([Var(z), a], axis=0)
