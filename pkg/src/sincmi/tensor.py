"""Dense float64 tensors with reverse-mode automatic differentiation.

This is deliberately minimal: it supports exactly the elementwise and
shape operations the model needs (the structured layers live in ops.py).
Everything is computed in 64-bit so gradient checks and spectral oracles
have headroom.

Gradients accumulate into ``.grad`` of every tensor with
``requires_grad=True`` that is an ancestor of the tensor ``backward()``
is called on. Backward rules run in reverse creation order, which is a
valid reverse-topological order by construction, so a tape replay and a
fresh backward pass are bitwise identical.
"""

from __future__ import annotations

import itertools

import numpy as np


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


_seq = itertools.count()


class Tape:
    """Execution-ordered record of one forward pass.

    While active (used as a context manager), every differentiable output
    is appended. ``backward(root)`` clears gradients and replays the
    recorded backward rules newest-first.
    """

    _active = None

    def __init__(self):
        self.records = []

    def __enter__(self):
        if Tape._active is not None:
            raise RuntimeError("a tape is already active")
        Tape._active = self
        return self

    def __exit__(self, *exc):
        Tape._active = None
        return False

    def backward(self, root):
        for out in self.records:
            out.grad = None
            for p in out._parents:
                p.grad = None
        root.grad = np.ones_like(root.data)
        for out in reversed(self.records):
            if out._backward is not None and out.grad is not None:
                out._backward(out.grad)


class Tensor:
    """A contiguous row-major float64 array plus optional gradient."""

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim and not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None
        self._seq = next(_seq)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Accumulate d(self)/d(ancestor) into every ancestor's .grad."""
        nodes, seen, stack = [], set(), [self]
        while stack:
            t = stack.pop()
            if id(t) in seen:
                continue
            seen.add(id(t))
            nodes.append(t)
            stack.extend(t._parents)
        nodes.sort(key=lambda t: t._seq, reverse=True)
        self.grad = np.ones_like(self.data)
        for t in nodes:
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def reshape(self, shape):
        return reshape(self, shape)


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def accumulate(t, g):
    """Add an upstream gradient contribution into t.grad."""
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad = t.grad + g


def from_op(data, parents, backward):
    """Create an op output wired for backprop (and tape recording)."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
        if Tape._active is not None:
            Tape._active.records.append(out)
    return out


def _unbroadcast(g, shape):
    """Sum a broadcasted gradient back down to the original shape."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b):
    a, b = _lift(a), _lift(b)
    out_data = a.data + b.data

    def backward(g):
        accumulate(a, _unbroadcast(g, a.shape))
        accumulate(b, _unbroadcast(g, b.shape))

    return from_op(out_data, (a, b), backward)


def sub(a, b):
    a, b = _lift(a), _lift(b)
    out_data = a.data - b.data

    def backward(g):
        accumulate(a, _unbroadcast(g, a.shape))
        accumulate(b, _unbroadcast(-g, b.shape))

    return from_op(out_data, (a, b), backward)


def mul(a, b):
    a, b = _lift(a), _lift(b)
    out_data = a.data * b.data

    def backward(g):
        accumulate(a, _unbroadcast(g * b.data, a.shape))
        accumulate(b, _unbroadcast(g * a.data, b.shape))

    return from_op(out_data, (a, b), backward)


def absolute(a):
    """|x| with the subgradient convention sign(0) = 0."""
    a = _lift(a)
    s = np.sign(a.data)

    def backward(g):
        accumulate(a, g * s)

    return from_op(np.abs(a.data), (a,), backward)


def clamp(a, lo, hi):
    """Clip to [lo, hi]; gradient is zeroed outside the closed interval."""
    a = _lift(a)
    gate = (a.data >= lo) & (a.data <= hi)

    def backward(g):
        accumulate(a, g * gate)

    return from_op(np.clip(a.data, lo, hi), (a,), backward)


def _sinc_val(x):
    # sin(x)/x with sinc(0) = 1; np.sinc is the normalized variant.
    return np.sinc(x / np.pi)


def _sinc_deriv(x):
    # d/dx sin(x)/x = (x cos x - sin x)/x^2, odd, -> -x/3 near 0.
    small = np.abs(x) < 1e-6
    xs = np.where(small, 1.0, x)
    return np.where(small, -x / 3.0, (xs * np.cos(xs) - np.sin(xs)) / (xs * xs))


def sinc(a):
    """Elementwise sin(x)/x with sinc(0) = 1."""
    a = _lift(a)

    def backward(g):
        accumulate(a, g * _sinc_deriv(a.data))

    return from_op(_sinc_val(a.data), (a,), backward)


def reshape(a, shape):
    a = _lift(a)
    old = a.shape

    def backward(g):
        accumulate(a, g.reshape(old))

    return from_op(a.data.reshape(shape), (a,), backward)


def tsum(a):
    """Sum of all elements, as a scalar tensor."""
    a = _lift(a)

    def backward(g):
        accumulate(a, np.broadcast_to(g, a.shape))

    return from_op(a.data.sum(), (a,), backward)
