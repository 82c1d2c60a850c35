"""Reverse-mode automatic differentiation over numpy arrays.

Every differentiable operation returns a :class:`Tensor` that remembers its
parents and a closure mapping the output gradient to parent gradients.
:meth:`Tensor.backward` walks that graph once and then releases it.
"""
from __future__ import annotations

import contextlib

import numpy as np

from ..errors import GraphStateError, ShapeError

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _GRAD_ENABLED
    prev, _GRAD_ENABLED = _GRAD_ENABLED, False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __float__(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into ``leaf.grad`` for every leaf that requires grad."""
        if self._backward is None:
            raise GraphStateError("no recorded forward computation to differentiate")
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() on a non-scalar needs an explicit gradient")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.data.shape:
            raise ShapeError(f"gradient shape {grad.shape} != output shape {self.data.shape}")

        order = _topological(self)
        grads = {id(self): grad}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg
        for node in order:
            if node._backward is not None:
                node._parents = ()
                node._backward = None

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


class Parameter(Tensor):
    """A trainable leaf. ``trainable=False`` freezes updates but not gradient flow."""

    __slots__ = ("trainable", "constraint", "group")

    def __init__(self, data, name=None, trainable=True, constraint=None, group=None):
        super().__init__(np.array(data, dtype=np.float64), requires_grad=True, name=name)
        self.trainable = trainable
        self.constraint = constraint
        self.group = group


def _topological(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    return order


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


# elementwise arithmetic

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data
    return _make(out, (a, b),
                 lambda g: (_unbroadcast(g / b.data, a.shape),
                            _unbroadcast(-g * out / b.data, b.shape)))


def exp(x) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.data)
    return _make(out, (x,), lambda g: (g * out,))


def log(x) -> Tensor:
    x = as_tensor(x)
    return _make(np.log(x.data), (x,), lambda g: (g / x.data,))


def square(x) -> Tensor:
    x = as_tensor(x)
    return _make(x.data**2, (x,), lambda g: (2.0 * g * x.data,))


def absolute(x) -> Tensor:
    """|x| with subgradient 0 at 0."""
    x = as_tensor(x)
    return _make(np.abs(x.data), (x,), lambda g: (g * np.sign(x.data),))


# activations

def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return _make(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    out = _stable_sigmoid(x.data)
    return _make(out, (x,), lambda g: (g * out * (1.0 - out),))


def _stable_sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softmax(x, axis=-1) -> Tensor:
    x = as_tensor(x)
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _make(out, (x,), back)


def identity(x) -> Tensor:
    return as_tensor(x)


ACTIVATIONS = {"identity": identity, "relu": relu, "sigmoid": sigmoid, "softmax": softmax}


# reductions and shape ops

def sum_(x, axis=None, keepdims=False) -> Tensor:
    x = as_tensor(x)
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def back(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make(out, (x,), back)


def mean(x, axis=None, keepdims=False) -> Tensor:
    x = as_tensor(x)
    n = x.data.size if axis is None else x.shape[axis]
    return mul(sum_(x, axis=axis, keepdims=keepdims), 1.0 / n)


def _extreme(x, axis, pick):
    x = as_tensor(x)
    idx = pick(x.data, axis=axis)
    out = np.take_along_axis(x.data, np.expand_dims(idx, axis), axis=axis)

    def back(g):
        gin = np.zeros_like(x.data)
        np.put_along_axis(gin, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis)
        return (gin,)

    return _make(np.squeeze(out, axis), (x,), back)


def max_(x, axis=-1) -> Tensor:
    """Maximum along ``axis``; the gradient goes to the first maximizing entry."""
    return _extreme(x, axis, np.argmax)


def min_(x, axis=-1) -> Tensor:
    return _extreme(x, axis, np.argmin)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    return _make(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def swapaxes(x, a1, a2) -> Tensor:
    x = as_tensor(x)
    return _make(np.swapaxes(x.data, a1, a2), (x,), lambda g: (np.swapaxes(g, a1, a2),))


def concat(tensors, axis=-1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)

    def back(g):
        return tuple(np.split(g, np.cumsum(sizes)[:-1], axis=axis))

    return _make(out, tuple(tensors), back)


def sort(x, axis=-1) -> Tensor:
    """Ascending sort; gradients are routed back through the permutation."""
    x = as_tensor(x)
    idx = np.argsort(x.data, axis=axis, kind="stable")
    out = np.take_along_axis(x.data, idx, axis=axis)

    def back(g):
        gin = np.empty_like(g)
        np.put_along_axis(gin, idx, g, axis=axis)
        return (gin,)

    return _make(out, (x,), back)


def minmax_normalize(x) -> Tensor:
    """Rescale each row (last axis) to [0, 1]; constant rows become 0.5."""
    x = as_tensor(x)
    lo_i = np.argmin(x.data, axis=-1)[..., None]
    hi_i = np.argmax(x.data, axis=-1)[..., None]
    lo = np.take_along_axis(x.data, lo_i, axis=-1)
    span = np.take_along_axis(x.data, hi_i, axis=-1) - lo
    const = span == 0
    safe = np.where(const, 1.0, span)
    out = np.where(const, 0.5, (x.data - lo) / safe)

    def back(g):
        g = np.where(const, 0.0, g)
        gin = g / safe
        g_lo = -(g * (1.0 - out)).sum(axis=-1, keepdims=True) / safe
        g_hi = -(g * out).sum(axis=-1, keepdims=True) / safe
        np.put_along_axis(gin, lo_i, np.take_along_axis(gin, lo_i, axis=-1) + g_lo, axis=-1)
        np.put_along_axis(gin, hi_i, np.take_along_axis(gin, hi_i, axis=-1) + g_hi, axis=-1)
        return (gin,)

    return _make(out, (x,), back)


# linear algebra

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[-1] != b.shape[0] or b.ndim != 2:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")

    def back(g):
        ga = g @ b.data.T
        gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return ga, gb

    return _make(a.data @ b.data, (a, b), back)


def linear(x, weight, bias) -> Tensor:
    """``x @ weight.T + bias`` over the last axis of ``x``; ``weight`` is [out, in]."""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if x.shape[-1] != weight.shape[1]:
        raise ShapeError(f"input width {x.shape[-1]} does not match layer input {weight.shape[1]}")
    out = x.data @ weight.data.T + bias.data

    def back(g):
        g2 = g.reshape(-1, g.shape[-1])
        gx = g @ weight.data
        gw = g2.T @ x.data.reshape(-1, x.shape[-1])
        gb = g2.sum(axis=0)
        return gx, gw, gb

    return _make(out, (x, weight, bias), back)


# closed-form entropy as a graph node

def tsallis(u, q, tau) -> Tensor:
    """Row-wise temperature-scaled Tsallis entropy of ``u`` [..., n].

    ``q`` and ``tau`` are scalar tensors; gradients use the analytic forms in
    :mod:`tsallis_fin.entropy`.
    """
    from .. import entropy

    u, q, tau = as_tensor(u), as_tensor(q), as_tensor(tau)
    params = entropy.TsallisParams(float(q.data), float(tau.data))
    p = entropy.softmax_temperature(u.data, params.tau)
    out = entropy.tsallis_from_probs(p, params.q)

    def back(g):
        gu, gq, gt = entropy.tsallis_gradients(u.data, params)
        return g[..., None] * gu, np.sum(g * gq), np.sum(g * gt)

    return _make(out, (u, q, tau), back)
