"""Layers used by the host networks and by the FIN itself.

Every layer is called as ``layer(h, training=..., inputs=..., rng=...)`` where
``h`` is the running representation and ``inputs`` the raw network input
(only input-level FIN layers look at it).
"""
from __future__ import annotations

import numpy as np

from ..errors import DomainError, ShapeError
from . import tensor as T
from .tensor import Parameter, Tensor


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


class Layer:
    """Base class. Subclasses list their own parameters and child layers."""

    is_fin = False

    def parameters(self) -> list[Parameter]:
        return []

    def __call__(self, h, training=False, inputs=None, rng=None):
        return self.forward(h, training=training, inputs=inputs, rng=rng)

    def forward(self, h, training=False, inputs=None, rng=None):
        raise NotImplementedError


def _flat(h: Tensor) -> Tensor:
    return h if h.ndim == 2 else T.reshape(h, (h.shape[0], -1))


class Dense(Layer):
    def __init__(self, weight, bias, activation="identity"):
        if activation not in T.ACTIVATIONS:
            raise DomainError(f"unknown activation {activation!r}")
        self.weight = weight if isinstance(weight, Parameter) else Parameter(weight, name="weight")
        self.bias = bias if isinstance(bias, Parameter) else Parameter(bias, name="bias")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(f"inconsistent dense shapes {self.weight.shape} / {self.bias.shape}")
        self.activation = activation

    @classmethod
    def init(cls, rng, in_dim, out_dim, activation="identity"):
        return cls(glorot_uniform(rng, out_dim, in_dim), np.zeros(out_dim), activation)

    @property
    def in_dim(self):
        return self.weight.shape[1]

    @property
    def out_dim(self):
        return self.weight.shape[0]

    def parameters(self):
        return [self.weight, self.bias]

    def pre_activation(self, h):
        return T.linear(_flat(T.as_tensor(h)), self.weight, self.bias)

    def forward(self, h, training=False, inputs=None, rng=None):
        return T.ACTIVATIONS[self.activation](self.pre_activation(h))


def dense_forward(layer: Dense, x) -> Tensor:
    """``activation(W x + b)`` for a single vector or a batch of row vectors."""
    x = T.as_tensor(x)
    if x.ndim == 1:
        return T.reshape(layer(T.reshape(x, (1, -1))), (-1,))
    return layer(x)


def dropout_forward(x, rate: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout: identity at eval time, zero-and-rescale while training."""
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"dropout rate must lie in [0, 1), got {rate}")
    x = T.as_tensor(x)
    if not training or rate == 0.0:
        return x
    keep = rng.random(x.shape) >= rate
    return T.mul(x, keep / (1.0 - rate))


class Dropout(Layer):
    def __init__(self, rate):
        if not 0.0 <= rate < 1.0:
            raise DomainError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, h, training=False, inputs=None, rng=None):
        return dropout_forward(h, self.rate, training, rng)


def feature_attention(x, weight, bias) -> Tensor:
    """Gate a flat vector by ``softmax(W x + b)``."""
    x = T.as_tensor(x)
    alpha = T.softmax(T.linear(x, weight, bias), axis=-1)
    return T.mul(alpha, x)


def temporal_attention(x, weight, bias) -> Tensor:
    """Attention-weighted sum of the rows of ``x`` [..., T, F].

    Each timestep is scored by a shared linear map ``x_t . w + b`` and the
    scores are softmax-normalized over T.
    """
    x = T.as_tensor(x)
    if x.ndim < 2 or weight.shape != (1, x.shape[-1]):
        raise ShapeError(f"temporal attention weights {weight.shape} do not fit input {x.shape}")
    scores = T.reshape(T.linear(x, weight, bias), x.shape[:-1])
    alpha = T.softmax(scores, axis=-1)
    return T.sum_(T.mul(T.reshape(alpha, alpha.shape + (1,)), x), axis=-2)


def attention_weights(x, weight, bias, temporal: bool) -> np.ndarray:
    """The softmax weights an attention block would apply (no graph)."""
    with T.no_grad():
        x = T.as_tensor(x)
        scores = T.linear(x, weight, bias)
        if temporal:
            scores = T.reshape(scores, x.shape[:-1])
        return T.softmax(scores, axis=-1).data


class FeatureAttention(Layer):
    def __init__(self, weight, bias):
        self.weight = Parameter(weight, name="att_weight")
        self.bias = Parameter(bias, name="att_bias")

    @classmethod
    def init(cls, rng, dim):
        return cls(glorot_uniform(rng, dim, dim), np.zeros(dim))

    def parameters(self):
        return [self.weight, self.bias]

    def forward(self, h, training=False, inputs=None, rng=None):
        return feature_attention(_flat(T.as_tensor(h)), self.weight, self.bias)


class TemporalAttention(Layer):
    """Temporal attention over a [T, F] window.

    ``mode="context"`` returns the F-wide context vector; ``mode="concat"``
    appends it to the flattened window (T*F + F wide).
    """

    def __init__(self, weight, bias, mode="concat"):
        if mode not in ("context", "concat"):
            raise DomainError(f"unknown temporal attention mode {mode!r}")
        self.weight = Parameter(weight, name="att_weight")
        self.bias = Parameter(bias, name="att_bias")
        self.mode = mode

    @classmethod
    def init(cls, rng, n_features, mode="concat"):
        return cls(glorot_uniform(rng, 1, n_features), np.zeros(1), mode)

    def parameters(self):
        return [self.weight, self.bias]

    def forward(self, h, training=False, inputs=None, rng=None):
        h = T.as_tensor(h)
        if h.ndim != 3:
            raise ShapeError(f"temporal attention expects [batch, T, F], got {h.shape}")
        ctx = temporal_attention(h, self.weight, self.bias)
        if self.mode == "context":
            return ctx
        return T.concat([_flat(h), ctx], axis=-1)


class MinMax(Layer):
    def forward(self, h, training=False, inputs=None, rng=None):
        return T.minmax_normalize(h)


class Sort(Layer):
    def forward(self, h, training=False, inputs=None, rng=None):
        return T.sort(h, axis=-1)


class Affine(Layer):
    """Fixed ``h * scale + shift``; holds no trainable parameters."""

    def __init__(self, scale: float, shift: float):
        self.scale = float(scale)
        self.shift = float(shift)

    def forward(self, h, training=False, inputs=None, rng=None):
        return T.add(T.mul(h, self.scale), self.shift)


class Network(Layer):
    """A sequence of layers with its own dropout RNG."""

    def __init__(self, layers, seed=0):
        self.layers = list(layers)
        self.rng = np.random.default_rng(seed)

    def parameters(self):
        out, seen = [], set()
        for layer in self.layers:
            for p in layer.parameters():
                if id(p) not in seen:
                    seen.add(id(p))
                    out.append(p)
        return out

    def n_params(self, include_fin=True) -> int:
        total = 0
        for layer in self.layers:
            if layer.is_fin and not include_fin:
                continue
            total += sum(p.size for p in layer.parameters())
        return total

    def forward(self, x, training=False, inputs=None, rng=None, logits=False):
        x = T.as_tensor(x)
        h = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            if logits and i == last and isinstance(layer, Dense):
                h = layer.pre_activation(h)
            else:
                h = layer(h, training=training, inputs=x, rng=rng or self.rng)
        return h

    def __call__(self, x, training=False, inputs=None, rng=None, logits=False):
        return self.forward(x, training=training, inputs=inputs, rng=rng, logits=logits)

    def predict(self, x) -> np.ndarray:
        with T.no_grad():
            return self.forward(x).data

    def state(self) -> list[np.ndarray]:
        return [p.data.copy() for p in self.parameters()]

    def load_state(self, arrays):
        params = self.parameters()
        if len(arrays) != len(params):
            raise ShapeError("state does not match network parameters")
        for p, a in zip(params, arrays):
            if p.shape != np.shape(a):
                raise ShapeError(f"state shape {np.shape(a)} != parameter shape {p.shape}")
            p.data = np.array(a, dtype=np.float64)

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None
