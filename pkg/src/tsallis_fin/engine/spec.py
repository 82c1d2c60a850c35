"""Declarative network topologies and the builder that turns them into layers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import ConfigError, DomainError
from .layers import Dense, Dropout, FeatureAttention, Network, TemporalAttention
from .tensor import ACTIVATIONS


def _width(shape) -> int:
    return int(np.prod(shape))


@dataclass(frozen=True)
class DenseSpec:
    units: int
    activation: str = "relu"
    is_fin = False

    def build(self, in_shape, rng):
        if self.units < 1:
            raise ConfigError(f"dense units must be positive, got {self.units}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        return Dense.init(rng, _width(in_shape), self.units, self.activation), (self.units,)


@dataclass(frozen=True)
class DropoutSpec:
    rate: float
    is_fin = False

    def build(self, in_shape, rng):
        if not 0.0 <= self.rate < 1.0:
            raise ConfigError(f"dropout rate must lie in [0, 1), got {self.rate}")
        return Dropout(self.rate), in_shape


@dataclass(frozen=True)
class AttentionSpec:
    """``kind="feature"`` gates a flat vector; ``kind="temporal"`` pools a [T, F] window."""

    kind: str = "feature"
    mode: str = "concat"
    is_fin = False

    def build(self, in_shape, rng):
        if self.kind == "feature":
            width = _width(in_shape)
            return FeatureAttention.init(rng, width), (width,)
        if self.kind == "temporal":
            if len(in_shape) != 2:
                raise ConfigError(f"temporal attention needs a [T, F] input, got {in_shape}")
            t, f = in_shape
            layer = TemporalAttention.init(rng, f, self.mode)
            return layer, ((f,) if self.mode == "context" else (t * f + f,))
        raise ConfigError(f"unknown attention kind {self.kind!r}")


@dataclass
class NetworkSpec:
    """Ordered layer descriptors plus input/output dimensions and a seed.

    Any descriptor object with ``build(in_shape, rng) -> (layer, out_shape)``
    and an ``is_fin`` flag may appear in ``layers``.
    """

    input_shape: tuple
    layers: list[Any]
    output_dim: int
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if isinstance(self.input_shape, int):
            self.input_shape = (self.input_shape,)
        self.input_shape = tuple(int(s) for s in self.input_shape)
        if any(s < 1 for s in self.input_shape):
            raise ConfigError(f"input shape must be positive, got {self.input_shape}")

    @property
    def input_dim(self) -> int:
        return _width(self.input_shape)

    def fin_layers(self):
        return [layer for layer in self.layers if layer.is_fin]

    def shapes(self) -> list[tuple]:
        """Output shape after each layer, computed without building weights."""
        return self._walk(np.random.default_rng(0))[1]

    def validate(self):
        self._walk(np.random.default_rng(0))

    def _walk(self, rng):
        if len(self.fin_layers()) > 1:
            raise ConfigError("at most one FIN attachment per network")
        shape = self.input_shape
        built, shapes = [], []
        for desc in self.layers:
            try:
                layer, shape = desc.build(shape, rng)
            except DomainError as exc:
                raise ConfigError(str(exc)) from exc
            built.append(layer)
            shapes.append(tuple(shape))
        if _width(shape) != self.output_dim:
            raise ConfigError(f"network emits width {_width(shape)}, expected {self.output_dim}")
        return built, shapes


def build_network(spec: NetworkSpec) -> Network:
    """Instantiate ``spec`` with Glorot-uniform weights drawn from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    layers, _ = spec._walk(rng)
    # the dropout stream is decoupled from the weight stream
    return Network(layers, seed=np.random.SeedSequence(spec.seed).spawn(1)[0])


def mlp_spec(input_dim, hidden, output_dim, activation="relu", output_activation="identity",
             dropout=0.0, seed=0, name="") -> NetworkSpec:
    layers: list[Any] = []
    for units in hidden:
        layers.append(DenseSpec(units, activation))
        if dropout:
            layers.append(DropoutSpec(dropout))
    layers.append(DenseSpec(output_dim, output_activation))
    return NetworkSpec(input_dim, layers, output_dim, seed=seed, name=name)


def count_params(spec: NetworkSpec, include_fin=True) -> int:
    return build_network(spec).n_params(include_fin=include_fin)

