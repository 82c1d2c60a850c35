"""Embedding a FIN as a differentiable layer inside a host network.

Two attachment points are supported:

* ``latent_concat``: the FIN reads a d-wide hidden representation and its
  scalar output is appended to it (d -> d + 1).
* ``input_level``: the raw [T, F] input window is split into F per-feature
  series of length T, the FIN is applied to each, and the F scalars are
  appended to the representation entering the first dense layer.

The FIN layer itself runs in one of two modes. ``imitation`` evaluates the
trained network; q and tau are baked into its weights and cannot be tuned.
``exact`` evaluates the closed form with q and tau as parameters.

With ``output_scaling="standardized"`` the FIN scalar is shifted and scaled
by fixed reference statistics so it enters the host with unit spread. The
map is constant, so it changes conditioning only, not what the host can
represent.
"""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, replace

import numpy as np

from .engine import tensor as T
from .engine.layers import Dense, Layer
from .engine.optim import History, TrainConfig, fit
from .engine.spec import DenseSpec, NetworkSpec
from .engine.tensor import Parameter
from .entropy import TsallisParams, normalize_input, tsallis_entropy
from .errors import ConfigError
from .fin import FinModel, fin_tensor_forward

log = logging.getLogger(__name__)

TAU_MIN = 1e-3
Q_EXCLUSION = 1e-3
REFERENCE_SAMPLES = 10_000


@dataclass(frozen=True)
class FinAttachment:
    mode: str = "latent_concat"
    fin_mode: str = "imitation"
    trainable_weights: bool = False
    trainable_q: bool = False
    trainable_tau: bool = False
    host_attach_index: int | None = None
    output_scaling: str = "raw"

    def __post_init__(self):
        if self.mode not in ("latent_concat", "input_level"):
            raise ConfigError(f"unknown attachment mode {self.mode!r}")
        if self.fin_mode not in ("imitation", "exact"):
            raise ConfigError(f"unknown FIN layer mode {self.fin_mode!r}")
        if self.fin_mode == "imitation" and (self.trainable_q or self.trainable_tau):
            raise ConfigError("q and tau are fixed inside an imitation-mode FIN; "
                              "use fin_mode='exact' to tune them")
        if self.output_scaling not in ("raw", "standardized"):
            raise ConfigError(f"output_scaling must be 'raw' or 'standardized', "
                              f"got {self.output_scaling!r}")
        if self.fin_mode == "exact" and self.trainable_weights:
            raise ConfigError("an exact-mode FIN has no weights to train")


def clamp_tau(value):
    if value < TAU_MIN:
        log.warning("tau update to %.3g clamped to %g", float(value), TAU_MIN)
        return np.full_like(value, TAU_MIN)
    return value


def clamp_q(value):
    """Keep q out of the band around 1 where the 0/0 form degenerates."""
    if abs(float(value) - 1.0) < Q_EXCLUSION:
        edge = 1.0 - Q_EXCLUSION if value < 1.0 else 1.0 + Q_EXCLUSION
        log.warning("q update to %.6g moved to band edge %g", float(value), edge)
        return np.full_like(value, edge)
    return value


def reference_stats(fin: FinModel, n=REFERENCE_SAMPLES) -> tuple[float, float]:
    """Mean and std of the FIN's target on its training distribution.

    An imitator carries these from training; for the closed form they are
    measured on a fixed sample of uniform signals at the FIN's (q, tau).
    """
    if not fin.exact:
        return float(fin.output_shift), float(fin.output_scale)
    signals = np.random.default_rng(0).random((n, fin.input_length))
    h = tsallis_entropy(normalize_input(signals), fin.params)
    return float(h.mean()), float(h.std())


class FinLayer(Layer):
    """A host-network layer wrapping a private copy of a FIN's parameters."""

    is_fin = True

    def __init__(self, fin: FinModel, attachment: FinAttachment, window_shape=None):
        self.fin = fin
        self.attachment = attachment
        self.window_shape = window_shape
        self.layers = []
        for layer in fin.layers:
            w = Parameter(layer.weight.data, "fin_weight", attachment.trainable_weights, group="fin")
            b = Parameter(layer.bias.data, "fin_bias", attachment.trainable_weights, group="fin")
            self.layers.append(Dense(w, b, layer.activation))
        self.q = Parameter(fin.params.q, "q", attachment.trainable_q, clamp_q, group="fin")
        self.tau = Parameter(fin.params.tau, "tau", attachment.trainable_tau, clamp_tau, group="fin")
        self.shift, self.scale = 0.0, 1.0
        if attachment.output_scaling == "standardized":
            self.shift, self.scale = reference_stats(fin)

    def parameters(self):
        out = [p for layer in self.layers for p in layer.parameters()]
        if self.fin.exact:
            out += [self.q, self.tau]
        return out

    @property
    def current_params(self) -> TsallisParams:
        return TsallisParams(float(self.q.data), float(self.tau.data))

    def entropy(self, v):
        s = fin_tensor_forward(self.fin, v, self.q, self.tau, layers=self.layers)
        if self.attachment.output_scaling == "standardized":
            s = T.mul(T.sub(s, self.shift), 1.0 / self.scale)
        return s

    def forward(self, h, training=False, inputs=None, rng=None):
        h = T.as_tensor(h)
        if self.attachment.mode == "latent_concat":
            s = self.entropy(h)
            return T.concat([h, T.reshape(s, s.shape + (1,))], axis=-1)
        x = T.as_tensor(inputs)
        batch = x.shape[0]
        t, f = self.window_shape
        series = T.reshape(T.swapaxes(T.reshape(x, (batch, t, f)), 1, 2), (batch * f, t))
        s = T.reshape(self.entropy(series), (batch, f))
        flat = h if h.ndim == 2 else T.reshape(h, (batch, -1))
        return T.concat([flat, s], axis=-1)


@dataclass(frozen=True)
class FinLayerSpec:
    """Network-spec descriptor for an attached FIN."""

    fin: FinModel
    attachment: FinAttachment
    window_shape: tuple | None = None
    is_fin = True

    def build(self, in_shape, rng):
        width = int(np.prod(in_shape))
        if self.attachment.mode == "latent_concat":
            if tuple(in_shape) != (self.fin.input_length,):
                raise ConfigError(f"latent width {in_shape} does not match FIN input length "
                                  f"{self.fin.input_length}")
            return FinLayer(self.fin, self.attachment), (width + 1,)
        t, f = self.window_shape
        return FinLayer(self.fin, self.attachment, self.window_shape), (width + f,)


def attach_fin(host: NetworkSpec, fin: FinModel, attachment: FinAttachment) -> NetworkSpec:
    """Return a copy of ``host`` with ``fin`` spliced in at the attachment point.

    For ``latent_concat`` the FIN reads the output of layer
    ``host_attach_index`` (default: the layer feeding the final dense layer).
    For ``input_level`` it is inserted right before the first dense layer.
    """
    if host.fin_layers():
        raise ConfigError("host network already carries a FIN")
    layers = list(host.layers)
    dense_idx = [i for i, d in enumerate(layers) if isinstance(d, DenseSpec)]
    if not dense_idx:
        raise ConfigError("host network has no dense layer")

    if attachment.mode == "latent_concat":
        k = attachment.host_attach_index
        if k is None:
            k = dense_idx[-1] - 1
        if not 0 <= k < len(layers) - 1:
            raise ConfigError(f"attach index {k} out of range for {len(layers)} host layers")
        shapes = host.shapes()
        if shapes[k] != (fin.input_length,):
            raise ConfigError(f"host layer {k} emits {shapes[k]}, FIN expects "
                              f"({fin.input_length},)")
        desc = FinLayerSpec(fin, attachment)
        layers.insert(k + 1, desc)
    else:
        shape = host.input_shape if len(host.input_shape) == 2 else (host.input_shape[0], 1)
        if shape[0] != fin.input_length:
            raise ConfigError(f"input window length {shape[0]} does not match FIN input "
                              f"length {fin.input_length}")
        desc = FinLayerSpec(fin, attachment, window_shape=tuple(shape))
        layers.insert(dense_idx[0], desc)

    out = replace(host, layers=layers, name=(host.name + "+fin") if host.name else "fin")
    out.validate()
    return out


def detach_fin(spec: NetworkSpec) -> NetworkSpec:
    return replace(spec, layers=[d for d in spec.layers if not d.is_fin])


def fin_layer(net) -> FinLayer | None:
    for layer in net.layers:
        if isinstance(layer, FinLayer):
            return layer
    return None


def finetune_params(net, loss_fn, x_train, y_train, x_val, y_val, config: TrainConfig,
                    rng=None, logits=False) -> tuple[object, TsallisParams, History]:
    """Jointly train host weights and the FIN parameters flagged trainable.

    Frozen groups keep their values bit-for-bit. Returns the trained network,
    the final (q, tau), and the training history.
    """
    layer = fin_layer(net)
    if layer is None:
        raise ConfigError("network carries no FIN layer")
    rng = rng if rng is not None else np.random.default_rng(0)
    hist = fit(net, loss_fn, x_train, y_train, x_val, y_val, config, rng, logits=logits)
    return net, layer.current_params, hist


def clone_fin(fin: FinModel) -> FinModel:
    return copy.deepcopy(fin)
