"""Host architectures for the three experiment shapes.

* ``exp1``: a [window, F] input pooled by temporal attention (context
  appended to the flattened window), gated by feature attention, then a
  dense stack with one linear output. An input-level FIN lands in front of
  the first dense layer.
* ``exp2``: 512-256-128-64-32 ReLU stack, dropout 0.5 after each layer,
  softmax head; the FIN reads the 32-unit latent.
* ``exp3``: 256-32 ReLU stack with a sigmoid head; the FIN reads the 32-unit
  latent, giving a 33-wide input to the head.
"""
from __future__ import annotations

from ..engine.spec import AttentionSpec, DenseSpec, DropoutSpec, NetworkSpec
from ..errors import ConfigError

EXP2_HIDDEN = (512, 256, 128, 64, 32)
EXP3_HIDDEN = (256, 32)
SHAPES = ("exp1", "exp2", "exp3")


def default_hidden(shape: str) -> tuple[int, ...]:
    return {"exp1": (64, 32), "exp2": EXP2_HIDDEN, "exp3": EXP3_HIDDEN}[shape]


def exp1_spec(window: int, n_features: int, hidden=(64, 32), seed=0, name="") -> NetworkSpec:
    layers = [AttentionSpec("temporal", "concat"), AttentionSpec("feature")]
    layers += [DenseSpec(units, "relu") for units in hidden]
    layers.append(DenseSpec(1, "identity"))
    return NetworkSpec((window, n_features), layers, 1, seed=seed, name=name)


def classifier_spec(input_dim: int, n_classes: int, hidden, dropout=0.0, seed=0,
                    name="") -> NetworkSpec:
    """Dense ReLU stack; one sigmoid unit for two classes, softmax otherwise."""
    layers = []
    for units in hidden:
        layers.append(DenseSpec(units, "relu"))
        if dropout:
            layers.append(DropoutSpec(dropout))
    if n_classes == 2:
        layers.append(DenseSpec(1, "sigmoid"))
        out = 1
    else:
        layers.append(DenseSpec(n_classes, "softmax"))
        out = n_classes
    return NetworkSpec((input_dim,), layers, out, seed=seed, name=name)


def host_spec(shape: str, *, input_shape, n_classes=2, hidden=None, dropout=None, seed=0,
              name="") -> NetworkSpec:
    if shape == "exp1":
        window, n_features = input_shape
        return exp1_spec(window, n_features, hidden or (64, 32), seed, name)
    if shape == "exp2":
        return classifier_spec(int(input_shape[0]), n_classes, hidden or EXP2_HIDDEN,
                               0.5 if dropout is None else dropout, seed, name)
    if shape == "exp3":
        return classifier_spec(int(input_shape[0]), n_classes, hidden or EXP3_HIDDEN,
                               dropout or 0.0, seed, name)
    raise ConfigError(f"unknown architecture shape {shape!r}; expected one of {SHAPES}")
