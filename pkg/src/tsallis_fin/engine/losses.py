"""Scalar training losses. Each returns a 0-d :class:`Tensor`."""
from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor, _make, _stable_sigmoid, absolute, as_tensor, mean, square, sub


def _same_shape(pred, target):
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction shape {pred.shape} != target shape {target.shape}")
    return pred, target


def l1_loss(pred, target) -> Tensor:
    """Mean absolute error; the subgradient at zero residual is 0."""
    pred, target = _same_shape(pred, target)
    return mean(absolute(sub(pred, target)))


def mse_loss(pred, target) -> Tensor:
    pred, target = _same_shape(pred, target)
    return mean(square(sub(pred, target)))


def bce_with_logits(logits, target) -> Tensor:
    """Binary cross-entropy on pre-sigmoid scores."""
    logits, target = _same_shape(logits, target)
    z, y = logits.data, target.data
    loss = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    n = z.size
    return _make(loss.mean(), (logits,), lambda g: (g * (_stable_sigmoid(z) - y) / n,))


def softmax_cross_entropy(logits, labels) -> Tensor:
    """Mean categorical cross-entropy; ``labels`` are integer class ids."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != logits.shape[:1]:
        raise ShapeError(f"logits {logits.shape} incompatible with labels {labels.shape}")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    rows = np.arange(len(labels))
    n = len(labels)

    def back(g):
        d = np.exp(logp)
        d[rows, labels] -= 1.0
        return (g * d / n,)

    return _make(-logp[rows, labels].mean(), (logits,), back)


LOSSES = {"l1": l1_loss, "mse": mse_loss, "bce": bce_with_logits, "ce": softmax_cross_entropy}
