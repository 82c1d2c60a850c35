"""Regression errors and confusion-matrix classification metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DomainError, ShapeError


def _pair(pred, actual):
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    actual = np.asarray(actual, dtype=np.float64).reshape(-1)
    if pred.shape != actual.shape:
        raise ShapeError(f"prediction length {pred.size} != actual length {actual.size}")
    if pred.size == 0:
        raise ShapeError("metrics need at least one sample")
    return pred, actual


def rmse(pred, actual) -> float:
    pred, actual = _pair(pred, actual)
    return float(np.sqrt(np.mean((pred - actual) ** 2)))


def mape(pred, actual) -> float:
    """Mean absolute percentage error, in percent."""
    pred, actual = _pair(pred, actual)
    if np.any(actual == 0):
        raise DomainError("MAPE is undefined when an actual value is zero")
    return float(100.0 * np.mean(np.abs(pred - actual) / np.abs(actual)))


def _pct(num, den):
    return None if den == 0 else 100.0 * num / den


@dataclass(frozen=True)
class ClassMetrics:
    """Percentages; ``None`` marks a metric whose denominator is empty.

    For more than two classes specificity and sensitivity are macro averages
    of the one-vs-rest values over the classes where they are defined, and
    ``averaging`` says so. The confusion counts are those of the binary case,
    or summed over classes for the one-vs-rest case.
    """

    accuracy: float
    specificity: float | None
    sensitivity: float | None
    tp: int
    fn: int
    tn: int
    fp: int
    n: int
    averaging: str = "binary"

    def __post_init__(self):
        for v in (self.accuracy, self.specificity, self.sensitivity):
            if v is not None and not 0.0 <= v <= 100.0:
                raise DomainError(f"metric {v} outside [0, 100]")

    def as_dict(self):
        return asdict(self)


def confusion(pred, truth, positive=1) -> tuple[int, int, int, int]:
    """(tp, fn, tn, fp) for ``positive`` against everything else."""
    p, t = np.asarray(pred) == positive, np.asarray(truth) == positive
    return (int(np.sum(p & t)), int(np.sum(~p & t)), int(np.sum(~p & ~t)), int(np.sum(p & ~t)))


def class_metrics(pred, truth) -> ClassMetrics:
    pred = np.asarray(pred).reshape(-1)
    truth = np.asarray(truth).reshape(-1)
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction length {pred.size} != label length {truth.size}")
    if pred.size == 0:
        raise ShapeError("metrics need at least one sample")
    accuracy = 100.0 * float(np.mean(pred == truth))
    classes = np.union1d(pred, truth)
    if set(classes.tolist()) <= {0, 1}:
        tp, fn, tn, fp = confusion(pred, truth, 1)
        return ClassMetrics(accuracy, _pct(tn, tn + fp), _pct(tp, tp + fn), tp, fn, tn, fp,
                            pred.size)
    specs, senss, totals = [], [], np.zeros(4, dtype=np.int64)
    for c in classes:
        tp, fn, tn, fp = confusion(pred, truth, c)
        totals += (tp, fn, tn, fp)
        if tn + fp:
            specs.append(100.0 * tn / (tn + fp))
        if tp + fn:
            senss.append(100.0 * tp / (tp + fn))
    mean = lambda xs: float(np.mean(xs)) if xs else None  # noqa: E731
    return ClassMetrics(accuracy, mean(specs), mean(senss), *map(int, totals), pred.size,
                        averaging="macro one-vs-rest")
