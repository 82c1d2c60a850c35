"""Constructed tasks whose labels are driven by Tsallis entropy.

Regression: F feature series of iid U(0, 1) draws. The target at row t is a
linear function of the entropies of the preceding ``window`` values of a
few driver features, so the next value of the series is a deterministic
function of window entropy. Targets sit around ``level`` and stay positive.

Classification: a latent signal s ~ U(0, 1)^d generates each feature row
through a fixed random linear map plus small noise. The label is 1 when the
entropy of s exceeds the sample median, so classes are balanced.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..entropy import TsallisParams, normalize_input, tsallis_entropy
from ..errors import ConfigError
from .data import FeatureTable, TimeSeriesTable


@dataclass(frozen=True)
class EntropyRegressionTask:
    n_rows: int = 1500
    n_features: int = 6
    window: int = 7
    drivers: tuple[int, ...] = (0, 1)
    weights: tuple[float, ...] = (10.0, -5.0)
    level: float = 100.0
    noise: float = 0.0
    q: float = 1.5
    tau: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "drivers", tuple(self.drivers))
        object.__setattr__(self, "weights", tuple(self.weights))
        if len(self.drivers) != len(self.weights) or not self.drivers:
            raise ConfigError("need one weight per driver feature")
        if any(not 0 <= d < self.n_features for d in self.drivers):
            raise ConfigError("driver index out of range")
        if self.n_rows <= self.window + 1 or self.window < 2:
            raise ConfigError("series too short for the window")


def window_entropies(series, window, params) -> np.ndarray:
    """Entropy of the normalized trailing window ending at each row (NaN before the first full one)."""
    series = np.asarray(series, dtype=np.float64)
    out = np.full(len(series), np.nan)
    idx = np.arange(len(series) - window + 1)[:, None] + np.arange(window)
    out[window - 1:] = tsallis_entropy(normalize_input(series[idx]), params)
    return out


def entropy_regression_table(task: EntropyRegressionTask, seed: int) -> TimeSeriesTable:
    rng = np.random.default_rng(seed)
    x = rng.random((task.n_rows, task.n_features))
    params = TsallisParams(task.q, task.tau)
    target = np.full(task.n_rows, task.level)
    for d, w in zip(task.drivers, task.weights):
        h = window_entropies(x[:, d], task.window, params)
        z = (h - np.nanmean(h)) / np.nanstd(h)
        # the entropy of rows [t - window, t) drives row t
        target[task.window:] += w * z[task.window - 1:-1]
    if task.noise:
        target[task.window:] += task.noise * rng.normal(size=task.n_rows - task.window)
    if np.any(target <= 0):
        raise ConfigError("weights too large for the level: targets must stay positive")
    names = tuple(f"f{i}" for i in range(task.n_features))
    return TimeSeriesTable(np.arange(task.n_rows, dtype=np.float64), x, target, names, "target")


@dataclass(frozen=True)
class EntropyClassificationTask:
    n_samples: int = 5000
    latent_dim: int = 32
    n_features: int = 64
    noise: float = 0.01
    q: float = 1.5
    tau: float = 1.0

    def __post_init__(self):
        if self.n_samples < 4 or self.latent_dim < 2 or self.n_features < 1:
            raise ConfigError("classification task dimensions too small")


def entropy_classification_table(task: EntropyClassificationTask, seed: int) -> FeatureTable:
    rng = np.random.default_rng(seed)
    s = rng.random((task.n_samples, task.latent_dim))
    mixing = rng.normal(size=(task.latent_dim, task.n_features)) / np.sqrt(task.latent_dim)
    x = s @ mixing + task.noise * rng.normal(size=(task.n_samples, task.n_features))
    h = tsallis_entropy(normalize_input(s), TsallisParams(task.q, task.tau))
    labels = (h > np.median(h)).astype(np.int64)
    names = tuple(f"x{i}" for i in range(task.n_features))
    return FeatureTable(x, labels, names)
