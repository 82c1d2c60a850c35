"""Closed-form temperature-scaled Tsallis entropy and its derivatives.

All functions accept a single vector or a batch of vectors stacked along
the leading axes; the distribution axis is always the last one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

# |q - 1| below this switches to the Shannon limit
SHANNON_BAND = 1e-6
# floor applied to p before taking logs
P_FLOOR = 1e-300
# tolerance on sum(p) == 1 for probability vectors
SUM_TOL = 1e-12


@dataclass(frozen=True)
class TsallisParams:
    """Entropic index ``q`` and softmax temperature ``tau``."""

    q: float = 1.5
    tau: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.q):
            raise DomainError(f"q must be finite, got {self.q}")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise DomainError(f"tau must be a positive finite number, got {self.tau}")

    @property
    def in_shannon_band(self) -> bool:
        return abs(self.q - 1.0) < SHANNON_BAND


class TsallisGradients(NamedTuple):
    grad_u: np.ndarray
    grad_q: np.ndarray | float
    grad_tau: np.ndarray | float


def _as_raw(u, min_len: int = 2) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 0 or u.shape[-1] < min_len:
        raise DomainError(f"expected vectors of length >= {min_len}, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise DomainError("input contains NaN or Inf")
    return u


def _check_tau(tau) -> float:
    tau = float(tau)
    if not (np.isfinite(tau) and tau > 0):
        raise DomainError(f"tau must be a positive finite number, got {tau}")
    return tau


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def softmax_temperature(u, tau: float = 1.0) -> np.ndarray:
    """Return ``softmax(u / tau)`` along the last axis."""
    u = _as_raw(u)
    tau = _check_tau(tau)
    z = u / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _log_p(p: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(p, P_FLOOR))


def _check_probability(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim == 0 or p.shape[-1] < 1:
        raise DomainError("probability vector must have at least one component")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise DomainError("probability components must lie in [0, 1]")
    if np.any(np.abs(p.sum(axis=-1) - 1.0) > SUM_TOL):
        raise DomainError("probability vector does not sum to 1")
    return p


def shannon_entropy(p):
    """Shannon entropy in nats, with ``0 * ln 0`` taken as 0."""
    p = _check_probability(p)
    terms = np.where(p > 0, -p * _log_p(p), 0.0)
    return _scalar(terms.sum(axis=-1))


def _shannon_unchecked(p: np.ndarray) -> np.ndarray:
    return np.where(p > 0, -p * _log_p(p), 0.0).sum(axis=-1)


def tsallis_from_probs(p: np.ndarray, q: float) -> np.ndarray:
    """Tsallis entropy of already-normalized probabilities (no validation)."""
    if abs(q - 1.0) < SHANNON_BAND:
        return _shannon_unchecked(p)
    s = np.exp(q * _log_p(p)).sum(axis=-1)
    return (1.0 - s) / (q - 1.0)


def tsallis_entropy(u, params: TsallisParams = TsallisParams()):
    """Tsallis entropy of ``softmax(u / tau)``.

    For ``|q - 1| < SHANNON_BAND`` the Shannon entropy is returned instead of
    the 0/0 form.
    """
    p = softmax_temperature(u, params.tau)
    return _scalar(tsallis_from_probs(p, params.q))


def uniform_tsallis(n: int, q: float) -> float:
    """Entropy of the uniform distribution over ``n`` outcomes (the maximum)."""
    if abs(q - 1.0) < SHANNON_BAND:
        return float(np.log(n))
    return (1.0 - n ** (1.0 - q)) / (q - 1.0)


def tsallis_gradients(u, params: TsallisParams = TsallisParams()) -> TsallisGradients:
    """Analytic partial derivatives of :func:`tsallis_entropy`.

    Inside the Shannon band ``grad_q`` is the derivative of the second-order
    expansion around ``q = 1``; ``grad_u`` and ``grad_tau`` are those of the
    Shannon entropy.
    """
    u = _as_raw(u)
    q, tau = params.q, params.tau
    p = softmax_temperature(u, tau)
    logp = _log_p(p)

    if params.in_shannon_band:
        h = _shannon_unchecked(p)
        # d/dz_j of Shannon(softmax(z))
        grad_z = -p * (logp + h[..., None])
        s2 = (p * logp**2).sum(axis=-1)
        s3 = (p * logp**3).sum(axis=-1)
        grad_q = -0.5 * s2 - (q - 1.0) / 3.0 * s3
    else:
        pq = np.exp(q * logp)
        s = pq.sum(axis=-1)
        grad_z = -q / (q - 1.0) * (pq - p * s[..., None])
        m = (pq * logp).sum(axis=-1)
        grad_q = (-(q - 1.0) * m - (1.0 - s)) / (q - 1.0) ** 2

    grad_u = grad_z / tau
    grad_tau = -(grad_z * u).sum(axis=-1) / tau**2
    return TsallisGradients(grad_u, _scalar(grad_q), _scalar(grad_tau))


def normalize_input(signal) -> np.ndarray:
    """Min-max rescale each signal to [0, 1]; constant signals map to 0.5."""
    x = _as_raw(signal)
    lo = x.min(axis=-1, keepdims=True)
    hi = x.max(axis=-1, keepdims=True)
    span = hi - lo
    const = span == 0
    out = (x - lo) / np.where(const, 1.0, span)
    return np.where(const, 0.5, out)
