"""Plain gradient descent, plateau-based LR reduction, early stopping, and a fit loop."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from ..errors import ConfigError, ShapeError, TrainingFailure
from .layers import Network
from .tensor import Parameter, no_grad

log = logging.getLogger(__name__)


@dataclass
class PlateauScheduler:
    """Multiply the learning rate by ``factor`` after ``patience`` epochs without improvement.

    An epoch improves when ``loss < best - min_delta``.
    """

    factor: float = 0.5
    patience: int = 5
    min_delta: float = 1e-4
    min_lr: float = 0.0
    best: float = math.inf
    wait: int = 0

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise ConfigError(f"scheduler factor must lie in (0, 1), got {self.factor}")
        if self.patience < 1:
            raise ConfigError(f"scheduler patience must be >= 1, got {self.patience}")


@dataclass
class EarlyStopping:
    patience: int = 15
    min_delta: float = 0.0
    best: float = math.inf
    wait: int = 0
    best_epoch: int = -1

    def __post_init__(self):
        if self.patience < 1:
            raise ConfigError(f"early-stop patience must be >= 1, got {self.patience}")
        if self.min_delta < 0:
            raise ConfigError("early-stop min_delta must be non-negative")


@dataclass
class OptimizerState:
    learning_rate: float
    scheduler: PlateauScheduler = field(default_factory=PlateauScheduler)
    early_stop: EarlyStopping = field(default_factory=EarlyStopping)

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning rate must be non-negative, got {self.learning_rate}")


def sgd_step(params: list[Parameter], state: OptimizerState) -> list[Parameter]:
    """In-place ``p <- p - lr * p.grad`` for every trainable parameter with a gradient.

    Frozen parameters are skipped; a parameter's ``constraint`` (if any) is
    applied after its update.
    """
    lr = state.learning_rate
    for p in params:
        if not getattr(p, "trainable", True) or p.grad is None:
            continue
        if p.grad.shape != p.shape:
            raise ShapeError(f"gradient shape {p.grad.shape} != parameter shape {p.shape}")
        p.data = p.data - lr * p.grad
        if getattr(p, "constraint", None) is not None:
            p.data = p.constraint(p.data)
    return params


def lr_on_plateau(state: OptimizerState, val_loss: float) -> OptimizerState:
    s = state.scheduler
    if val_loss < s.best - s.min_delta:
        s.best = val_loss
        s.wait = 0
        return state
    s.wait += 1
    if s.wait >= s.patience:
        state.learning_rate = max(state.learning_rate * s.factor, s.min_lr)
        s.wait = 0
        log.debug("plateau: learning rate reduced to %g", state.learning_rate)
    return state


def early_stop_check(state: OptimizerState, val_loss: float, epoch: int = -1) -> bool:
    """Return True when training should stop."""
    e = state.early_stop
    if val_loss < e.best - e.min_delta:
        e.best = val_loss
        e.best_epoch = epoch
        e.wait = 0
        return False
    e.wait += 1
    return e.wait >= e.patience


@dataclass
class TrainConfig:
    lr: float = 0.01
    batch_size: int = 32
    max_epochs: int = 100
    full_batch: bool = False
    sched_factor: float = 0.5
    sched_patience: int = 5
    sched_min_delta: float = 1e-4
    min_lr: float = 0.0
    early_stop_patience: int = 15
    early_stop_min_delta: float = 0.0
    divergence_factor: float = 10.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be >= 0")

    def optimizer_state(self) -> OptimizerState:
        return OptimizerState(
            self.lr,
            PlateauScheduler(self.sched_factor, self.sched_patience, self.sched_min_delta, self.min_lr),
            EarlyStopping(self.early_stop_patience, self.early_stop_min_delta),
        )

    def as_dict(self):
        return asdict(self)


@dataclass
class History:
    initial_val_loss: float = math.nan
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = math.nan
    stopped_early: bool = False

    def as_dict(self):
        return asdict(self)


def _batches(n, batch_size, rng, full_batch):
    if full_batch:
        yield np.arange(n)
        return
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def evaluate_loss(net: Network, loss_fn, x, y, logits=False, batch_size=4096) -> float:
    total = 0.0
    with no_grad():
        for start in range(0, len(x), batch_size):
            xb, yb = x[start:start + batch_size], y[start:start + batch_size]
            total += float(loss_fn(net(xb, logits=logits), yb).data) * len(xb)
    return total / len(x)


def fit(net: Network, loss_fn: Callable, x_train, y_train, x_val, y_val, config: TrainConfig,
        rng: np.random.Generator, logits=False, val_metric: Callable | None = None,
        params: list[Parameter] | None = None) -> History:
    """Mini-batch gradient descent with plateau LR reduction and early stopping.

    The monitored quantity is ``val_metric(net)`` when given (lower is better),
    otherwise the validation loss. On return ``net`` holds the parameters of
    the best monitored epoch. Raises :class:`TrainingFailure` when the
    monitored value exceeds ``divergence_factor`` times its initial value or
    becomes non-finite.
    """
    params = net.parameters() if params is None else params
    state = config.optimizer_state()

    def monitor():
        if val_metric is not None:
            return float(val_metric(net))
        return evaluate_loss(net, loss_fn, x_val, y_val, logits=logits)

    hist = History(initial_val_loss=monitor())
    best_state = net.state()
    best_val = hist.initial_val_loss
    hist.best_val_loss = best_val
    n = len(x_train)

    for epoch in range(1, config.max_epochs + 1):
        lr_used = state.learning_rate
        running = 0.0
        for idx in _batches(n, config.batch_size, rng, config.full_batch):
            net.zero_grad()
            loss = loss_fn(net(x_train[idx], training=True, logits=logits), y_train[idx])
            loss.backward()
            sgd_step(params, state)
            running += float(loss.data) * len(idx)
        val = monitor()
        hist.epochs.append({"epoch": epoch, "train_loss": running / n, "val_loss": val, "lr": lr_used})
        if not np.isfinite(val) or val > config.divergence_factor * hist.initial_val_loss:
            net.load_state(best_state)
            raise TrainingFailure(
                f"training diverged at epoch {epoch}: monitored value {val:.6g} vs initial "
                f"{hist.initial_val_loss:.6g}", hist.epochs)
        if val < best_val:
            best_val = val
            best_state = net.state()
            hist.best_epoch = epoch
            hist.best_val_loss = val
        lr_on_plateau(state, val)
        if early_stop_check(state, val, epoch):
            hist.stopped_early = True
            break

    net.load_state(best_state)
    return hist
