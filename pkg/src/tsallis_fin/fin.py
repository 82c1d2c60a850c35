"""Training, evaluating and storing feature imitating networks (FINs).

A FIN here is a small dense network preceded by two fixed, parameter-free
stages: per-signal min-max rescaling and an ascending sort. Both leave the
imitated entropy unchanged (it is invariant to positive affine maps and to
permutations of the signal), so the dense stack only has to learn a smooth
function of the order statistics. Targets are standardized during training
and a fixed output affine maps the network back to entropy units.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .engine import serialize
from .engine.layers import Affine, Dense, MinMax, Network, Sort
from .engine.losses import l1_loss
from .engine.optim import History, TrainConfig, fit
from .engine.tensor import Tensor, minmax_normalize, no_grad, reshape, tsallis
from .entropy import TsallisParams, normalize_input, tsallis_entropy
from .errors import ConfigError, DimensionError, ModelFileError, ShapeError

log = logging.getLogger(__name__)

FIN_KIND = "tsallis-fin"


@dataclass(frozen=True)
class SyntheticDatasetSpec:
    """i.i.d. uniform[0, 1) signals."""

    n_samples: int = 50_000
    signal_length: int = 32
    seed: int = 0
    distribution: str = "uniform"

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.signal_length < 2:
            raise ConfigError("signal_length must be >= 2")
        if self.distribution != "uniform":
            raise ConfigError("only the uniform[0, 1) distribution is supported")


@dataclass
class FinTrainConfig:
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "relu"
    sort_inputs: bool = True
    lr: float = 0.02
    batch_size: int = 32
    full_batch: bool = False
    max_epochs: int = 200
    sched_factor: float = 0.5
    sched_patience: int = 5
    sched_min_delta: float = 1e-4
    early_stop_patience: int = 15
    early_stop_min_delta: float = 0.0
    val_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError(f"val_fraction must lie in (0, 1), got {self.val_fraction}")
        if any(h < 1 for h in self.hidden):
            raise ConfigError("hidden sizes must be positive")

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr, batch_size=self.batch_size, max_epochs=self.max_epochs,
            full_batch=self.full_batch, sched_factor=self.sched_factor,
            sched_patience=self.sched_patience, sched_min_delta=self.sched_min_delta,
            early_stop_patience=self.early_stop_patience,
            early_stop_min_delta=self.early_stop_min_delta,
        )


@dataclass
class FinModel:
    """A trained imitator, or (with ``exact=True``) the closed form itself."""

    layers: list[Dense]
    params: TsallisParams
    input_length: int
    output_scale: float = 1.0
    output_shift: float = 0.0
    sort_inputs: bool = True
    exact: bool = False
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.exact:
            if self.layers:
                raise ConfigError("an exact FIN carries no layers")
            return
        if not self.layers:
            raise ConfigError("a trained FIN needs at least one layer")
        width = self.input_length
        for i, layer in enumerate(self.layers):
            if layer.in_dim != width:
                raise DimensionError(f"layer {i} expects width {layer.in_dim}, receives {width}")
            width = layer.out_dim
        if width != 1:
            raise DimensionError(f"FIN must emit a scalar, last layer emits {width}")

    @classmethod
    def exact_oracle(cls, input_length: int, params: TsallisParams = TsallisParams()) -> "FinModel":
        return cls([], params, input_length, exact=True)

    def network(self) -> Network:
        """Forward-only network sharing this model's parameter objects."""
        pre = [MinMax()] + ([Sort()] if self.sort_inputs else [])
        return Network(pre + list(self.layers) + [Affine(self.output_scale, self.output_shift)])

    def n_params(self) -> int:
        return sum(layer.weight.size + layer.bias.size for layer in self.layers)

    def weights(self) -> list[np.ndarray]:
        return [p.data for layer in self.layers for p in layer.parameters()]


def fin_forward(fin: FinModel, x) -> np.ndarray | float:
    """Evaluate the FIN on one signal or a batch of signals (rows)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.ndim != 2 or xb.shape[1] != fin.input_length:
        raise ShapeError(f"FIN expects signals of length {fin.input_length}, got shape {x.shape}")
    if fin.exact:
        out = tsallis_entropy(normalize_input(xb), fin.params)
    else:
        out = fin.network().predict(xb)[:, 0]
    return float(out[0]) if single else out


def generate_synthetic(spec: SyntheticDatasetSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    return rng.random((spec.n_samples, spec.signal_length))


def label_with_oracle(signals, params: TsallisParams = TsallisParams()) -> np.ndarray:
    """Closed-form entropy of each min-max normalized signal."""
    return np.asarray(tsallis_entropy(normalize_input(signals), params), dtype=np.float64)


def split_indices(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint, exhaustive (train, val) index sets, each sorted."""
    if n < 2:
        raise ConfigError("need at least two samples to split")
    n_val = min(max(1, int(round(n * val_fraction))), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def _canonical_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def _core_network(config: FinTrainConfig, input_length: int) -> tuple[Network, list[Dense]]:
    rng = np.random.default_rng(config.seed)
    dims = (input_length,) + config.hidden
    dense = [Dense.init(rng, a, b, config.activation) for a, b in zip(dims[:-1], dims[1:])]
    dense.append(Dense.init(rng, dims[-1], 1, "identity"))
    pre = [MinMax()] + ([Sort()] if config.sort_inputs else [])
    return Network(pre + dense, seed=config.seed), dense


def evaluate_fin(model, signals, targets=None, params: TsallisParams | None = None) -> dict:
    """Approximation error of ``model`` against the closed-form oracle.

    ``model`` is a :class:`FinModel` or any callable mapping a batch of
    signals to predictions.
    """
    signals = np.asarray(signals, dtype=np.float64)
    if isinstance(model, FinModel):
        if signals.ndim != 2 or signals.shape[1] != model.input_length:
            raise ShapeError(f"signals of length {signals.shape[-1]} do not match "
                             f"FIN input length {model.input_length}")
        params = params or model.params
        pred = fin_forward(model, signals)
    else:
        pred = np.asarray(model(signals), dtype=np.float64)
    if targets is None:
        targets = label_with_oracle(signals, params or TsallisParams())
    err = np.abs(pred - targets)
    return {"mae": float(err.mean()), "max_abs_err": float(err.max()),
            "target_std": float(np.std(targets))}


def train_fin(config: FinTrainConfig = FinTrainConfig(),
              spec: SyntheticDatasetSpec = SyntheticDatasetSpec(),
              params: TsallisParams = TsallisParams()) -> tuple[FinModel, History]:
    """Fit a FIN to oracle-labelled synthetic signals.

    q and tau stay fixed; they define the imitated function. Raises
    :class:`~tsallis_fin.errors.TrainingFailure` on divergence.
    """
    signals = generate_synthetic(spec)
    targets = label_with_oracle(signals, params)
    tr, va = split_indices(len(signals), config.val_fraction, config.seed)
    mu, sigma = float(targets[tr].mean()), float(targets[tr].std())
    if sigma == 0.0:
        sigma = 1.0
    z = ((targets - mu) / sigma)[:, None]

    net, dense = _core_network(config, spec.signal_length)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[1])
    hist = fit(net, l1_loss, signals[tr], z[tr], signals[va], z[va], config.train_config(), rng)

    model = FinModel(dense, params, spec.signal_length, output_scale=sigma, output_shift=mu,
                     sort_inputs=config.sort_inputs)
    train_stats = evaluate_fin(model, signals[tr], targets[tr])
    val_stats = evaluate_fin(model, signals[va], targets[va])
    const_mae = float(np.abs(targets[va] - mu).mean())
    model.provenance = json.loads(json.dumps({
        "package_version": __version__,
        "spec_hash": _canonical_hash({"dataset": asdict(spec), "config": asdict(config),
                                      "q": params.q, "tau": params.tau}),
        "dataset": asdict(spec),
        "config": asdict(config),
        "seed": config.seed,
        "epochs_run": len(hist.epochs),
        "best_epoch": hist.best_epoch,
        "initial_val_mae": hist.initial_val_loss * sigma,
        "final_train_mae": train_stats["mae"],
        "final_val_mae": val_stats["mae"],
        "val_max_abs_err": val_stats["max_abs_err"],
        "target_std": val_stats["target_std"],
        "constant_predictor_mae": const_mae,
    }))
    log.info("FIN trained: val MAE %.3g (target std %.3g, constant predictor %.3g)",
             val_stats["mae"], val_stats["target_std"], const_mae)
    return model, hist


def provenance_split(model: FinModel, which: str = "val") -> tuple[np.ndarray, np.ndarray]:
    """Regenerate the (signals, targets) split recorded in a model's provenance."""
    prov = model.provenance
    try:
        spec = SyntheticDatasetSpec(**prov["dataset"])
        val_fraction = prov["config"]["val_fraction"]
        seed = prov["config"]["seed"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"model provenance lacks dataset details: {exc}") from exc
    signals = generate_synthetic(spec)
    tr, va = split_indices(len(signals), val_fraction, seed)
    idx = va if which == "val" else tr
    return signals[idx], label_with_oracle(signals[idx], model.params)


def save_fin(model: FinModel, path):
    arrays = {"scalars": np.array([model.params.q, model.params.tau,
                                   model.output_scale, model.output_shift])}
    layers = []
    for i, layer in enumerate(model.layers):
        arrays[f"w{i}"] = layer.weight.data
        arrays[f"b{i}"] = layer.bias.data
        layers.append({"activation": layer.activation, "in": layer.in_dim, "out": layer.out_dim})
    header = {"kind": FIN_KIND, "input_length": model.input_length, "exact": model.exact,
              "sort_inputs": model.sort_inputs, "layers": layers,
              "provenance": model.provenance}
    serialize.write(path, header, arrays)


def load_fin(path) -> FinModel:
    header, arrays = serialize.read(path)
    try:
        if header.get("kind") != FIN_KIND:
            raise ModelFileError(f"not a FIN model file (kind={header.get('kind')!r})")
        q, tau, scale, shift = (float(v) for v in arrays["scalars"])
        layers = []
        for i, meta in enumerate(header["layers"]):
            w, b = arrays[f"w{i}"], arrays[f"b{i}"]
            if w.shape != (meta["out"], meta["in"]) or b.shape != (meta["out"],):
                raise DimensionError(f"layer {i} arrays do not match the dimension header")
            layers.append(Dense(w, b, meta["activation"]))
        return FinModel(layers, TsallisParams(q, tau), int(header["input_length"]),
                        output_scale=scale, output_shift=shift,
                        sort_inputs=bool(header["sort_inputs"]), exact=bool(header["exact"]),
                        provenance=header.get("provenance", {}))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFileError):
            raise
        raise ModelFileError(f"malformed FIN header: {exc}") from exc


def fin_tensor_forward(fin: FinModel, v: Tensor, q: Tensor, tau: Tensor, layers=None) -> Tensor:
    """Graph-recording FIN evaluation on rows of ``v``; returns shape [batch]."""
    if fin.exact:
        return tsallis(minmax_normalize(v), q, tau)
    net = fin.network() if layers is None else Network(
        [MinMax()] + ([Sort()] if fin.sort_inputs else []) + list(layers)
        + [Affine(fin.output_scale, fin.output_shift)])
    out = net(v)
    return reshape(out, out.shape[:-1])


__all__ = [
    "FinModel", "FinTrainConfig", "SyntheticDatasetSpec", "evaluate_fin", "fin_forward",
    "generate_synthetic", "label_with_oracle", "load_fin", "provenance_split",
    "save_fin", "split_indices", "train_fin",
]
