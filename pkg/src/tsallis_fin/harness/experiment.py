"""FIN-ENN versus capacity-matched baseline, end to end.

A run loads or synthesizes data, splits it without leakage, picks the best
baseline among up to ten capacity-matched candidates on validation, trains
the FIN-embedded network on the same splits and writes one deterministic
report. Every random stream is derived from the run seed.
"""
from __future__ import annotations

import json
import logging
import platform
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import __version__
from ..embedding import FinAttachment, attach_fin, fin_layer
from ..engine.losses import bce_with_logits, mse_loss, softmax_cross_entropy
from ..engine.optim import TrainConfig, fit
from ..engine.spec import NetworkSpec, build_network, count_params
from ..engine.tensor import no_grad
from ..entropy import TsallisParams
from ..errors import ConfigError, InvariantViolation
from ..fin import FinModel, FinTrainConfig, SyntheticDatasetSpec, load_fin, train_fin
from .config import config_hash, to_dict
from .data import (TableSchema, chrono_split, load_feature_table, load_table, make_windows,
                   stratified_split)
from .metrics import class_metrics, mape, rmse
from .models import default_hidden, host_spec
from .reference import CITED, DEFAULT_PRICE_FEATURES, PERIODS
from .search import baseline_search
from .tasks import (EntropyClassificationTask, EntropyRegressionTask,
                    entropy_classification_table, entropy_regression_table)

log = logging.getLogger(__name__)

BASELINE, FIN_ENN = "NN-Baseline", "FIN-ENN"


@dataclass
class DatasetConfig:
    """``kind="synthetic"`` uses the constructed entropy task; ``"csv"`` reads ``path``."""

    kind: str = "synthetic"
    path: str | None = None
    time_column: str = "Date"
    features: tuple[str, ...] = DEFAULT_PRICE_FEATURES
    target: str = "Close"
    label: str = "label"
    period: str = "all"
    delimiter: str = ","
    seed: int | None = None
    regression: EntropyRegressionTask = field(default_factory=EntropyRegressionTask)
    classification: EntropyClassificationTask = field(default_factory=EntropyClassificationTask)

    def __post_init__(self):
        if self.kind not in ("synthetic", "csv"):
            raise ConfigError(f"dataset kind must be 'synthetic' or 'csv', got {self.kind!r}")
        if self.kind == "csv" and not self.path:
            raise ConfigError("a csv dataset needs a path")
        if self.period not in PERIODS:
            raise ConfigError(f"period must be one of {sorted(PERIODS)}, got {self.period!r}")
        self.features = tuple(self.features)


@dataclass
class ModelConfig:
    """Host shape plus baseline candidates given as hidden-width tuples.

    With no candidates listed, the baseline is the host widened just enough
    to match the FIN-ENN parameter count, plus 1.5x and 2x widenings of it.
    """

    shape: str = "exp1"
    hidden: tuple[int, ...] | None = None
    dropout: float | None = None
    baseline_candidates: tuple[tuple[int, ...], ...] = ()


@dataclass
class FinSourceConfig:
    """Where the FIN comes from: a saved model file, or trained in-run."""

    path: str | None = None
    train: FinTrainConfig = field(default_factory=lambda: FinTrainConfig(seed=0))
    n_samples: int = 20_000
    data_seed: int = 0
    q: float = 1.5
    tau: float = 1.0


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    task: str = "regression"
    seed: int = 0
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    fin: FinSourceConfig = field(default_factory=FinSourceConfig)
    attachment: FinAttachment = field(default_factory=lambda: FinAttachment(mode="input_level"))
    train: TrainConfig = field(default_factory=TrainConfig)
    window: int = 7
    horizon: int = 1
    train_frac: float = 0.85
    val_frac: float = 0.15
    cited: str | None = None

    def __post_init__(self):
        if self.task not in ("regression", "classification"):
            raise ConfigError(f"task must be regression or classification, got {self.task!r}")
        if self.task == "regression" and self.model.shape != "exp1":
            raise ConfigError("regression runs use the exp1 shape")
        if self.task == "classification" and self.model.shape == "exp1":
            raise ConfigError("classification runs use the exp2 or exp3 shape")
        wanted = "input_level" if self.task == "regression" else "latent_concat"
        if self.attachment.mode != wanted:
            raise ConfigError(f"{self.task} runs attach the FIN with mode {wanted!r}")
        if self.cited is not None and self.cited not in CITED:
            raise ConfigError(f"unknown cited table {self.cited!r}; choose from {sorted(CITED)}")
        for name in ("train_frac", "val_frac"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1)")


@dataclass
class ExperimentReport:
    name: str
    task: str
    seed: int
    config_hash: str
    modes: dict
    metrics: dict
    param_counts: dict
    history: dict
    baseline_search: dict
    fin: dict
    data: dict
    config: dict
    cited: dict | None
    versions: dict

    def as_dict(self):
        return dict(self.__dict__)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    def write(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def read(cls, path) -> ExperimentReport:
        data = json.loads(Path(path).read_text())
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"{path}: not an experiment report ({exc})") from exc


def _child_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def resolve_fin(config: ExperimentConfig, input_length: int) -> tuple[FinModel, dict]:
    """The FIN named by the config, plus a provenance reference for the report."""
    src, mode = config.fin, config.attachment.fin_mode
    params = TsallisParams(src.q, src.tau)
    if mode == "exact":
        fin = FinModel.exact_oracle(input_length, params)
        return fin, {"source": "closed form", "mode": mode}
    if src.path:
        fin = load_fin(src.path)
        ref = {"source": str(src.path)}
    else:
        spec = SyntheticDatasetSpec(src.n_samples, input_length, src.data_seed)
        fin, _ = train_fin(src.train, spec, params)
        ref = {"source": "trained in-run"}
    if fin.input_length != input_length:
        raise ConfigError(f"FIN input length {fin.input_length} does not match the "
                          f"attachment width {input_length}")
    prov = fin.provenance
    ref.update(mode=mode, spec_hash=prov.get("spec_hash"), input_length=fin.input_length,
               val_mae=prov.get("final_val_mae"), target_std=prov.get("target_std"))
    return fin, ref


def capacity_matched(spec_for, hidden, min_params) -> tuple[int, ...]:
    """Widen the first hidden layer until the host reaches ``min_params``."""
    hidden = list(hidden)
    while count_params(spec_for(tuple(hidden)), include_fin=False) < min_params:
        hidden[0] += 1
    return tuple(hidden)


def baseline_candidates(config: ExperimentConfig, spec_for, min_params) -> list[NetworkSpec]:
    hidden_sets = list(config.model.baseline_candidates)
    if not hidden_sets:
        base = capacity_matched(spec_for, config.model.hidden or default_hidden(config.model.shape),
                                min_params)
        hidden_sets = [base] + [tuple(int(round(h * f)) for h in base) for f in (1.5, 2.0)]
    return [replace(spec_for(tuple(h)), name=f"{BASELINE} {'-'.join(map(str, h))}")
            for h in hidden_sets]


@dataclass
class _Prepared:
    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    info: dict
    extra: dict = field(default_factory=dict)


def _standardize(train, *others, axis=0):
    mu = train.mean(axis=axis)
    sd = train.std(axis=axis)
    sd = np.where(sd > 0, sd, 1.0)
    return [(a - mu) / sd for a in (train, *others)], mu, sd


def _load_series(config: ExperimentConfig, data_seed: int):
    ds = config.dataset
    if ds.kind == "synthetic":
        task = replace(ds.regression, window=config.window)
        return entropy_regression_table(task, data_seed)
    start, end = PERIODS[ds.period]
    schema = TableSchema(ds.features, ds.target, ds.time_column, ds.delimiter, start=start,
                         end=end)
    return load_table(ds.path, schema)


def prepare_regression(config: ExperimentConfig, data_seed: int) -> _Prepared:
    table = _load_series(config, data_seed)
    samples = make_windows(table, config.window, config.horizon)
    trval, test = chrono_split(samples, config.train_frac)
    train, val = chrono_split(trval, 1.0 - config.val_frac)
    assert train.target_time.max() < val.target_time.min() <= val.target_time.max() \
        < test.target_time.min(), "chronological split leaked"
    n_feat = train.windows.shape[-1]
    rows = train.windows.reshape(-1, n_feat)
    _, mu, sd = _standardize(rows)
    xs = [(s.windows - mu) / sd for s in (train, val, test)]
    (y_tr, y_va, y_te), ymu, ysd = _standardize(train.targets, val.targets, test.targets)
    info = {"rows": len(table), "samples": len(samples), "train": len(train), "val": len(val),
            "test": len(test), "features": list(table.feature_names),
            "target": table.target_name, "ingestion": table.report.as_dict()}
    return _Prepared(xs[0], y_tr[:, None], xs[1], y_va[:, None], xs[2], y_te[:, None], info,
                     {"y_mean": float(ymu), "y_std": float(ysd), "test_targets": test.targets})


def prepare_classification(config: ExperimentConfig, data_seed: int, split_seed: int) -> _Prepared:
    ds = config.dataset
    if ds.kind == "synthetic":
        table = entropy_classification_table(ds.classification, data_seed)
    else:
        table = load_feature_table(ds.path, ds.label, ds.features or None, ds.delimiter)
    t = config.train_frac
    fracs = [t * (1 - config.val_frac), t * config.val_frac, 1 - t]
    tr, va, te = stratified_split(table.labels, fracs, split_seed)
    (x_tr, x_va, x_te), _, _ = _standardize(table.features[tr], table.features[va],
                                            table.features[te])
    classes = np.unique(table.labels)
    n_classes = max(2, len(classes))
    if n_classes == 2:
        ys = [table.labels[i].astype(np.float64)[:, None] for i in (tr, va, te)]
    else:
        ys = [table.labels[i] for i in (tr, va, te)]
    info = {"samples": len(table.labels), "train": len(tr), "val": len(va), "test": len(te),
            "features": len(table.feature_names), "classes": [int(c) for c in classes],
            "ingestion": table.report.as_dict()}
    return _Prepared(x_tr, ys[0], x_va, ys[1], x_te, ys[2], info,
                     {"n_classes": n_classes, "test_labels": table.labels[te]})


def _classifier_outputs(net, x, n_classes):
    with no_grad():
        logits = net(x, logits=True).data
    if n_classes == 2:
        return (logits[:, 0] > 0).astype(np.int64)
    return np.argmax(logits, axis=1)


def _make_trainer(config: ExperimentConfig, prep: _Prepared, fit_seed: int):
    if config.task == "regression":
        loss, logits = mse_loss, False
    elif prep.extra["n_classes"] == 2:
        loss, logits = bce_with_logits, True
    else:
        loss, logits = softmax_cross_entropy, True

    def val_score(net):
        if config.task == "regression":
            return rmse(net.predict(prep.x_val), prep.y_val)
        pred = _classifier_outputs(net, prep.x_val, prep.extra["n_classes"])
        truth = prep.y_val.reshape(-1).astype(np.int64)
        return 100.0 - 100.0 * float(np.mean(pred == truth))

    def trainer(spec, data, seed):
        net = build_network(spec)
        hist = fit(net, loss, prep.x_train, prep.y_train, prep.x_val, prep.y_val, config.train,
                   np.random.default_rng(fit_seed), logits=logits)
        return net, hist, val_score(net)

    return trainer


def _test_metrics(config, prep: _Prepared, net) -> dict:
    if config.task == "regression":
        pred = net.predict(prep.x_test)[:, 0] * prep.extra["y_std"] + prep.extra["y_mean"]
        actual = prep.extra["test_targets"]
        out = {"RMSE": rmse(pred, actual)}
        out["MAPE"] = mape(pred, actual) if np.all(actual != 0) else None
        return out
    pred = _classifier_outputs(net, prep.x_test, prep.extra["n_classes"])
    m = class_metrics(pred, prep.extra["test_labels"])
    return {"Accuracy": m.accuracy, "Specificity": m.specificity,
            "Sensitivity": m.sensitivity, "confusion": {"tp": m.tp, "fn": m.fn, "tn": m.tn,
                                                        "fp": m.fp}, "averaging": m.averaging}


def run_experiment(config: ExperimentConfig, fin: FinModel | None = None) -> ExperimentReport:
    """Run one seeded FIN-ENN versus baseline comparison.

    ``fin`` overrides the FIN named in the config (useful to share one trained
    imitator across seeds).
    """
    seed = config.seed
    data_seed = config.dataset.seed if config.dataset.seed is not None else seed
    split_seed, model_seed, fit_seed = _child_seeds(seed, 3)

    if config.task == "regression":
        prep = prepare_regression(config, data_seed)
        input_shape = prep.x_train.shape[1:]
        fin_len = config.window
    else:
        prep = prepare_classification(config, data_seed, split_seed)
        input_shape = prep.x_train.shape[1:]
        fin_len = None

    def spec_for(hidden, name=""):
        return host_spec(config.model.shape, input_shape=input_shape,
                         n_classes=prep.extra.get("n_classes", 2), hidden=hidden,
                         dropout=config.model.dropout, seed=model_seed, name=name)

    host = spec_for(config.model.hidden, FIN_ENN)
    if fin_len is None:
        # the latent feeding the head
        fin_len = int(np.prod(host.shapes()[-2]))
    if fin is None:
        fin, fin_ref = resolve_fin(config, fin_len)
    else:
        fin_ref = {"source": "supplied", "mode": config.attachment.fin_mode,
                   "spec_hash": fin.provenance.get("spec_hash"),
                   "input_length": fin.input_length,
                   "val_mae": fin.provenance.get("final_val_mae")}
    fin_spec = attach_fin(host, fin, config.attachment)
    min_params = count_params(fin_spec, include_fin=False)

    trainer = _make_trainer(config, prep, fit_seed)
    candidates = baseline_candidates(config, spec_for, min_params)
    best_spec, base_net, search = baseline_search(candidates, prep, model_seed,
                                                  min_params=min_params, trainer=trainer)
    base_hist = search.candidates[search.best_index].history
    fin_net, fin_hist, fin_val = trainer(fin_spec, prep, model_seed)

    layer = fin_layer(fin_net)
    final = layer.current_params
    fin_ref.update(initial_q=fin.params.q, initial_tau=fin.params.tau, final_q=final.q,
                   final_tau=final.tau)

    counts = {BASELINE: base_net.n_params(), FIN_ENN: fin_net.n_params(include_fin=False),
              "FIN": sum(p.data.size for p in layer.parameters())}
    if counts[BASELINE] < counts[FIN_ENN]:
        raise InvariantViolation(f"baseline has {counts[BASELINE]} parameters, fewer than the "
                                 f"FIN-ENN host's {counts[FIN_ENN]}")

    metrics = {BASELINE: _test_metrics(config, prep, base_net),
               FIN_ENN: _test_metrics(config, prep, fin_net)}
    metrics[BASELINE]["val_score"] = search.candidates[search.best_index].val_score
    metrics[FIN_ENN]["val_score"] = fin_val

    att = config.attachment
    modes = {"fin_mode": att.fin_mode, "attachment": att.mode, "shape": config.model.shape,
             "trainable_weights": att.trainable_weights, "trainable_q": att.trainable_q,
             "trainable_tau": att.trainable_tau,
             "validation": "tail of train" if config.task == "regression" else "stratified",
             "baseline": best_spec.name}
    report = ExperimentReport(
        name=config.name, task=config.task, seed=seed, config_hash=config_hash(config),
        modes=modes, metrics=_plain(metrics), param_counts=counts,
        history={BASELINE: base_hist, FIN_ENN: fin_hist.as_dict()},
        baseline_search=search.as_dict(), fin=_plain(fin_ref), data=_plain(prep.info),
        config=to_dict(config), cited=CITED.get(config.cited) if config.cited else None,
        versions={"tsallis_fin": __version__, "numpy": np.__version__,
                  "python": platform.python_version()})
    # round-trip so the in-memory report equals what a reader gets back from disk
    return ExperimentReport(**json.loads(json.dumps(_plain(report.as_dict()))))


def run_regression_experiment(config: ExperimentConfig, fin=None) -> ExperimentReport:
    if config.task != "regression":
        raise ConfigError("not a regression config")
    return run_experiment(config, fin)


def run_classification_experiment(config: ExperimentConfig, fin=None) -> ExperimentReport:
    if config.task != "classification":
        raise ConfigError("not a classification config")
    return run_experiment(config, fin)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
