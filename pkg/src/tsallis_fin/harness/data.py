"""Tabular ingestion, sliding windows and leakage-free splits."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DomainError, SchemaError

log = logging.getLogger(__name__)

MISSING = {"", "na", "nan", "null", "none", "?"}


@dataclass(frozen=True)
class TableSchema:
    features: tuple[str, ...]
    target: str
    time: str = "date"
    delimiter: str = ","
    max_bad_fraction: float = 0.05
    start: str | None = None
    end: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if not self.features:
            raise ConfigError("schema needs at least one feature column")
        if not 0.0 <= self.max_bad_fraction < 1.0:
            raise ConfigError("max_bad_fraction must lie in [0, 1)")


@dataclass
class IngestionReport:
    rows_read: int = 0
    rows_kept: int = 0
    rows_with_gaps: int = 0
    rows_unparseable: int = 0
    rows_duplicate_time: int = 0
    rows_out_of_range: int = 0

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class TimeSeriesTable:
    """Rows in strictly increasing time order with complete numeric columns."""

    time: np.ndarray
    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    target_name: str
    report: IngestionReport = field(default_factory=IngestionReport)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        n = len(self.time)
        if self.features.shape != (n, len(self.feature_names)) or self.target.shape != (n,):
            raise SchemaError("column lengths disagree with the time index")
        if n > 1 and not np.all(self.time[1:] > self.time[:-1]):
            raise SchemaError("time index must be strictly increasing")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.target))):
            raise SchemaError("table contains non-finite values")

    def __len__(self):
        return len(self.time)


def _parse_time(raw: str):
    raw = raw.strip()
    try:
        return float(raw)
    except ValueError:
        return np.datetime64(raw, "s")


def _time_array(values: list):
    if all(isinstance(v, float) for v in values):
        return np.array(values, dtype=np.float64)
    if any(isinstance(v, float) for v in values):
        raise SchemaError("time column mixes numbers and dates")
    return np.array(values, dtype="datetime64[s]")


def load_table(path, schema: TableSchema) -> TimeSeriesTable:
    """Read a delimited file into a sorted, gap-free table.

    Rows with an empty or NA cell in a used column are dropped and counted.
    Rows with non-numeric text in a used column count as unparseable; more
    than ``schema.max_bad_fraction`` of those is an error. Duplicate
    timestamps keep the first occurrence in file order.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    report = IngestionReport()
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh, delimiter=schema.delimiter)
        header = reader.fieldnames or []
        wanted = [schema.time, *schema.features, schema.target]
        missing = [c for c in dict.fromkeys(wanted) if c not in header]
        if missing:
            raise SchemaError(f"{path.name}: missing column(s) {missing}; header has {header}")
        times, rows = [], []
        for rec in reader:
            report.rows_read += 1
            cells = [(rec.get(c) or "").strip() for c in wanted]
            if any(c.lower() in MISSING for c in cells):
                report.rows_with_gaps += 1
                continue
            try:
                t = _parse_time(cells[0])
                values = [float(c) for c in cells[1:]]
            except ValueError:
                report.rows_unparseable += 1
                continue
            if not all(math.isfinite(v) for v in values):
                report.rows_with_gaps += 1
                continue
            times.append(t)
            rows.append(values)

    if report.rows_read and report.rows_unparseable > schema.max_bad_fraction * report.rows_read:
        raise SchemaError(f"{path.name}: {report.rows_unparseable} of {report.rows_read} rows "
                          f"could not be parsed")
    if not rows:
        raise SchemaError(f"{path.name}: no usable rows")

    time = _time_array(times)
    values = np.array(rows, dtype=np.float64)
    order = np.argsort(time, kind="stable")
    time, values = time[order], values[order]
    keep = np.ones(len(time), dtype=bool)
    keep[1:] = time[1:] != time[:-1]
    report.rows_duplicate_time = int((~keep).sum())
    if schema.start is not None:
        keep &= time >= _parse_bound(schema.start, time)
    if schema.end is not None:
        keep &= time <= _parse_bound(schema.end, time)
    report.rows_out_of_range = int(len(time) - keep.sum() - report.rows_duplicate_time)
    time, values = time[keep], values[keep]
    if len(time) == 0:
        raise SchemaError(f"{path.name}: no rows left after filtering")
    report.rows_kept = len(time)
    log.info("loaded %s: %s", path.name, report.as_dict())
    return TimeSeriesTable(time, values[:, :-1], values[:, -1], schema.features, schema.target,
                           report)


def _parse_bound(raw, time):
    bound = _parse_time(str(raw))
    if isinstance(bound, float) != (time.dtype.kind == "f"):
        raise ConfigError(f"date bound {raw!r} does not match the time column type")
    return bound


@dataclass
class WindowedSamples:
    """``windows[i]`` holds rows ``[i, i + window)``; ``targets[i]`` the value ``horizon`` rows later."""

    windows: np.ndarray
    targets: np.ndarray
    window_end: np.ndarray
    target_time: np.ndarray

    def __len__(self):
        return len(self.targets)

    def take(self, idx) -> WindowedSamples:
        return WindowedSamples(self.windows[idx], self.targets[idx], self.window_end[idx],
                               self.target_time[idx])


def make_windows(table: TimeSeriesTable, window: int = 7, horizon: int = 1) -> WindowedSamples:
    if window < 1 or horizon < 1:
        raise DomainError("window and horizon must be positive")
    n = len(table) - window - horizon + 1
    if n < 1:
        raise DomainError(f"table of {len(table)} rows is too short for window {window} "
                          f"and horizon {horizon}")
    starts = np.arange(n)
    idx = starts[:, None] + np.arange(window)
    target_rows = starts + window + horizon - 1
    return WindowedSamples(windows=table.features[idx], targets=table.target[target_rows],
                           window_end=table.time[starts + window - 1],
                           target_time=table.time[target_rows])


def split_point(n: int, frac: float) -> int:
    if not 0.0 < frac < 1.0:
        raise DomainError(f"split fraction must lie in (0, 1), got {frac}")
    # the epsilon keeps products like 0.29 * 100 from flooring one short
    cut = math.floor(frac * n + 1e-9)
    if cut < 1 or cut >= n:
        raise DomainError(f"splitting {n} samples at {frac} leaves an empty side")
    return cut


def chrono_split(samples: WindowedSamples, train_frac: float = 0.85):
    """First floor(frac * N) samples train, the rest test; order is preserved."""
    cut = split_point(len(samples), train_frac)
    return samples.take(slice(0, cut)), samples.take(slice(cut, None))


def stratified_split(labels, fractions, seed) -> list[np.ndarray]:
    """Split indices into disjoint parts with per-class proportions ``fractions``.

    ``fractions`` sums to 1; each class is shuffled and cut by the floor rule,
    with the remainder going to the first part. Returned index arrays are sorted.
    """
    labels = np.asarray(labels)
    fractions = np.asarray(fractions, dtype=np.float64)
    if np.any(fractions <= 0) or abs(fractions.sum() - 1.0) > 1e-9:
        raise DomainError(f"fractions must be positive and sum to 1, got {fractions.tolist()}")
    rng = np.random.default_rng(seed)
    parts = [[] for _ in fractions]
    for cls in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        counts = [math.floor(f * len(idx) + 1e-9) for f in fractions[1:]]
        bounds = np.cumsum([len(idx) - sum(counts)] + counts)
        for part, chunk in zip(parts, np.split(idx, bounds[:-1])):
            part.append(chunk)
    out = [np.sort(np.concatenate(p)) for p in parts]
    if any(len(p) == 0 for p in out):
        raise DomainError("stratified split leaves an empty part")
    return out


@dataclass
class FeatureTable:
    """Pre-extracted per-sample features with a categorical label."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    report: IngestionReport = field(default_factory=IngestionReport)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels).astype(np.int64)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise SchemaError("features must be [N, D] with one label per row")
        if not np.all(np.isfinite(self.features)):
            raise SchemaError("feature table contains non-finite values")


def load_feature_table(path, label: str, features=None, delimiter=",") -> FeatureTable:
    """Read a delimited feature table; every non-label column is a feature by default.

    Labels may be integers or strings; strings are mapped to ids in sorted order.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    report = IngestionReport()
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        header = reader.fieldnames or []
        if label not in header:
            raise SchemaError(f"{path.name}: missing label column {label!r}")
        names = tuple(features) if features else tuple(c for c in header if c != label)
        missing = [c for c in names if c not in header]
        if missing:
            raise SchemaError(f"{path.name}: missing column(s) {missing}")
        xs, ys = [], []
        for rec in reader:
            report.rows_read += 1
            cells = [(rec.get(c) or "").strip() for c in names]
            y = (rec.get(label) or "").strip()
            if y.lower() in MISSING or any(c.lower() in MISSING for c in cells):
                report.rows_with_gaps += 1
                continue
            try:
                xs.append([float(c) for c in cells])
            except ValueError:
                report.rows_unparseable += 1
                continue
            ys.append(y)
    if not xs:
        raise SchemaError(f"{path.name}: no usable rows")
    try:
        labels = np.array([int(y) for y in ys])
    except ValueError:
        classes = sorted(set(ys))
        labels = np.array([classes.index(y) for y in ys])
    report.rows_kept = len(xs)
    return FeatureTable(np.array(xs), labels, names, report)
