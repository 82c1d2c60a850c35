"""Merge experiment reports into comparison tables."""
from __future__ import annotations

from collections import OrderedDict

import numpy as np

from ..errors import ConfigError
from .reference import CITED

COLUMNS = {"regression": ["RMSE", "MAPE"],
           "classification": ["Accuracy", "Specificity", "Sensitivity"]}


def _fmt(value, column):
    if value is None:
        return "n/a"
    text = f"{value:.2f}"
    return text + "%" if column == "MAPE" else text


def _median(values):
    values = [v for v in values if v is not None]
    return float(np.median(values)) if values else None


def comparison_rows(reports) -> dict:
    """{task: [(label, model, {column: value}), ...]} including per-name medians."""
    tables = OrderedDict()
    for task in ("regression", "classification"):
        group = [r for r in reports if r.task == task]
        if not group:
            continue
        cols = COLUMNS[task]
        rows = []
        by_name = OrderedDict()
        for r in group:
            by_name.setdefault(r.name, []).append(r)
        for name, runs in by_name.items():
            models = list(runs[0].metrics)
            for r in runs:
                for model in models:
                    rows.append((f"{name} seed {r.seed}", model,
                                 {c: r.metrics[model].get(c) for c in cols}))
            if len(runs) > 1:
                for model in models:
                    rows.append((f"{name} median of {len(runs)}", model,
                                 {c: _median([r.metrics[model].get(c) for r in runs])
                                  for c in cols}))
        tables[task] = rows
    return tables


def cited_rows(keys) -> list:
    rows = []
    for key in keys:
        if key not in CITED:
            raise ConfigError(f"unknown cited table {key!r}")
        for model, values in CITED[key]["rows"]:
            rows.append((key, f"{model} [cited]", dict(values)))
    return rows


def render_table(reports, extra_cited=()) -> str:
    if not reports:
        raise ConfigError("no reports to render")
    blocks = []
    for task, rows in comparison_rows(reports).items():
        cols = COLUMNS[task]
        keys = list(OrderedDict.fromkeys(
            [r.config.get("cited") for r in reports if r.task == task and r.config.get("cited")]
            + [k for k in extra_cited if _cited_task(k) == task]))
        rows = rows + cited_rows(keys)
        header = ["Run", "Model", *cols]
        body = [[run, model, *(_fmt(vals.get(c), c) for c in cols)] for run, model, vals in rows]
        widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
        rule = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
        blocks.append("\n".join([_line(header, widths), rule,
                                 *(_line(r, widths) for r in body)]))
    return "\n\n".join(blocks) + "\n"


def _line(cells, widths):
    return "| " + " | ".join(str(c).ljust(w) for c, w in zip(cells, widths)) + " |"


def _cited_task(key):
    return "regression" if key.startswith("exp1") else "classification"
