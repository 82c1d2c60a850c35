"""Command-line entry point.

    tsallis-fin fin train --out DIR [--config F] [--set k=v] [--seed N] [--max-epochs N ...]
    tsallis-fin fin eval --model F [--fresh N] [--signal-length N] [--seed N] [--out DIR]
    tsallis-fin exp run --config F --out DIR [--set k=v] [--seed N]
    tsallis-fin report REPORT.json ... [--cited KEY] [--out DIR]

Settings resolve as command line over config file over defaults. Files are
only written inside ``--out``. Environment variables are not consulted.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import (ConfigError, DomainError, InvariantViolation, ModelFileError, SchemaError,
                     ShapeError, TrainingFailure)
from .fin import (FinTrainConfig, SyntheticDatasetSpec, evaluate_fin, generate_synthetic,
                  label_with_oracle, load_fin, provenance_split, save_fin, train_fin)
from .entropy import TsallisParams
from .harness.config import apply_overrides, from_dict, parse_value, read_json, to_dict
from .harness.experiment import ExperimentConfig, ExperimentReport, run_experiment
from .harness.report import render_table

log = logging.getLogger("tsallis_fin")

HANDLED = (ConfigError, DomainError, InvariantViolation, ModelFileError, SchemaError, ShapeError,
           TrainingFailure, FileNotFoundError, NotADirectoryError)


@dataclass
class FinRunConfig:
    train: FinTrainConfig = field(default_factory=FinTrainConfig)
    dataset: SyntheticDatasetSpec = field(default_factory=SyntheticDatasetSpec)
    q: float = 1.5
    tau: float = 1.0


def _flag_fields():
    """(section, field) pairs exposed as --kebab-case flags on ``fin train``."""
    out = [("train", f) for f in dataclasses.fields(FinTrainConfig) if f.name != "seed"]
    out += [("dataset", f) for f in dataclasses.fields(SyntheticDatasetSpec) if f.name != "seed"]
    return out


def _flag_value(raw: str, f):
    if "tuple" in str(f.type):
        return [int(v) for v in raw.replace(" ", "").strip("[]()").split(",") if v]
    return parse_value(raw.lower() if raw in ("True", "False") else raw)


def _resolve(cls, args, extra=()):
    data = read_json(args.config) if getattr(args, "config", None) else {}
    data = apply_overrides(data, list(getattr(args, "set", None) or []) + list(extra))
    return from_dict(cls, data)


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_fin_train(args) -> int:
    extra = []
    for section, f in _flag_fields():
        raw = getattr(args, f"flag_{section}_{f.name}")
        if raw is not None:
            extra.append(f"{section}.{f.name}={json.dumps(_flag_value(raw, f))}")
    if args.seed is not None:
        extra += [f"train.seed={args.seed}", f"dataset.seed={args.seed}"]
    config = _resolve(FinRunConfig, args, extra)
    out = _out_dir(args.out)
    model, hist = train_fin(config.train, config.dataset, TsallisParams(config.q, config.tau))
    _write_json(out / "config.json", {"command": "fin train", "version": __version__,
                                      "config": to_dict(config)})
    save_fin(model, out / "model.fin")
    _write_json(out / "history.json", hist.as_dict())
    _write_json(out / "provenance.json", model.provenance)
    prov = model.provenance
    print(f"wrote {out / 'model.fin'}: val MAE {prov['final_val_mae']:.6g} "
          f"(target std {prov['target_std']:.6g}, constant predictor "
          f"{prov['constant_predictor_mae']:.6g}) after {prov['epochs_run']} epochs")
    return 0


def cmd_fin_eval(args) -> int:
    model = load_fin(args.model)
    if args.fresh:
        length = args.signal_length or model.input_length
        spec = SyntheticDatasetSpec(args.fresh, length, args.seed if args.seed is not None else 0)
        signals = generate_synthetic(spec)
        targets = label_with_oracle(signals, model.params)
        source = {"split": "fresh", "dataset": dataclasses.asdict(spec)}
    else:
        signals, targets = provenance_split(model, args.split)
        source = {"split": args.split}
    stats = evaluate_fin(model, signals, targets)
    result = {**source, **stats, "model": str(args.model), "n": int(len(targets))}
    print(f"mae {stats['mae']:.12g}  max_abs_err {stats['max_abs_err']:.12g}  "
          f"target_std {stats['target_std']:.6g}  n {len(targets)}")
    if args.out:
        out = _out_dir(args.out)
        _write_json(out / "config.json", {"command": "fin eval", "version": __version__,
                                          "model": str(args.model), "split": args.split,
                                          "fresh": args.fresh, "seed": args.seed,
                                          "signal_length": args.signal_length})
        _write_json(out / "eval.json", result)
    return 0


def cmd_experiment(args) -> int:
    extra = [f"seed={args.seed}"] if args.seed is not None else []
    config = _resolve(ExperimentConfig, args, extra)
    out = _out_dir(args.out)
    _write_json(out / "config.json", {"command": "exp run", "version": __version__,
                                      "config": to_dict(config)})
    report = run_experiment(config)
    report.write(out / "report.json")
    table = render_table([report])
    (out / "report.md").write_text(table)
    print(table, end="")
    return 0


def cmd_report(args) -> int:
    if not args.reports:
        raise ConfigError("no report files given")
    reports = [ExperimentReport.read(p) for p in args.reports]
    table = render_table(reports, extra_cited=args.cited or ())
    print(table, end="")
    if args.out:
        out = _out_dir(args.out)
        (out / "table.md").write_text(table)
        _write_json(out / "config.json", {"command": "report", "version": __version__,
                                          "reports": [str(p) for p in args.reports],
                                          "cited": list(args.cited or [])})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsallis-fin", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="group", required=True)

    def common(p, out_required):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted-path override, repeatable")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", required=out_required, help="output directory")

    fin = sub.add_parser("fin", help="train or evaluate a FIN").add_subparsers(
        dest="command", required=True)
    train = fin.add_parser("train", help="fit a FIN to oracle-labelled synthetic signals")
    common(train, True)
    for section, f in _flag_fields():
        train.add_argument("--" + f.name.replace("_", "-"), dest=f"flag_{section}_{f.name}",
                           metavar="VALUE", help=f"{section}.{f.name}")
    train.set_defaults(func=cmd_fin_train)

    ev = fin.add_parser("eval", help="measure a saved FIN against the oracle")
    ev.add_argument("--model", required=True)
    ev.add_argument("--split", choices=("val", "train"), default="val",
                    help="re-derive this split from the model's provenance")
    ev.add_argument("--fresh", type=int, metavar="N", help="evaluate on N fresh signals instead")
    ev.add_argument("--signal-length", type=int)
    ev.add_argument("--seed", type=int)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_fin_eval)

    exp = sub.add_parser("exp", help="run experiments").add_subparsers(dest="command",
                                                                        required=True)
    run = exp.add_parser("run", help="FIN-ENN versus baseline on one config and seed")
    common(run, True)
    run.set_defaults(func=cmd_experiment)

    rep = sub.add_parser("report", help="merge reports into a comparison table")
    rep.add_argument("reports", nargs="*")
    rep.add_argument("--cited", action="append", metavar="KEY",
                     help="append published rows (exp1-period1, exp1-period2, exp2, exp3)")
    rep.add_argument("--out")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except HANDLED as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
