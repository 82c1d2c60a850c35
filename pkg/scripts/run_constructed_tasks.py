"""Run the constructed entropy regression and classification tasks over several seeds.

The regression runs share one length-7 imitation FIN trained up front. Each
seed writes a report; a merged Markdown table with per-task medians goes to
``OUT/table.md``.

    python3 scripts/run_constructed_tasks.py --out runs/constructed --seeds 5
"""
import argparse
import logging
from pathlib import Path

import numpy as np

from tsallis_fin.fin import save_fin
from tsallis_fin.harness import ExperimentConfig, load_config, render_table, run_experiment
from tsallis_fin.harness.experiment import resolve_fin

ROOT = Path(__file__).resolve().parents[1]
TASKS = {"regression": ("entropy_regression.json", "RMSE"),
         "classification": ("entropy_classification.json", "Accuracy")}


def run_task(task: str, seeds, out: Path) -> list:
    config_name, metric = TASKS[task]
    path = ROOT / "configs" / config_name
    base = load_config(ExperimentConfig, path)
    fin = None
    if base.attachment.fin_mode == "imitation":
        fin, _ = resolve_fin(base, base.window)
        save_fin(fin, out / task / "shared.fin")
    reports = []
    for seed in seeds:
        report = run_experiment(load_config(ExperimentConfig, path, [f"seed={seed}"]), fin=fin)
        report.write(out / task / f"seed{seed}.json")
        m = report.metrics
        print(f"{task} seed {seed}: FIN-ENN {metric} {m['FIN-ENN'][metric]:.3f}, "
              f"NN-Baseline {m['NN-Baseline'][metric]:.3f}", flush=True)
        reports.append(report)
    med = {k: float(np.median([r.metrics[k][metric] for r in reports]))
           for k in ("FIN-ENN", "NN-Baseline")}
    print(f"{task} median {metric}: FIN-ENN {med['FIN-ENN']:.3f}, "
          f"NN-Baseline {med['NN-Baseline']:.3f}")
    return reports


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--out", default="runs/constructed")
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--task", choices=("regression", "classification", "both"), default="both")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    out = Path(args.out)
    tasks = list(TASKS) if args.task == "both" else [args.task]
    for task in tasks:
        (out / task).mkdir(parents=True, exist_ok=True)
    reports = [r for task in tasks for r in run_task(task, range(args.seeds), out)]
    table = render_table(reports)
    (out / "table.md").write_text(table)
    print(table, end="")
