"""Train the default length-32 FIN and evaluate it on its validation split and fresh signals.

    python3 scripts/train_default_fin.py --out runs/fin_default
"""
import argparse
import sys
from pathlib import Path

from tsallis_fin.cli import main

ROOT = Path(__file__).resolve().parents[1]


def run(out: Path, seed: int) -> int:
    model = out / "model.fin"
    steps = [
        ["fin", "train", "--config", str(ROOT / "configs" / "fin_default.json"),
         "--seed", str(seed), "--out", str(out)],
        ["fin", "eval", "--model", str(model), "--out", str(out / "eval_val")],
        ["fin", "eval", "--model", str(model), "--fresh", "1000", "--seed", "404",
         "--out", str(out / "eval_fresh")],
    ]
    for argv in steps:
        code = main(argv)
        if code:
            return code
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--out", default="runs/fin_default")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sys.exit(run(Path(args.out), args.seed))
