"""Check whether the FIN-ENN classifier actually uses an entropy pathway.

On the constructed classification task the label is the entropy of the
hidden uniform vector s. This script trains the exp3 FIN-ENN from the
shipped config and reports

* the correlation between the entropy the FIN reads from the 32-unit latent
  and the generating entropy, before and after training;
* the weight the head puts on the FIN slot and the final (q, tau);
* test accuracy of a FIN-only head (all latent head weights pinned to 0).

    python3 scripts/classification_mechanism.py --seed 0
"""
import argparse
from pathlib import Path

import numpy as np

from tsallis_fin.embedding import attach_fin, fin_layer
from tsallis_fin.engine import build_network, fit
from tsallis_fin.engine.losses import bce_with_logits
from tsallis_fin.engine.tensor import no_grad
from tsallis_fin.entropy import TsallisParams, normalize_input, tsallis_entropy
from tsallis_fin.fin import FinModel
from tsallis_fin.harness import ExperimentConfig, load_config, stratified_split
from tsallis_fin.harness.models import host_spec
from tsallis_fin.harness.tasks import entropy_classification_table

ROOT = Path(__file__).resolve().parents[1]


def generating_entropy(task, seed):
    # same first draw as the task generator
    s = np.random.default_rng(seed).random((task.n_samples, task.latent_dim))
    return tsallis_entropy(normalize_input(s), TsallisParams(task.q, task.tau))


def latent_entropy(net, x, params):
    with no_grad():
        z = x
        for layer in net.layers:
            if layer is fin_layer(net):
                break
            z = layer(z)
    return tsallis_entropy(normalize_input(z.data), params)


def accuracy(net, x, y):
    with no_grad():
        logits = net(x, logits=True).data
    return 100.0 * float(np.mean((logits > 0) == y))


def train(config, fin, x, y, parts, fin_only=False):
    tr, va, te = parts
    spec = attach_fin(host_spec("exp3", input_shape=(x.shape[1],), seed=config.seed), fin,
                      config.attachment)
    net = build_network(spec)
    if fin_only:
        head = net.layers[-1]
        width = head.weight.data.shape[1] - 1
        head.weight.data[:, :width] = 0.0
        head.weight.constraint = lambda w: np.concatenate(
            [np.zeros_like(w[:, :width]), w[:, width:]], axis=1)
    before = latent_entropy(net, x[te], fin.params)
    fit(net, bce_with_logits, x[tr], y[tr], x[va], y[va], config.train,
        np.random.default_rng(config.seed), logits=True)
    return net, before


def main(seed: int):
    config = load_config(ExperimentConfig, ROOT / "configs" / "entropy_classification.json",
                         [f"seed={seed}"])
    task = config.dataset.classification
    table = entropy_classification_table(task, seed)
    h = generating_entropy(task, seed)
    t, v = config.train_frac, config.val_frac
    parts = stratified_split(table.labels, [t * (1 - v), t * v, 1 - t], seed)
    tr = parts[0]
    x = (table.features - table.features[tr].mean(0)) / table.features[tr].std(0)
    y = table.labels.astype(np.float64)[:, None]
    te = parts[2]
    fin = FinModel.exact_oracle(32, TsallisParams(config.fin.q, config.fin.tau))

    net, before = train(config, fin, x, y, parts)
    after = latent_entropy(net, x[te], fin_layer(net).current_params)
    corr = [np.corrcoef(e, h[te])[0, 1] for e in (before, after)]
    print(f"corr(latent entropy, generating entropy): before {corr[0]:+.3f}, after {corr[1]:+.3f}")
    print(f"head weight on FIN slot {net.layers[-1].weight.data[0, -1]:+.4f}, "
          f"final {fin_layer(net).current_params}")
    print(f"FIN-ENN test accuracy {accuracy(net, x[te], y[te]):.1f}")
    only, _ = train(config, fin, x, y, parts, fin_only=True)
    print(f"FIN-only head test accuracy {accuracy(only, x[te], y[te]):.1f}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--seed", type=int, default=0)
    main(parser.parse_args().seed)
