"""Capacity-constrained selection among baseline topologies."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

from ..engine.spec import NetworkSpec, count_params
from ..errors import ConfigError

log = logging.getLogger(__name__)

MAX_CANDIDATES = 10


@dataclass
class CandidateResult:
    index: int
    name: str
    n_params: int
    val_score: float
    history: dict = field(default_factory=dict)


@dataclass
class SearchReport:
    min_params: int
    candidates: list[CandidateResult]
    best_index: int

    def as_dict(self):
        return {"min_params": self.min_params, "best_index": self.best_index,
                "candidates": [{"index": c.index, "name": c.name, "n_params": c.n_params,
                                "val_score": c.val_score} for c in self.candidates]}


def check_capacity(candidates, min_params: int) -> list[int]:
    counts = [count_params(spec, include_fin=False) for spec in candidates]
    small = [(i, n) for i, n in enumerate(counts) if n < min_params]
    if small:
        raise ConfigError(f"baseline candidate(s) {small} have fewer parameters than the "
                          f"FIN-embedded network without its FIN ({min_params})")
    return counts


def baseline_search(candidates: list[NetworkSpec], data, seed: int, *, min_params: int,
                    trainer: Callable) -> tuple[NetworkSpec, object, SearchReport]:
    """Train every candidate identically and keep the best on validation.

    ``trainer(spec, data, seed)`` returns ``(network, history, val_score)``
    with lower scores better. Ties go to fewer parameters, then the earlier
    candidate. Returns the winning spec, its trained network and a report.
    """
    if not 1 <= len(candidates) <= MAX_CANDIDATES:
        raise ConfigError(f"baseline search takes 1 to {MAX_CANDIDATES} candidates, "
                          f"got {len(candidates)}")
    counts = check_capacity(candidates, min_params)
    results, nets = [], []
    for i, (spec, n) in enumerate(zip(candidates, counts)):
        spec = replace(spec, seed=seed)
        net, hist, score = trainer(spec, data, seed)
        results.append(CandidateResult(i, spec.name or f"candidate-{i}", n, float(score),
                                       hist.as_dict() if hasattr(hist, "as_dict") else {}))
        nets.append((spec, net))
        log.info("baseline candidate %d (%d params): val score %.6g", i, n, score)
    best = min(results, key=lambda r: (r.val_score, r.n_params, r.index))
    spec, net = nets[best.index]
    return spec, net, SearchReport(min_params, results, best.index)
