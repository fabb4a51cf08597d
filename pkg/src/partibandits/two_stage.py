"""PartiBandits: learn a stratification with half the budget, then run WarmStart-UCB on it."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import DomainError, MeanEstimate, SamplerTrace, StratificationScheme, Stratum
from .envs import LabelOracle
from .stage1 import induced_partition, plugin_subroutine
from .ws_ucb import UcbConstants, default_subgaussian, run_warmstart_ucb

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartiBanditsConfig:
    budget: int
    subroutine: str = "a2-threshold"
    delta: float = 0.1
    tau: float = 0.5
    c1: float | None = None
    c2: float | None = None
    stage1_budget: int | None = None

    def __post_init__(self):
        s1, s2 = self.split
        if s1 < 1 or s2 < 1:
            raise DomainError(f"budget split ({s1}, {s2}) must give each stage at least one label")
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 <= self.tau <= 1.0:
            raise DomainError(f"tau must lie in [0, 1], got {self.tau}")

    @property
    def split(self) -> tuple[int, int]:
        s1 = self.budget // 2 if self.stage1_budget is None else self.stage1_budget
        return s1, self.budget - s1


def coarsen(scheme: StratificationScheme, max_groups: int, nonempty=None) -> StratificationScheme:
    """Merge strata until at most ``max_groups`` remain.

    The smallest-weight stratum is merged into an adjacent one (the lighter
    neighbour when there are two). Strata flagged ``False`` in ``nonempty``
    are merged first, whatever their weight.
    """
    cells = [[list(s.intervals), s.weight, True if nonempty is None else bool(nonempty[s.id])]
             for s in scheme]

    def adjacent(a, b):
        return any(q == c or d == p for p, q in a[0] for c, d in b[0])

    while len(cells) > 1 and (len(cells) > max_groups or not all(c[2] for c in cells)):
        empties = [i for i, c in enumerate(cells) if not c[2]]
        pool = empties or range(len(cells))
        i = min(pool, key=lambda k: (cells[k][1], k))
        nbrs = [j for j in range(len(cells)) if j != i and adjacent(cells[i], cells[j])]
        if not nbrs:
            nbrs = [j for j in range(len(cells)) if j != i]
        j = min(nbrs, key=lambda k: (cells[k][1], k))
        cells[j][0].extend(cells[i][0])
        cells[j][1] += cells[i][1]
        cells[j][2] = cells[j][2] or cells[i][2]
        del cells[i]
    strata = tuple(Stratum(g, tuple(c[0]), c[1]) for g, c in enumerate(cells))
    return StratificationScheme(strata, scheme.provenance)


def run_partibandits(
    oracle: LabelOracle, config: PartiBanditsConfig, rng: np.random.Generator
) -> tuple[MeanEstimate, SamplerTrace]:
    """Two-stage estimate on one oracle; Stage-2 only draws points Stage 1 left unlabeled."""
    s1_budget, s2_budget = config.split
    learner = plugin_subroutine(config.subroutine)
    result = learner(oracle, s1_budget, config.delta, rng)
    scheme = induced_partition(result.classifier, oracle.pool)

    nonempty = [oracle.available(s) > 0 for s in scheme]
    if len(scheme) > s2_budget or not all(nonempty):
        before = len(scheme)
        scheme = coarsen(scheme, s2_budget, nonempty)
        log.info("coarsened learned scheme from %d to %d strata", before, len(scheme))

    consts = None
    if config.c1 is not None or config.c2 is not None:
        c = default_subgaussian(oracle.pool.alphabet)
        consts = UcbConstants(config.c1 or c, config.c2 or c, config.delta, s2_budget)
    estimate, stage2 = run_warmstart_ucb(
        oracle, scheme, s2_budget, rng,
        delta=config.delta, tau=config.tau, consts=consts, extra_spent=result.labels_spent,
    )
    trace = SamplerTrace(list(result.trace.records), dict(stage2.notes))
    trace.extend(stage2)
    trace.notes.update(classifier=result.classifier, scheme=scheme, stage1=result.diagnostics)
    return estimate, trace
