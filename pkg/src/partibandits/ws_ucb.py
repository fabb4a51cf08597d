"""WarmStart-UCB: round-robin warm start followed by variance-UCB stratum selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DomainError,
    GroupState,
    InfeasibleCoverageError,
    MeanEstimate,
    PartiBanditsError,
    SamplerTrace,
    StratificationScheme,
    estimate_from_states,
)
from .envs import LabelOracle, StratumExhaustedError


class AllStrataExhaustedError(PartiBanditsError):
    pass


def compute_cn(delta: float, c1: float, c2: float, budget: int, *, floor: bool = True) -> float:
    r"""Confidence width :math:`C_N(\delta)` of the variance UCB.

    .. math::

        C_N = 2\sqrt{2 c_1 L_2 L_{c}}
              + \frac{2\sqrt{c_1 L_2 (1 + c_2 + L_c)}}{(1-\delta)\sqrt{2 L_2}} \frac{1}{N^2}

    with :math:`L_2 = \log(2/\delta)` and :math:`L_c = \log(c_2/\delta)`.
    ``c2`` below ``delta`` is raised to ``delta``. The result is floored at 1
    unless ``floor=False``.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if not c1 > 0:
        raise DomainError(f"c1 must be positive, got {c1}")
    if not c2 > 0:
        raise DomainError(f"c2 must be positive, got {c2}")
    if budget < 1:
        raise DomainError(f"budget N must be at least 1, got {budget}")
    # c2 is an upper bound, so raising it to delta keeps it valid and log(c2/delta) >= 0
    c2 = max(c2, delta)
    l2 = math.log(2.0 / delta)
    lc = math.log(c2 / delta)
    first = 2.0 * math.sqrt(2.0 * c1 * l2 * lc)
    second = (
        2.0 * math.sqrt(c1 * l2 * (1.0 + c2 + lc))
        / ((1.0 - delta) * math.sqrt(2.0 * l2))
        / budget**2
    )
    raw = first + second
    return max(raw, 1.0) if floor else raw


def default_subgaussian(alphabet) -> float:
    """``max(1, (range/2)^2)`` for labels supported on ``alphabet``."""
    span = max(alphabet) - min(alphabet) if len(alphabet) else 1.0
    return max(1.0, (span / 2.0) ** 2)


@dataclass(frozen=True)
class UcbConstants:
    c1: float = 1.0
    c2: float = 1.0
    delta: float = 0.1
    budget: int = 1
    cn: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cn", compute_cn(self.delta, self.c1, self.c2, self.budget))


@dataclass(frozen=True)
class WarmStartPlan:
    tau: float
    budget: int
    groups: int

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise DomainError(f"tau must lie in [0, 1], got {self.tau}")
        if self.groups < 1:
            raise DomainError("need at least one group")

    @property
    def floor(self) -> int:
        """Per-group warm-start allocation ``floor(tau * N / G)``."""
        # rounding guards against 0.29 * 100 == 28.999...
        return int(math.floor(round(self.tau * self.budget / self.groups, 9)))


def ucb_score(state: GroupState, cn: float) -> float:
    """``(sigma_hat + C_N / sqrt(n)) / n``; ``inf`` while the std is undefined."""
    if state.n < 2:
        return math.inf
    return (state.std + cn / math.sqrt(state.n)) / state.n


def select_group(states, plan: WarmStartPlan, cn: float, exhausted=frozenset()):
    """Pick the next stratum.

    Returns ``(group, scores)``; ``scores`` is ``None`` during the warm phase.
    """
    live = [g for g in range(len(states)) if g not in exhausted]
    if not live:
        raise AllStrataExhaustedError("every stratum is exhausted")
    m = plan.floor
    warm = [g for g in live if states[g].n < m]
    if warm:
        # least-sampled first, lowest id on ties -> round robin
        return min(warm, key=lambda g: (states[g].n, g)), None
    scores = tuple(
        ucb_score(s, cn) if g not in exhausted else -math.inf for g, s in enumerate(states)
    )
    # infinite scores tie; the less-sampled group goes first so every stratum is covered
    best = max(live, key=lambda g: (scores[g], -states[g].n if scores[g] == math.inf else 0, -g))
    return best, scores


def run_warmstart_ucb(
    oracle: LabelOracle,
    scheme: StratificationScheme,
    budget: int,
    rng: np.random.Generator,
    *,
    delta: float = 0.1,
    tau: float = 0.5,
    consts: UcbConstants | None = None,
    stage: str = "ws-ucb",
    extra_spent: int = 0,
) -> tuple[MeanEstimate, SamplerTrace]:
    """Run WarmStart-UCB for ``budget`` rounds over ``scheme``.

    Exhausted strata leave the candidate set; their accumulated means are
    still used in the final aggregate.
    """
    G = len(scheme)
    if budget < G:
        raise InfeasibleCoverageError(f"budget {budget} cannot cover {G} strata")
    empty = [s.id for s in scheme if oracle.available(s) == 0]
    if empty:
        raise InfeasibleCoverageError(f"strata {empty} have no unlabeled pool points")
    if consts is None:
        c = default_subgaussian(oracle.pool.alphabet)
        consts = UcbConstants(c, c, delta, budget)
    plan = WarmStartPlan(tau, budget, G)
    states = [GroupState(s.weight) for s in scheme]
    exhausted: set[int] = set()
    trace = SamplerTrace()
    t = 0
    while t < budget:
        try:
            g, scores = select_group(states, plan, consts.cn, exhausted)
        except AllStrataExhaustedError:
            break
        try:
            i, x, y = oracle.sample_from_stratum(scheme[g], rng)
        except StratumExhaustedError:
            exhausted.add(g)
            continue
        states[g].update(y)
        trace.add(round=t, stage=stage, group=g, point=i, x=x, y=y, scores=scores)
        t += 1
    trace.notes["cn"] = consts.cn
    trace.notes["exhausted"] = sorted(exhausted)
    return estimate_from_states(states, extra_spent), trace
