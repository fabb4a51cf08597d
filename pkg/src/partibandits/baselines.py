"""Reference estimators: simple random sampling, proportional StRS and Thompson sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DomainError,
    GroupState,
    InfeasibleCoverageError,
    MeanEstimate,
    SamplerTrace,
    StratificationScheme,
    Stratum,
    estimate_from_states,
)
from .envs import BernoulliArms, LabelOracle, StratumExhaustedError, UnsupportedLabelError


def run_srs(oracle: LabelOracle, budget: int, rng) -> tuple[MeanEstimate, SamplerTrace]:
    """Sample mean of ``budget`` uniform draws without replacement."""
    if oracle.pool.size < budget:
        raise DomainError(f"pool of {oracle.pool.size} points is smaller than budget {budget}")
    whole = Stratum.whole()
    trace = SamplerTrace()
    total = 0.0
    for t in range(budget):
        i, x, y = oracle.sample_from_stratum(whole, rng)
        total += y
        trace.add(round=t, stage="srs", group=0, point=i, x=x, y=y)
    mean = total / budget
    return MeanEstimate(mean, ((0, budget, mean),), budget), trace


def proportional_allocation(weights, budget: int) -> list[int]:
    """Largest-remainder rounding of ``P_g * N`` with a floor of one per stratum.

    Remainder ties go to the lower index.
    """
    G = len(weights)
    if budget < G:
        raise InfeasibleCoverageError(f"budget {budget} cannot cover {G} strata")
    quotas = [w * budget for w in weights]
    alloc = [int(math.floor(round(q, 9))) for q in quotas]
    rema = [round(q - a, 9) for q, a in zip(quotas, alloc)]
    for g in sorted(range(G), key=lambda g: (-rema[g], g))[: budget - sum(alloc)]:
        alloc[g] += 1
    for g in range(G):
        while alloc[g] < 1:
            donors = [k for k in range(G) if alloc[k] > 1]
            donor = max(donors, key=lambda k: (alloc[k] - quotas[k], alloc[k], -k))
            alloc[donor] -= 1
            alloc[g] += 1
    return alloc


def run_strs(oracle: LabelOracle, scheme: StratificationScheme, budget: int, rng):
    alloc = proportional_allocation(scheme.weights, budget)
    states = [GroupState(s.weight) for s in scheme]
    trace = SamplerTrace()
    t = 0
    for s, n in zip(scheme, alloc):
        for _ in range(n):
            i, x, y = oracle.sample_from_stratum(s, rng)
            states[s.id].update(y)
            trace.add(round=t, stage="strs", group=s.id, point=i, x=x, y=y)
            t += 1
    trace.notes["allocation"] = alloc
    return estimate_from_states(states), trace


@dataclass(frozen=True)
class ThompsonConfig:
    """Beta-Bernoulli Thompson sampling.

    ``fixed-arms`` pulls Bernoulli arms with probabilities ``probs``;
    ``binned-covariate`` treats ``bins`` equal-width covariate bins over
    ``[lo, hi)`` as arms.
    """

    mode: str = "binned-covariate"
    bins: int = 5
    probs: tuple[float, ...] = (0.1, 0.5, 0.8)
    alpha: float = 1.0
    beta: float = 1.0
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.mode not in ("fixed-arms", "binned-covariate"):
            raise DomainError(f"unknown Thompson mode {self.mode!r}")
        if self.arms < 1:
            raise DomainError("Thompson sampling needs at least one arm")
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("Beta prior parameters must be positive")

    @property
    def arms(self) -> int:
        return len(self.probs) if self.mode == "fixed-arms" else self.bins

    def bin_scheme(self, weights=None) -> StratificationScheme:
        """Equal-width bins; the outer bins extend to +-inf."""
        K = self.bins
        cuts = [self.lo + (self.hi - self.lo) * k / K for k in range(1, K)]
        if weights is None:
            weights = [1.0 / K] * K
        return StratificationScheme.from_cuts(cuts, weights)


def run_thompson(env, config: ThompsonConfig, budget: int, rng, scheme: StratificationScheme | None = None):
    """Thompson sampling with a stratified read-out of the collected labels.

    ``env`` is a :class:`LabelOracle` (binned mode) or :class:`BernoulliArms`.
    The estimate is ``sum_g P_g * mean_g`` over the per-arm empirical means,
    with the prior mean standing in for arms never pulled. Fixed arms get
    ``P_g = 1/K``.

    The posterior draw is skipped when only one arm is available.
    """
    if config.mode == "fixed-arms":
        if not isinstance(env, BernoulliArms):
            env = BernoulliArms(config.probs)
        weights = [1.0 / len(env)] * len(env)
        K = len(env)
    else:
        if not env.pool.is_binary:
            raise UnsupportedLabelError("Thompson sampling needs binary labels")
        scheme = scheme or config.bin_scheme()
        weights = list(scheme.weights)
        K = len(scheme)
    succ = np.zeros(K)
    fail = np.zeros(K)
    live = np.ones(K, dtype=bool)
    trace = SamplerTrace()
    t = 0
    while t < budget:
        candidates = np.flatnonzero(live)
        if candidates.size == 0:
            break
        if candidates.size == 1:
            g, scores = int(candidates[0]), None
        else:
            theta = rng.beta(config.alpha + succ, config.beta + fail)
            theta[~live] = -np.inf
            g, scores = int(np.argmax(theta)), tuple(theta)
        if config.mode == "fixed-arms":
            i, x, y = -1, math.nan, env.pull(g, rng)
        else:
            try:
                i, x, y = env.sample_from_stratum(scheme[g], rng)
            except StratumExhaustedError:
                live[g] = False
                continue
        if y:
            succ[g] += 1
        else:
            fail[g] += 1
        trace.add(round=t, stage="thompson", group=g, point=i, x=x, y=y, scores=scores)
        t += 1
    pulls = succ + fail
    prior_mean = config.alpha / (config.alpha + config.beta)
    means = np.where(pulls > 0, succ / np.maximum(pulls, 1), prior_mean)
    value = float(sum(w * m for w, m in zip(weights, means)))
    per_group = tuple((g, int(pulls[g]), float(weights[g] * means[g])) for g in range(K))
    trace.notes["pulls"] = pulls.astype(int).tolist()
    return MeanEstimate(value, per_group, int(pulls.sum())), trace
