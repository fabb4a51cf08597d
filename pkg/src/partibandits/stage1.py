"""Stage-1 active learners that produce a classifier whose preimages become strata.

The shipped learner is a disagreement-based (A^2-style) elimination scheme
over 1-D thresholds ``h_t(x) = 1{x >= t}``. Any other learner can be plugged
in through :func:`register_subroutine`, as long as it follows the signature
``(oracle, budget, delta, rng) -> SubroutineResult``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .core import (
    PartiBanditsError,
    SamplerTrace,
    StratificationScheme,
    Stratum,
    intersect_intervals,
)
from .envs import LabeledPool, LabelOracle, StratumExhaustedError

EPS_FLOOR = 1e-6
INF = math.inf


class RegistryError(PartiBanditsError, KeyError):
    pass


@dataclass(frozen=True)
class Classifier:
    """A finite-image classifier on a 1-D covariate.

    kinds
        ``constant``   -- outputs ``value`` everywhere
        ``threshold``  -- ``1{x >= threshold}``
        ``abstention`` -- threshold output plus ``eps`` on ``region = [a, b)``
    """

    kind: str
    threshold: float = 0.5
    region: tuple[float, float] | None = None
    eps: float = 0.0
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "threshold", "abstention"):
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        if self.kind == "abstention" and not (self.eps > 0 and self.region is not None):
            raise ValueError("an abstention classifier needs eps > 0 and a region")

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape, self.value)
        out = (x >= self.threshold).astype(float)
        if self.kind == "abstention":
            a, b = self.region
            out = out + self.eps * ((x >= a) & (x < b))
        return out

    def preimages(self) -> list[tuple[float, tuple]]:
        """``(output value, intervals)`` for every value in the image, in value order."""
        if self.kind == "constant":
            return [(self.value, ((-INF, INF),))]
        t = self.threshold
        zero, one = ((-INF, t),), ((t, INF),)
        if self.kind == "threshold":
            return [(0.0, zero), (1.0, one)]
        a, b = self.region
        inside, outside = ((a, b),), ((-INF, a), (b, INF))
        cells = [
            (0.0, intersect_intervals(zero, outside)),
            (self.eps, intersect_intervals(zero, inside)),
            (1.0, intersect_intervals(one, outside)),
            (1.0 + self.eps, intersect_intervals(one, inside)),
        ]
        return [(v, ivs) for v, ivs in cells if ivs]

    @property
    def image(self) -> tuple[float, ...]:
        return tuple(v for v, _ in self.preimages())


@dataclass
class SubroutineResult:
    classifier: Classifier
    region: tuple[float, float] | None
    labels_spent: int
    diagnostics: dict = field(default_factory=dict)
    trace: SamplerTrace = field(default_factory=SamplerTrace)


def _segment_errors(ys: np.ndarray) -> np.ndarray:
    """Errors of a threshold placed in each of the ``b + 1`` gaps of sorted labels."""
    ones = np.concatenate(([0], np.cumsum(ys)))
    zeros = np.concatenate(([0], np.cumsum(1.0 - ys)))
    return ones + (zeros[-1] - zeros)


def _sign_test_survivors(xs: np.ndarray, ys: np.ndarray, level: float) -> np.ndarray:
    """Which threshold segments survive elimination.

    Segment ``j`` holds thresholds between the ``j``-th and ``j+1``-th
    sorted point. A segment is eliminated when, against every empirical
    error minimiser, a one-sided sign test on the points where the two
    thresholds disagree rejects at ``level``.
    """
    b = xs.size
    errors = _segment_errors(ys)
    leaders = np.flatnonzero(errors == errors.min())
    j = np.arange(b + 1)
    keep = np.zeros(b + 1, dtype=bool)
    for lead in leaders:
        m = np.abs(j - lead)
        # points between the two thresholds where the leader is right
        k = (m + errors - errors[lead]) / 2.0
        pval = np.where(m > 0, stats.binom.sf(np.ceil(k) - 1, np.maximum(m, 1), 0.5), 1.0)
        keep |= pval > level
    return keep


def learn_threshold_a2(
    oracle: LabelOracle,
    budget: int,
    delta: float = 0.1,
    rng: np.random.Generator | None = None,
    *,
    bounds: tuple[float, float] | None = None,
    first_batch: int | None = None,
    estimate: str = "erm",
) -> SubroutineResult:
    """Disagreement-based threshold learner.

    Each epoch queries a batch uniformly from the disagreement region
    ``[lo, hi)``, then drops thresholds that a sign test (at level
    ``delta / (e (e + 1))`` in epoch ``e``) shows to be worse than the
    empirical leader, using every label seen inside the current region.
    Batches start at ``max(4, budget // 8)`` and double. The loop stops when
    the budget is spent, the region has no unlabeled points left, or the
    region is narrower than ``1 / M`` of its starting width.

    The returned threshold minimises empirical error over the labels inside
    the final interval (median of the minimising gaps' midpoints), or is the
    interval midpoint with ``estimate="midpoint"``. The final interval is
    reported as the disagreement region.
    """
    if estimate not in ("erm", "midpoint"):
        raise ValueError(f"unknown estimate {estimate!r}")
    rng = np.random.default_rng() if rng is None else rng
    pool = oracle.pool
    trace = SamplerTrace()
    if budget <= 0:
        return SubroutineResult(Classifier("constant"), None, 0, {"epochs": 0}, trace)
    if bounds is None:
        lo, hi = float(pool.x.min()), float(np.nextafter(pool.x.max(), INF))
    else:
        lo, hi = map(float, bounds)
    min_width = 1.0 / pool.size * (hi - lo)
    batch = first_batch or max(4, budget // 8)
    qx: list[float] = []
    qy: list[float] = []
    spent = 0
    epoch = 0
    widths = [hi - lo]
    while spent < budget and hi - lo >= min_width:
        epoch += 1
        region = Stratum(0, ((lo, hi),), 1.0)
        size = min(batch, budget - spent)
        for _ in range(size):
            try:
                i, x, y = oracle.sample_from_stratum(region, rng)
            except StratumExhaustedError:
                break
            trace.add(round=spent, stage="stage1", group=epoch, point=i, x=x, y=y)
            qx.append(x)
            qy.append(y)
            spent += 1
        ax, ay = np.asarray(qx), np.asarray(qy)
        inside = (ax >= lo) & (ax < hi)
        order = np.argsort(ax[inside], kind="stable")
        xs, ys = ax[inside][order], ay[inside][order]
        if xs.size:
            keep = _sign_test_survivors(xs, ys, delta / (epoch * (epoch + 1)))
            first, last = np.flatnonzero(keep)[[0, -1]]
            new_lo = lo if first == 0 else float(np.nextafter(xs[first - 1], INF))
            new_hi = hi if last == xs.size else float(xs[last])
            lo, hi = max(lo, new_lo), min(hi, new_hi)
        widths.append(hi - lo)
        if hi <= lo or oracle.available(Stratum(0, ((lo, hi),), 1.0)) == 0:
            break
        batch *= 2
    t_hat = 0.5 * (lo + hi)
    if estimate == "erm" and hi > lo:
        t_hat = _erm_threshold(np.asarray(qx), np.asarray(qy), lo, hi)
    diag = {"epochs": epoch, "widths": widths, "bounds": (lo, hi)}
    return SubroutineResult(Classifier("threshold", threshold=t_hat), (lo, hi), spent, diag, trace)


def _erm_threshold(qx, qy, lo, hi) -> float:
    inside = (qx >= lo) & (qx < hi)
    order = np.argsort(qx[inside], kind="stable")
    xs, ys = qx[inside][order], qy[inside][order]
    errors = _segment_errors(ys)
    edges = np.concatenate(([lo], xs, [hi]))
    best = np.flatnonzero(errors == errors.min())
    mids = 0.5 * (edges[best] + edges[best + 1])
    # an end gap means every label in the region agrees: put the cut at the region edge
    mids[best == 0] = lo
    mids[best == xs.size] = hi
    return float(np.median(mids))


def epsilon_offset(n: int) -> float:
    """``exp(-N / log N)`` floored at ``EPS_FLOOR`` so strata stay distinguishable."""
    if n <= 1:
        return EPS_FLOOR
    return max(math.exp(-n / math.log(n)), EPS_FLOOR)


def heterogeneity_wrap(result: SubroutineResult, n: int) -> Classifier:
    """Shift the classifier by a small offset on its disagreement region.

    The output then separates the uncertain band from the confident
    regions, giving up to four strata. An empty region leaves the
    classifier unchanged.
    """
    h = result.classifier
    region = result.region
    if region is None or not region[0] < region[1] or h.kind != "threshold":
        return h
    return Classifier("abstention", threshold=h.threshold, region=region, eps=epsilon_offset(n))


def induced_partition(classifier: Classifier, pool: LabeledPool) -> StratificationScheme:
    """One stratum per classifier output value that has pool points, weighted by pool fraction."""
    cells = []
    for _, intervals in classifier.preimages():
        probe = Stratum(0, intervals, 1.0)
        count = int(np.count_nonzero(probe.contains(pool.x)))
        if count:
            cells.append((intervals, count / pool.size))
    strata = tuple(Stratum(g, ivs, w) for g, (ivs, w) in enumerate(cells))
    return StratificationScheme(strata, "learned-from-classifier")


# --- plug-in registry -------------------------------------------------------

Subroutine = Callable[..., SubroutineResult]


def _a2_het(oracle, budget, delta, rng):
    result = learn_threshold_a2(oracle, budget, delta, rng)
    result.classifier = heterogeneity_wrap(result, budget)
    return result


def _constant(oracle, budget, delta, rng):
    return SubroutineResult(Classifier("constant"), None, 0, {"epochs": 0})


def _multiclass(oracle, budget, delta, rng):
    raise NotImplementedError(
        "the multiclass selective-sampling learner is an extension point; "
        "register an implementation with register_subroutine()"
    )


_REGISTRY: dict[str, Subroutine] = {
    "a2-threshold": learn_threshold_a2,
    "a2-threshold-het": _a2_het,
    "constant": _constant,
    "agarwal-multiclass": _multiclass,
}


def register_subroutine(name: str, fn: Subroutine) -> None:
    if name in _REGISTRY:
        raise RegistryError(f"subroutine {name!r} already registered")
    _REGISTRY[name] = fn


def available_subroutines() -> list[str]:
    return sorted(_REGISTRY)


def plugin_subroutine(name: str) -> Subroutine:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise RegistryError(
            f"unknown subroutine {name!r}; available: {', '.join(available_subroutines())}"
        ) from None
