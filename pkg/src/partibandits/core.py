"""Shared domain types and the elementary stratified estimators.

Strata live on a 1-D covariate and are finite unions of half-open intervals
``[a, b)``; unbounded ends are written with ``-inf`` / ``inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

WEIGHT_TOL = 1e-9


class PartiBanditsError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PartiBanditsError, ValueError):
    """A parameter lies outside its mathematical domain."""


class UndefinedEstimateError(PartiBanditsError):
    pass


class IncompleteCoverageError(PartiBanditsError):
    """Some stratum has no labels, so the aggregate would be biased."""


class InfeasibleCoverageError(PartiBanditsError):
    """The budget is smaller than the number of strata."""


class SchemeError(PartiBanditsError, ValueError):
    pass


Interval = tuple[float, float]


def _normalize_intervals(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    """Sort, drop empty pieces and merge touching intervals."""
    pieces = sorted((float(a), float(b)) for a, b in intervals if a < b)
    merged: list[list[float]] = []
    for a, b in pieces:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


def intersect_intervals(left: Sequence[Interval], right: Sequence[Interval]) -> tuple[Interval, ...]:
    out = []
    for a, b in left:
        for c, d in right:
            lo, hi = max(a, c), min(b, d)
            if lo < hi:
                out.append((lo, hi))
    return _normalize_intervals(out)


@dataclass(frozen=True)
class Stratum:
    """One cell ``A_g`` of a stratification scheme, with its weight ``P_g``."""

    id: int
    intervals: tuple[Interval, ...]
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize_intervals(self.intervals))
        if not self.intervals:
            raise SchemeError(f"stratum {self.id} has an empty membership")
        if not 0.0 <= self.weight <= 1.0 + WEIGHT_TOL:
            raise SchemeError(f"stratum {self.id} weight {self.weight} outside [0, 1]")

    @classmethod
    def whole(cls, id: int = 0, weight: float = 1.0) -> "Stratum":
        return cls(id, ((-math.inf, math.inf),), weight)

    @property
    def key(self) -> tuple[Interval, ...]:
        return self.intervals

    def contains(self, x):
        """Vectorised membership test; accepts scalars or arrays."""
        x = np.asarray(x, dtype=float)
        mask = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            mask |= (x >= a) & (x < b)
        return mask

    def touches(self, other: "Stratum") -> bool:
        return any(b == c or d == a for a, b in self.intervals for c, d in other.intervals)


@dataclass(frozen=True)
class StratificationScheme:
    strata: tuple[Stratum, ...]
    provenance: str = "a-priori"

    def __post_init__(self):
        if self.provenance not in ("a-priori", "learned-from-classifier"):
            raise SchemeError(f"unknown provenance {self.provenance!r}")
        kept = [s for s in self.strata if s.weight > 0.0]
        if not kept:
            raise SchemeError("a stratification scheme needs at least one stratum")
        total = sum(s.weight for s in kept)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise SchemeError(f"stratum weights sum to {total!r}, expected 1")
        renumbered = tuple(Stratum(g, s.intervals, s.weight) for g, s in enumerate(kept))
        pieces = sorted(iv for s in renumbered for iv in s.intervals)
        for (a, b), (c, d) in zip(pieces, pieces[1:]):
            if c < b:
                raise SchemeError(f"strata overlap on [{c}, {min(b, d)})")
        object.__setattr__(self, "strata", renumbered)

    def __len__(self) -> int:
        return len(self.strata)

    def __iter__(self):
        return iter(self.strata)

    def __getitem__(self, g: int) -> Stratum:
        return self.strata[g]

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(s.weight for s in self.strata)

    @classmethod
    def single(cls) -> "StratificationScheme":
        return cls((Stratum.whole(),))

    @classmethod
    def from_cuts(cls, cuts: Sequence[float], weights: Sequence[float], provenance="a-priori"):
        """Scheme of consecutive intervals ``(-inf, c1), [c1, c2), ..., [ck, inf)``."""
        edges = [-math.inf, *sorted(float(c) for c in cuts), math.inf]
        if len(weights) != len(edges) - 1:
            raise SchemeError(f"{len(edges) - 1} cells but {len(weights)} weights")
        strata = tuple(
            Stratum(g, ((edges[g], edges[g + 1]),), float(w)) for g, w in enumerate(weights)
        )
        return cls(strata, provenance)

    def assign(self, x) -> np.ndarray:
        """Stratum index for every covariate value, ``-1`` where uncovered."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, -1, dtype=int)
        for s in self.strata:
            out[s.contains(x)] = s.id
        return out

    def covers(self, x) -> bool:
        return bool(np.all(self.assign(x) >= 0))


class GroupState:
    """Running statistics of ``P_g * Y`` for one stratum during a sampler run."""

    __slots__ = ("weight", "n", "total", "total_sq")

    def __init__(self, weight: float):
        self.weight = float(weight)
        self.n = 0
        self.total = 0.0
        self.total_sq = 0.0

    def update(self, y: float) -> None:
        v = self.weight * y
        self.n += 1
        self.total += v
        self.total_sq += v * v

    @property
    def mean(self) -> float:
        if self.n < 1:
            raise UndefinedEstimateError("weighted mean needs at least one label")
        return self.total / self.n

    @property
    def std(self) -> float:
        """Sample standard deviation with the ``n - 1`` denominator."""
        if self.n < 2:
            raise UndefinedEstimateError("weighted std needs at least two labels")
        m = self.total / self.n
        ss = self.total_sq - self.n * m * m
        # cancellation can leave tiny negatives
        if ss < 0.0:
            ss = 0.0
        return math.sqrt(ss / (self.n - 1))

    def __repr__(self):
        return f"GroupState(weight={self.weight}, n={self.n}, total={self.total})"


@dataclass(frozen=True)
class MeanEstimate:
    value: float
    per_group: tuple[tuple[int, int, float], ...]
    labels_spent: int


@dataclass(frozen=True)
class TrueModel:
    """Population quantities of a data-generating process.

    ``strata_variances`` and ``sigma1`` refer to the DGP's natural split
    (its decision threshold); ``bayes_risk`` is ``None`` when unknown.
    """

    mean: float
    variance: float
    strata_weights: tuple[float, ...] = ()
    strata_variances: tuple[float, ...] = ()
    bayes_risk: float | None = None
    sigma1: float = field(init=False)

    def __post_init__(self):
        if self.strata_weights:
            value = sigma1(self.strata_weights, self.strata_variances)
        else:
            value = self.variance
        object.__setattr__(self, "sigma1", value)


def weighted_group_mean(labels: Sequence[float], weight: float) -> float:
    """``P_g`` times the arithmetic mean of the labels drawn from stratum g."""
    if len(labels) == 0:
        raise UndefinedEstimateError("cannot estimate a stratum mean from zero labels")
    if not 0.0 < weight <= 1.0:
        raise DomainError(f"stratum weight must lie in (0, 1], got {weight}")
    return weight * math.fsum(labels) / len(labels)


def aggregate_mean(per_group: Sequence[float | None]) -> float:
    """Sum of the per-stratum weighted means.

    ``None`` marks a stratum that received no labels.
    """
    missing = [g for g, v in enumerate(per_group) if v is None]
    if missing:
        raise IncompleteCoverageError(f"strata {missing} have no labels")
    return float(sum(per_group))


def sigma1(weights, cond_vars) -> float:
    """Average within-stratum variance ``sum_g P_g * Var(Y | A_g)``.

    ``weights`` may also be a :class:`StratificationScheme`.
    """
    if isinstance(weights, StratificationScheme):
        weights = weights.weights
    weights = list(weights)
    cond_vars = list(cond_vars)
    if len(weights) != len(cond_vars):
        raise SchemeError(f"{len(weights)} strata but {len(cond_vars)} variances")
    if any(v < 0 for v in cond_vars):
        raise DomainError("conditional variances must be non-negative")
    return math.fsum(w * v for w, v in zip(weights, cond_vars))


def estimate_from_states(states: Sequence[GroupState], extra_spent: int = 0) -> MeanEstimate:
    per_group = [s.mean if s.n else None for s in states]
    value = aggregate_mean(per_group)
    return MeanEstimate(
        value=value,
        per_group=tuple((g, s.n, s.mean) for g, s in enumerate(states)),
        labels_spent=extra_spent + sum(s.n for s in states),
    )


@dataclass(frozen=True)
class TraceRecord:
    round: int
    stage: str
    group: int
    point: int
    x: float
    y: float
    scores: tuple[float, ...] | None = None


@dataclass
class SamplerTrace:
    """Per-round audit log of one sampler run."""

    records: list[TraceRecord] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add(self, **kw) -> None:
        self.records.append(TraceRecord(**kw))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def draws(self, stage: str | None = None) -> list[tuple[int, int, int, float]]:
        """``(round, group, point, y)`` for every record, optionally of one stage."""
        return [
            (r.round, r.group, r.point, r.y)
            for r in self.records
            if stage is None or r.stage == stage
        ]

    def extend(self, other: "SamplerTrace") -> None:
        self.records.extend(other.records)
