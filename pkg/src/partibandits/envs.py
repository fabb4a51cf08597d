"""Data pools, synthetic data-generating processes and the label oracle."""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .core import (
    DomainError,
    PartiBanditsError,
    StratificationScheme,
    Stratum,
    TrueModel,
)

log = logging.getLogger(__name__)

DEFAULT_POOL_SIZE = 10_000


class EmptyPoolError(PartiBanditsError):
    pass


class BudgetExhaustedError(PartiBanditsError):
    pass


class StratumExhaustedError(PartiBanditsError):
    pass


class PoolParseError(PartiBanditsError, ValueError):
    pass


class UnsupportedLabelError(PartiBanditsError):
    pass


class LabeledPool:
    """A finite set of covariates whose labels are only reachable via a :class:`LabelOracle`."""

    def __init__(self, x, y, alphabet=None, name: str = "pool"):
        x = np.array(x, dtype=float)
        y = np.array(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-D arrays of equal length")
        if x.size == 0:
            raise EmptyPoolError("a pool needs at least one point")
        if not np.all(np.isfinite(x)):
            raise ValueError("pool covariates must be finite")
        if alphabet is None:
            alphabet = np.unique(y)
        alphabet = tuple(float(a) for a in sorted(set(float(a) for a in alphabet)))
        if not np.all(np.isin(y, alphabet)):
            raise ValueError("pool contains labels outside its alphabet")
        x.flags.writeable = False
        y.flags.writeable = False
        self.x = x
        self._y = y
        self.alphabet = alphabet
        self.name = name

    @property
    def size(self) -> int:
        return int(self.x.size)

    def __len__(self):
        return self.size

    @property
    def is_binary(self) -> bool:
        return set(self.alphabet) <= {0.0, 1.0}

    def pool_mean(self) -> float:
        """Mean label over the whole pool (a census, bypassing any oracle)."""
        return float(self._y.mean())

    def subset(self, index, name=None) -> "LabeledPool":
        return LabeledPool(self.x[index], self._y[index], self.alphabet, name or self.name)

    def empirical_scheme(self, scheme: StratificationScheme) -> StratificationScheme:
        """Same memberships, with ``P_g`` replaced by pool fractions."""
        assigned = scheme.assign(self.x)
        if np.any(assigned < 0):
            raise ValueError("scheme does not cover every pool point")
        counts = np.bincount(assigned, minlength=len(scheme))
        strata = tuple(
            Stratum(s.id, s.intervals, counts[s.id] / self.size) for s in scheme
        )
        return StratificationScheme(strata, scheme.provenance)


class LabelOracle:
    """Budget-metered access to a pool's labels.

    Revealing a point twice does not consume budget again.
    """

    def __init__(self, pool: LabeledPool, budget: int):
        if budget < 0:
            raise DomainError("budget must be non-negative")
        self.pool = pool
        self.budget = int(budget)
        self.spent = 0
        self.revealed = np.zeros(pool.size, dtype=bool)
        self._candidates: dict = {}

    @property
    def remaining(self) -> int:
        return self.budget - self.spent

    def reveal(self, i: int) -> float:
        i = int(i)
        if not self.revealed[i]:
            if self.spent >= self.budget:
                raise BudgetExhaustedError(f"label budget {self.budget} exhausted")
            self.revealed[i] = True
            self.spent += 1
        return float(self.pool._y[i])

    def _slot(self, stratum: Stratum):
        slot = self._candidates.get(stratum.key)
        if slot is None:
            idx = np.flatnonzero(stratum.contains(self.pool.x) & ~self.revealed)
            slot = [idx, idx.size]
            self._candidates[stratum.key] = slot
        return slot

    def available(self, stratum: Stratum) -> int:
        """Number of unrevealed pool points inside the stratum."""
        slot = self._slot(stratum)
        idx, n = slot
        # drop points revealed through a different stratum's candidate list
        j = 0
        while j < n:
            if self.revealed[idx[j]]:
                n -= 1
                idx[j], idx[n] = idx[n], idx[j]
            else:
                j += 1
        slot[1] = n
        return n

    def sample_from_stratum(self, stratum: Stratum, rng: np.random.Generator) -> tuple[int, float, float]:
        """Reveal a uniformly chosen unrevealed point of the stratum.

        Returns ``(point index, x, y)``.
        """
        if self.spent >= self.budget:
            raise BudgetExhaustedError(f"label budget {self.budget} exhausted")
        slot = self._slot(stratum)
        idx = slot[0]
        while True:
            n = slot[1]
            if n == 0:
                raise StratumExhaustedError(f"stratum {stratum.id} has no unrevealed points")
            j = int(rng.integers(n))
            i = int(idx[j])
            idx[j], idx[n - 1] = idx[n - 1], idx[j]
            slot[1] = n - 1
            if not self.revealed[i]:
                break
        y = self.reveal(i)
        return i, float(self.pool.x[i]), y


def sample_from_stratum(oracle: LabelOracle, stratum: Stratum, rng):
    return oracle.sample_from_stratum(stratum, rng)


class BernoulliArms:
    """Fixed Bernoulli arms with known success probabilities (no covariate)."""

    def __init__(self, probs):
        self.probs = tuple(float(p) for p in probs)
        if not self.probs or any(not 0.0 <= p <= 1.0 for p in self.probs):
            raise DomainError("arm probabilities must lie in [0, 1]")

    def __len__(self):
        return len(self.probs)

    @property
    def true_mean(self) -> float:
        return float(np.mean(self.probs))

    def pull(self, arm: int, rng) -> float:
        return float(rng.random() < self.probs[arm])


# --- synthetic data-generating processes ----------------------------------


@dataclass(frozen=True)
class DgpSpec:
    """Parameters of one synthetic DGP.

    ``kind`` is ``threshold`` (a.k.a. threshold-flip), ``logit`` or ``probit``.
    """

    kind: str = "threshold"
    threshold: float = 0.5
    rho_le: float = 0.0
    rho_gt: float = 0.0
    nu: float = 1.0
    pool_size: int = DEFAULT_POOL_SIZE

    def __post_init__(self):
        kind = {"threshold-flip": "threshold"}.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        self.validate()

    def validate(self) -> None:
        if self.kind not in ("threshold", "logit", "probit"):
            raise DomainError(f"unknown DGP kind {self.kind!r}")
        if self.pool_size < 1:
            raise EmptyPoolError("pool_size must be at least 1")
        if self.kind == "threshold":
            if not 0.0 <= self.threshold <= 1.0:
                raise DomainError(f"threshold must lie in [0, 1], got {self.threshold}")
            for name in ("rho_le", "rho_gt"):
                rho = getattr(self, name)
                if not 0.0 <= rho <= 1.0:
                    raise DomainError(f"{name} must lie in [0, 1], got {rho}")
                if rho > 0.25:
                    warnings.warn(f"{name}={rho} exceeds 1/4", stacklevel=3)
        elif not self.nu > 0:
            raise DomainError(f"nu must be positive, got {self.nu}")

    @property
    def support(self) -> tuple[float, float]:
        return (-5.0, 5.0) if self.kind == "probit" else (0.0, 1.0)

    @property
    def boundary(self) -> float:
        """Covariate value where P(Y=1 | x) crosses 1/2."""
        return {"threshold": self.threshold, "logit": 0.5, "probit": 0.25}[self.kind]

    def p_one(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "threshold":
            return np.where(x < self.threshold, self.rho_le, 1.0 - self.rho_gt)
        if self.kind == "logit":
            return special.expit((-1.0 + 2.0 * x) / self.nu)
        return special.ndtr((x - 0.25) / self.nu)

    def covariate_mass(self, intervals) -> float:
        lo, hi = self.support
        return math.fsum(max(0.0, min(b, hi) - max(a, lo)) for a, b in intervals) / (hi - lo)

    def _integral_p(self, a: float, b: float) -> float:
        lo, hi = self.support
        a, b = max(a, lo), min(b, hi)
        if a >= b:
            return 0.0
        if self.kind == "threshold":
            t = self.threshold
            left = max(0.0, min(b, t) - a)
            right = max(0.0, b - max(a, t))
            return self.rho_le * left + (1.0 - self.rho_gt) * right
        c = self.boundary
        pts = [c] if a < c < b else None
        val, _ = integrate.quad(
            lambda u: float(self.p_one(u)), a, b, points=pts, epsabs=1e-13, epsrel=1e-12, limit=200
        )
        return val

    def stratum_moments(self, intervals) -> tuple[float, float, float]:
        """``(P(X in A), E[Y | A], Var(Y | A))`` for a union of intervals."""
        lo, hi = self.support
        mass = self.covariate_mass(intervals)
        if mass == 0.0:
            return 0.0, float("nan"), float("nan")
        ones = math.fsum(self._integral_p(a, b) for a, b in intervals) / (hi - lo)
        m = ones / mass
        return mass, m, m * (1.0 - m)

    def scheme(self, cuts) -> StratificationScheme:
        """A-priori scheme split at ``cuts`` with analytic weights."""
        edges = [-math.inf, *sorted(cuts), math.inf]
        weights = [self.covariate_mass([(edges[g], edges[g + 1])]) for g in range(len(edges) - 1)]
        return StratificationScheme.from_cuts(cuts, weights)

    def scheme_sigma1(self, scheme: StratificationScheme) -> float:
        total = 0.0
        for s in scheme:
            mass, _, var = self.stratum_moments(s.intervals)
            if mass > 0:
                total += mass * var
        return total

    def bayes_risk(self) -> float:
        if self.kind == "threshold":
            t = self.threshold
            return t * self.rho_le + (1.0 - t) * self.rho_gt
        lo, hi = self.support
        c = self.boundary
        val, _ = integrate.quad(
            lambda u: float(min(self.p_one(u), 1.0 - self.p_one(u))),
            lo, hi, points=[c], epsabs=1e-13, limit=200,
        )
        return val / (hi - lo)

    def true_model(self) -> TrueModel:
        _, mu, var = self.stratum_moments([(-math.inf, math.inf)])
        c = self.boundary
        left = self.stratum_moments([(-math.inf, c)])
        right = self.stratum_moments([(c, math.inf)])
        parts = [m for m in (left, right) if m[0] > 0]
        return TrueModel(
            mean=mu,
            variance=var,
            strata_weights=tuple(p[0] for p in parts),
            strata_variances=tuple(p[2] for p in parts),
            bayes_risk=self.bayes_risk(),
        )

    def generate(self, seed) -> LabeledPool:
        rng = np.random.default_rng(seed)
        lo, hi = self.support
        x = lo + (hi - lo) * rng.random(self.pool_size)
        u = rng.random(self.pool_size)
        if self.kind == "threshold":
            base = x >= self.threshold
            flip_rate = np.where(base, self.rho_gt, self.rho_le)
            y = np.where(u < flip_rate, ~base, base)
        else:
            y = u < self.p_one(x)
        return LabeledPool(x, y.astype(float), alphabet=(0.0, 1.0), name=self.kind)


def gen_threshold_pool(t, rho_le, rho_gt, M=DEFAULT_POOL_SIZE, seed=None):
    spec = DgpSpec("threshold", threshold=t, rho_le=rho_le, rho_gt=rho_gt, pool_size=M)
    return spec.generate(seed), spec.true_model()


def gen_logit_pool(nu, M=DEFAULT_POOL_SIZE, seed=None):
    spec = DgpSpec("logit", nu=nu, pool_size=M)
    return spec.generate(seed), spec.true_model()


def gen_probit_pool(nu, M=DEFAULT_POOL_SIZE, seed=None):
    spec = DgpSpec("probit", nu=nu, pool_size=M)
    return spec.generate(seed), spec.true_model()


# --- file-backed pools ------------------------------------------------------


def tail_filter(x: np.ndarray, q: float) -> np.ndarray:
    """Mask keeping covariates in the bottom and top ``q``-quantiles."""
    if not 0.0 < q < 0.5:
        raise DomainError(f"tail quantile must lie in (0, 0.5), got {q}")
    lo, hi = np.quantile(x, [q, 1.0 - q])
    return (x <= lo) | (x >= hi)


def load_csv_pool(path, x_column: str, y_column: str, *, tail_quantile: float | None = None,
                  max_labels: int = 10) -> LabeledPool:
    """Read a pool from a headed UTF-8 CSV file.

    Parameters
    ----------
    path : str or Path
    x_column, y_column : str
        Header names of the covariate and the label.
    tail_quantile : float, optional
        When given, keep only rows whose covariate is in the bottom or top
        ``tail_quantile`` of its distribution (e.g. 0.05).
    max_labels : int
        Largest admissible number of distinct label values.
    """
    path = Path(path)
    xs, ys = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (x_column, y_column):
            if col not in header:
                raise PoolParseError(f"{path}: column {col!r} not found (have {header})")
        # row 1 is the header
        for row_no, row in enumerate(reader, start=2):
            try:
                x = float(row[x_column])
            except (TypeError, ValueError):
                raise PoolParseError(f"{path}: row {row_no}: non-numeric {x_column}={row[x_column]!r}")
            if not math.isfinite(x):
                raise PoolParseError(f"{path}: row {row_no}: non-finite {x_column}")
            try:
                y = float(row[y_column])
            except (TypeError, ValueError):
                raise PoolParseError(f"{path}: row {row_no}: non-numeric {y_column}={row[y_column]!r}")
            xs.append(x)
            ys.append(y)
            if len(set(ys)) > max_labels:
                raise PoolParseError(
                    f"{path}: row {row_no}: more than {max_labels} distinct {y_column} values"
                )
    if not xs:
        raise EmptyPoolError(f"{path}: no data rows")
    x = np.array(xs)
    y = np.array(ys)
    if tail_quantile is not None:
        keep = tail_filter(x, tail_quantile)
        x, y = x[keep], y[keep]
    return LabeledPool(x, y, name=path.stem)
