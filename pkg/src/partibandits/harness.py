"""Monte Carlo experiment engine: replicated runs over budget grids, percentile summaries, CSV output."""
from __future__ import annotations

import csv
import functools
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import ThompsonConfig, run_srs, run_strs, run_thompson
from .core import DomainError, PartiBanditsError, StratificationScheme, Stratum
from .envs import BernoulliArms, DgpSpec, LabelOracle, load_csv_pool, tail_filter
from .stage1 import available_subroutines
from .two_stage import PartiBanditsConfig, run_partibandits
from .ws_ucb import UcbConstants, default_subgaussian, run_warmstart_ucb

ALGORITHMS = ("srs", "strs", "ws-ucb", "partibandits", "thompson")
METRICS = ("squared", "absolute")
CSV_HEADER = ("algorithm", "budget", "percentile_error", "mean_error", "sem", "replications", "seed")


class ConfigError(PartiBanditsError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ReplicationError(PartiBanditsError):
    def __init__(self, algorithm, budget, replication, seed, cause):
        super().__init__(
            f"replication failed: algorithm={algorithm} budget={budget} "
            f"rep={replication} seed={seed}: {type(cause).__name__}: {cause}"
        )
        self.coordinates = {"algorithm": algorithm, "budget": budget, "rep": replication, "seed": seed}


@dataclass(frozen=True)
class ScenarioSpec:
    """Where labels come from: a synthetic DGP, a CSV file or fixed Bernoulli arms."""

    kind: str = "threshold"
    threshold: float = 0.5
    rho_le: float = 0.0
    rho_gt: float = 0.0
    nu: float = 1.0
    pool_size: int = 10_000
    path: str | None = None
    x_column: str = "x"
    y_column: str = "y"
    tail_quantile: float | None = None
    probs: tuple[float, ...] = ()

    @property
    def synthetic(self) -> bool:
        return self.kind in ("threshold", "threshold-flip", "logit", "probit")

    @property
    def dgp(self) -> DgpSpec:
        return DgpSpec(self.kind, self.threshold, self.rho_le, self.rho_gt, self.nu, self.pool_size)

    def validate(self, where: str = "scenario") -> None:
        if self.synthetic:
            for name in ("rho_le", "rho_gt"):
                if not 0.0 <= getattr(self, name) <= 1.0:
                    raise ConfigError(f"{where}.{name}", f"must lie in [0, 1], got {getattr(self, name)}")
            if not 0.0 <= self.threshold <= 1.0:
                raise ConfigError(f"{where}.threshold", f"must lie in [0, 1], got {self.threshold}")
            if not self.nu > 0:
                raise ConfigError(f"{where}.nu", f"must be positive, got {self.nu}")
            if self.pool_size < 1:
                raise ConfigError(f"{where}.pool_size", "must be at least 1")
        elif self.kind == "csv":
            if not self.path:
                raise ConfigError(f"{where}.path", "a csv scenario needs a file path")
            if self.tail_quantile is not None and not 0.0 < self.tail_quantile < 0.5:
                raise ConfigError(f"{where}.tail_quantile", "must lie in (0, 0.5)")
        elif self.kind == "arms":
            if not self.probs or any(not 0.0 <= p <= 1.0 for p in self.probs):
                raise ConfigError(f"{where}.probs", "need at least one probability in [0, 1]")
        else:
            raise ConfigError(f"{where}.kind", f"unknown scenario kind {self.kind!r}")


@dataclass(frozen=True)
class AlgorithmSpec:
    """One roster entry; ``label`` names its rows in the result table."""

    name: str
    label: str = ""
    params: tuple[tuple[str, object], ...] = ()
    scenario: ScenarioSpec | None = None

    def __post_init__(self):
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))
        if not self.label:
            object.__setattr__(self, "label", self.name)

    def param(self, key, default=None):
        return dict(self.params).get(key, default)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    roster: tuple[AlgorithmSpec, ...] = ()
    budgets: tuple[int, ...] = (100,)
    replications: int = 500
    percentile: float = 0.9
    metric: str = "squared"
    seed: int = 0
    parallelism: int = 1
    name: str = "experiment"

    def validate(self) -> "ExperimentConfig":
        if self.replications < 1:
            raise ConfigError("replications", "must be at least 1")
        if not 0.0 < self.percentile < 1.0:
            raise ConfigError("percentile", "must lie in (0, 1)")
        if self.metric not in METRICS:
            raise ConfigError("metric", f"must be one of {METRICS}")
        if self.parallelism < 1:
            raise ConfigError("parallelism", "must be at least 1")
        if not self.budgets or any(b < 1 for b in self.budgets):
            raise ConfigError("budgets", "need positive budgets")
        if any(b2 <= b1 for b1, b2 in zip(self.budgets, self.budgets[1:])):
            raise ConfigError("budgets", "must be strictly increasing")
        self.scenario.validate()
        labels = [a.label for a in self.roster]
        if len(set(labels)) != len(labels):
            raise ConfigError("algorithms", "labels must be unique")
        for k, entry in enumerate(self.roster):
            _validate_entry(entry, self, f"algorithms[{k}]")
        return self

    def entry(self, label: str) -> AlgorithmSpec:
        for a in self.roster:
            if a.label == label:
                return a
        matches = [a for a in self.roster if a.name == label]
        if len(matches) == 1:
            return matches[0]
        raise ConfigError("algorithm", f"no roster entry labelled {label!r}")


def _validate_entry(entry: AlgorithmSpec, config: ExperimentConfig, where: str) -> None:
    if entry.name not in ALGORITHMS:
        raise ConfigError(f"{where}.name", f"unknown algorithm {entry.name!r}; choose from {ALGORITHMS}")
    scen = entry.scenario or config.scenario
    scen.validate(f"{where}.scenario")
    p = dict(entry.params)
    known = {
        "srs": set(),
        "strs": {"split"},
        "ws-ucb": {"split", "tau", "delta", "c1", "c2"},
        "partibandits": {"subroutine", "tau", "delta", "c1", "c2", "stage1_budget"},
        "thompson": {"mode", "bins", "alpha", "beta", "lo", "hi"},
    }[entry.name]
    unknown = set(p) - known
    if unknown:
        raise ConfigError(f"{where}", f"unknown parameters {sorted(unknown)} for {entry.name}")
    if scen.kind == "arms" and not (entry.name == "thompson" and p.get("mode") == "fixed-arms"):
        raise ConfigError(f"{where}.name", "an arms scenario only supports thompson in fixed-arms mode")
    if "tau" in p and not 0.0 <= p["tau"] <= 1.0:
        raise ConfigError(f"{where}.tau", "must lie in [0, 1]")
    if "delta" in p and not 0.0 < p["delta"] < 1.0:
        raise ConfigError(f"{where}.delta", "must lie in (0, 1)")
    if "subroutine" in p and p["subroutine"] not in available_subroutines():
        raise ConfigError(f"{where}.subroutine", f"unknown subroutine {p['subroutine']!r}")
    if entry.name == "thompson":
        try:
            _thompson_config(entry, scen)
        except DomainError as exc:
            raise ConfigError(f"{where}", str(exc)) from None
    if entry.name == "partibandits":
        try:
            _pb_config(entry, min(config.budgets))
        except DomainError as exc:
            raise ConfigError(f"{where}", str(exc)) from None


# --- building blocks ----------------------------------------------------------


@functools.lru_cache(maxsize=8)
def _load_csv(path, x_column, y_column, tail_quantile):
    return load_csv_pool(path, x_column, y_column, tail_quantile=tail_quantile)


@dataclass
class Environment:
    env: object
    true_mean: float
    dgp: DgpSpec | None = None


def build_environment(scen: ScenarioSpec, seed: int, rep: int) -> Environment:
    """Fresh pool for replication ``rep``; depends only on ``(seed, rep)``."""
    ss = np.random.SeedSequence(seed, spawn_key=(rep, 0))
    if scen.synthetic:
        dgp = scen.dgp
        return Environment(dgp.generate(ss), dgp.true_model().mean, dgp)
    if scen.kind == "arms":
        arms = BernoulliArms(scen.probs)
        return Environment(arms, arms.true_mean)
    full = _load_csv(scen.path, scen.x_column, scen.y_column, None)
    rng = np.random.default_rng(ss)
    if full.size > scen.pool_size:
        idx = np.sort(rng.choice(full.size, scen.pool_size, replace=False))
    else:
        idx = np.arange(full.size)
    sub_x = full.x[idx]
    if scen.tail_quantile is not None:
        idx = idx[tail_filter(sub_x, scen.tail_quantile)]
    population = full
    if scen.tail_quantile is not None:
        population = full.subset(tail_filter(full.x, scen.tail_quantile))
    return Environment(full.subset(idx), population.pool_mean())


def _cuts(entry: AlgorithmSpec, env: Environment) -> list[float]:
    split = entry.param("split", "true")
    if split == "true":
        if env.dgp is None:
            raise ConfigError("split", "split='true' needs a synthetic scenario")
        return [env.dgp.boundary]
    if isinstance(split, (int, float)):
        return [float(split)]
    return sorted(float(c) for c in split)


def _cut_scheme(env: Environment, cuts) -> StratificationScheme:
    if env.dgp is not None:
        return env.dgp.scheme(cuts)
    edges = [-math.inf, *cuts, math.inf]
    probe = StratificationScheme(
        tuple(Stratum(g, ((edges[g], edges[g + 1]),), 1.0 / (len(edges) - 1)) for g in range(len(edges) - 1))
    )
    return env.env.empirical_scheme(probe)


def _thompson_config(entry: AlgorithmSpec, scen: ScenarioSpec) -> ThompsonConfig:
    p = dict(entry.params)
    mode = p.pop("mode", "binned-covariate")
    if mode == "fixed-arms":
        p["probs"] = tuple(scen.probs) or ThompsonConfig.probs
    return ThompsonConfig(mode=mode, **p)


def _pb_config(entry: AlgorithmSpec, budget: int) -> PartiBanditsConfig:
    return PartiBanditsConfig(budget=budget, **dict(entry.params))


def run_algorithm(entry: AlgorithmSpec, env: Environment, budget: int, rng):
    """Run one roster entry on one environment; returns ``(MeanEstimate, SamplerTrace)``."""
    if entry.name == "thompson":
        cfg = _thompson_config(entry, entry.scenario or ScenarioSpec())
        if cfg.mode == "fixed-arms":
            return run_thompson(env.env, cfg, budget, rng)
        oracle = LabelOracle(env.env, budget)
        cuts = [cfg.lo + (cfg.hi - cfg.lo) * k / cfg.bins for k in range(1, cfg.bins)]
        return run_thompson(oracle, cfg, budget, rng, scheme=_cut_scheme(env, cuts))
    oracle = LabelOracle(env.env, budget)
    if entry.name == "srs":
        return run_srs(oracle, budget, rng)
    if entry.name == "strs":
        return run_strs(oracle, _cut_scheme(env, _cuts(entry, env)), budget, rng)
    if entry.name == "ws-ucb":
        scheme = _cut_scheme(env, _cuts(entry, env))
        delta = entry.param("delta", 0.1)
        consts = None
        if entry.param("c1") is not None or entry.param("c2") is not None:
            c = default_subgaussian(env.env.alphabet)
            consts = UcbConstants(entry.param("c1", c), entry.param("c2", c), delta, budget)
        return run_warmstart_ucb(
            oracle, scheme, budget, rng, delta=delta, tau=entry.param("tau", 0.5), consts=consts
        )
    return run_partibandits(oracle, _pb_config(entry, budget), rng)


def algorithm_rng(seed: int, rep: int, label: str, budget: int) -> np.random.Generator:
    tag = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep, 1, tag, budget)))


def _error(estimate: float, truth: float, metric: str) -> float:
    d = estimate - truth
    return d * d if metric == "squared" else abs(d)


def _replicate(config: ExperimentConfig, rep: int) -> np.ndarray:
    """Errors for every (roster entry, budget) pair of one replication."""
    out = np.empty((len(config.roster), len(config.budgets)))
    envs: dict = {}
    for a, entry in enumerate(config.roster):
        scen = entry.scenario or config.scenario
        if scen not in envs:
            envs[scen] = build_environment(scen, config.seed, rep)
        env = envs[scen]
        for b, budget in enumerate(config.budgets):
            try:
                est, _ = run_algorithm(
                    _bind(entry, scen), env, budget, algorithm_rng(config.seed, rep, entry.label, budget)
                )
            except Exception as exc:
                raise ReplicationError(entry.label, budget, rep, config.seed, exc) from exc
            out[a, b] = _error(est.value, env.true_mean, config.metric)
    return out


def _bind(entry: AlgorithmSpec, scen: ScenarioSpec) -> AlgorithmSpec:
    return entry if entry.scenario is scen else replace(entry, scenario=scen)


def _replicate_chunk(config: ExperimentConfig, reps: range) -> list[np.ndarray]:
    return [_replicate(config, r) for r in reps]


# --- aggregation and output ----------------------------------------------------


def percentile(values, q: float) -> float:
    """Nearest-rank percentile: the ``ceil(q * R)``-th smallest value."""
    values = np.sort(np.asarray(values, dtype=float).ravel())
    if values.size == 0:
        raise ValueError("percentile of an empty sample")
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    rank = max(1, math.ceil(round(q * values.size, 9)))
    return float(values[rank - 1])


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    budget: int
    percentile_error: float
    mean_error: float
    sem: float
    replications: int
    seed: int


@dataclass
class ResultTable:
    rows: list[ResultRow]
    metric: str = "squared"
    percentile: float = 0.9
    errors: dict = field(default_factory=dict, repr=False)

    def get(self, algorithm: str, budget: int) -> ResultRow:
        for r in self.rows:
            if r.algorithm == algorithm and r.budget == budget:
                return r
        raise KeyError((algorithm, budget))

    def series(self, algorithm: str) -> list[ResultRow]:
        return sorted((r for r in self.rows if r.algorithm == algorithm), key=lambda r: r.budget)


def run_experiment(config: ExperimentConfig) -> ResultTable:
    """Replicate every roster entry at every budget and summarise the errors."""
    config.validate()
    R = config.replications
    if config.parallelism == 1 or R == 1:
        results = _replicate_chunk(config, range(R))
    else:
        n_chunks = min(R, 4 * config.parallelism)
        bounds = np.linspace(0, R, n_chunks + 1).astype(int)
        chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=config.parallelism) as ex:
            parts = ex.map(_replicate_chunk, [config] * len(chunks), chunks)
            results = [r for part in parts for r in part]
    errors = np.stack(results, axis=-1) if results else np.empty((len(config.roster), len(config.budgets), 0))
    rows, raw = [], {}
    for a, entry in enumerate(config.roster):
        for b, budget in enumerate(config.budgets):
            e = errors[a, b]
            sem = float(e.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0
            rows.append(ResultRow(entry.label, budget, percentile(e, config.percentile),
                                  float(e.mean()), sem, R, config.seed))
            raw[(entry.label, budget)] = e
    rows.sort(key=lambda r: (r.algorithm, r.budget))
    return ResultTable(rows, config.metric, config.percentile, raw)


def replay(config: ExperimentConfig, algorithm: str, budget: int, rep: int):
    """Re-run one (algorithm, budget, replication) coordinate exactly.

    Returns ``(estimate, trace, error)``.
    """
    entry = config.entry(algorithm)
    scen = entry.scenario or config.scenario
    env = build_environment(scen, config.seed, rep)
    est, trace = run_algorithm(_bind(entry, scen), env, budget, algorithm_rng(config.seed, rep, entry.label, budget))
    return est, trace, _error(est.value, env.true_mean, config.metric)


def _fmt(v) -> str:
    return format(v, ".12g") if isinstance(v, float) else str(v)


def emit_csv(table: ResultTable, path) -> None:
    rows = sorted(table.rows, key=lambda r: (r.algorithm, r.budget))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def plot_csv(csv_path, out_dir, title: str | None = None) -> Path:
    """Error-vs-budget SVG, one line per algorithm, drawn from an emitted CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = read_csv(csv_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for algo in sorted({r["algorithm"] for r in rows}):
        pts = sorted((int(r["budget"]), float(r["percentile_error"])) for r in rows if r["algorithm"] == algo)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=algo)
    ax.set_xlabel("label budget")
    ax.set_ylabel("percentile error")
    ax.set_title(title or Path(csv_path).stem)
    ax.legend(fontsize="small")
    out = out_dir / (Path(csv_path).stem + ".svg")
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out
