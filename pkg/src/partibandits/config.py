"""TOML experiment files and the built-in presets.

Schema::

    name = "fig1-right"
    budgets = [50, 100, 150, 200]
    replications = 500
    percentile = 0.9
    metric = "absolute"          # or "squared"
    seed = 0
    parallelism = 1

    [scenario]                   # kind: threshold | logit | probit | csv | arms
    kind = "threshold"
    threshold = 0.5
    rho_le = 0.05
    rho_gt = 0.05

    [[algorithms]]
    name = "ws-ucb"              # srs | strs | ws-ucb | partibandits | thompson
    label = "ws-ucb@0.3"
    split = 0.3                  # any other key is an algorithm parameter

    [algorithms.scenario]        # optional, merged over the top-level scenario
    rho_le = 0.1
"""
from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .harness import AlgorithmSpec, ConfigError, ExperimentConfig, ScenarioSpec

_SCENARIO_FIELDS = {f.name for f in dataclasses.fields(ScenarioSpec)}
_TOP_FIELDS = {"name", "budgets", "replications", "percentile", "metric", "seed", "parallelism"}


def _scenario(data: dict, base: ScenarioSpec | None, where: str) -> ScenarioSpec:
    unknown = set(data) - _SCENARIO_FIELDS
    if unknown:
        raise ConfigError(where, f"unknown keys {sorted(unknown)}")
    if "probs" in data:
        data = {**data, "probs": tuple(data["probs"])}
    try:
        return dataclasses.replace(base, **data) if base else ScenarioSpec(**data)
    except TypeError as exc:
        raise ConfigError(where, str(exc)) from None


def config_from_dict(data: dict) -> ExperimentConfig:
    unknown = set(data) - _TOP_FIELDS - {"scenario", "algorithms"}
    if unknown:
        raise ConfigError("config", f"unknown keys {sorted(unknown)}")
    scenario = _scenario(dict(data.get("scenario", {})), None, "scenario")
    roster = []
    for k, raw in enumerate(data.get("algorithms", [])):
        raw = dict(raw)
        if "name" not in raw:
            raise ConfigError(f"algorithms[{k}].name", "missing")
        name = raw.pop("name")
        label = raw.pop("label", "")
        scen = raw.pop("scenario", None)
        override = _scenario(dict(scen), scenario, f"algorithms[{k}].scenario") if scen else None
        params = {key: tuple(v) if isinstance(v, list) else v for key, v in raw.items()}
        roster.append(AlgorithmSpec(name, label, params, override))
    top = {k: data[k] for k in _TOP_FIELDS if k in data}
    if "budgets" in top:
        top["budgets"] = tuple(int(b) for b in top["budgets"])
    return ExperimentConfig(scenario=scenario, roster=tuple(roster), **top)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from None
    return config_from_dict(data)


def loads_config(text: str) -> ExperimentConfig:
    return config_from_dict(tomllib.loads(text))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {v!r} as TOML")


def _scenario_lines(scen: ScenarioSpec, base: ScenarioSpec | None) -> list[str]:
    lines = []
    ref = base or ScenarioSpec()
    for f in dataclasses.fields(ScenarioSpec):
        v = getattr(scen, f.name)
        if v is None or (getattr(ref, f.name) == v and (base is not None or f.name != "kind")):
            continue
        lines.append(f"{f.name} = {_toml_value(v)}")
    return lines


def dump_config(config: ExperimentConfig) -> str:
    out = [
        f"name = {_toml_value(config.name)}",
        f"budgets = {_toml_value(list(config.budgets))}",
        f"replications = {config.replications}",
        f"percentile = {config.percentile!r}",
        f"metric = {_toml_value(config.metric)}",
        f"seed = {config.seed}",
        f"parallelism = {config.parallelism}",
        "",
        "[scenario]",
        *_scenario_lines(config.scenario, None),
    ]
    for a in config.roster:
        out += ["", "[[algorithms]]", f"name = {_toml_value(a.name)}", f"label = {_toml_value(a.label)}"]
        out += [f"{k} = {_toml_value(v)}" for k, v in a.params]
        lines = _scenario_lines(a.scenario, config.scenario) if a.scenario is not None else []
        if lines:
            out += ["[algorithms.scenario]", *lines]
    return "\n".join(out) + "\n"


# --- presets ------------------------------------------------------------------

FIG1_NU = (0.0, 0.025, 0.05, 0.075, 0.1)
FIG1_SPLITS = (0.3, 0.4, 0.5)


def _flip(nu: float) -> ScenarioSpec:
    return ScenarioSpec("threshold", threshold=0.5, rho_le=nu, rho_gt=nu)


def _pb_vs_srs(scenarios: dict[str, ScenarioSpec], extra=()) -> tuple[AlgorithmSpec, ...]:
    roster = []
    for tag, scen in scenarios.items():
        roster.append(AlgorithmSpec("srs", f"srs[{tag}]", (), scen))
        roster.append(AlgorithmSpec("partibandits", f"partibandits[{tag}]", (), scen))
        roster.extend(AlgorithmSpec(n, f"{n}[{tag}]", p, scen) for n, p in extra)
    return tuple(roster)


def _build_presets() -> dict[str, tuple[str, ExperimentConfig]]:
    ten_to_hundred = tuple(range(10, 101, 10))
    flip05 = _flip(0.05)
    presets = {
        "default": (
            "every algorithm on the 5%-flip threshold scenario",
            ExperimentConfig(
                scenario=flip05,
                roster=(
                    AlgorithmSpec("srs"),
                    AlgorithmSpec("strs", params={"split": "true"}),
                    AlgorithmSpec("ws-ucb", params={"split": "true"}),
                    AlgorithmSpec("partibandits"),
                    AlgorithmSpec("thompson", params={"bins": 5}),
                ),
                budgets=ten_to_hundred, replications=500, metric="squared", name="default",
            ),
        ),
        "fig1-left": (
            "PartiBandits vs SRS, Y = 1{X >= 0.5} with 0-10% flips, budgets 10-100",
            ExperimentConfig(
                scenario=flip05,
                roster=_pb_vs_srs({f"nu={nu}": _flip(nu) for nu in FIG1_NU}),
                budgets=ten_to_hundred, replications=500, metric="absolute", name="fig1-left",
            ),
        ),
        "fig1-right": (
            "WarmStart-UCB with splits at 0.3-0.5 vs SRS, 5% flips, budgets 50-200",
            ExperimentConfig(
                scenario=flip05,
                roster=(AlgorithmSpec("srs"),) + tuple(
                    AlgorithmSpec("ws-ucb", f"ws-ucb@{s}", {"split": s}) for s in FIG1_SPLITS
                ),
                budgets=(50, 100, 150, 200), replications=500, metric="absolute", name="fig1-right",
            ),
        ),
        "fig1-mid": (
            "SRS, PartiBandits and WarmStart-UCB@0.5 at budgets 80-140, 5% flips",
            ExperimentConfig(
                scenario=flip05,
                roster=(
                    AlgorithmSpec("srs"),
                    AlgorithmSpec("partibandits"),
                    AlgorithmSpec("ws-ucb", "ws-ucb@0.5", {"split": 0.5}),
                ),
                budgets=tuple(range(80, 141, 10)), replications=500, metric="absolute", name="fig1-mid",
            ),
        ),
        "logit": (
            "logit DGP: Y ~ Bernoulli(expit((2x - 1)/nu)), X ~ Unif[0,1]",
            ExperimentConfig(
                scenario=ScenarioSpec("logit", nu=0.1),
                roster=_pb_vs_srs({f"nu={nu}": ScenarioSpec("logit", nu=nu) for nu in (0.05, 0.1, 0.2)}),
                budgets=ten_to_hundred, replications=500, metric="absolute", name="logit",
            ),
        ),
        "probit": (
            "probit DGP: Y ~ Bernoulli(Phi((x - 0.25)/nu)), X ~ Unif[-5,5]",
            ExperimentConfig(
                scenario=ScenarioSpec("probit", nu=1.0),
                roster=_pb_vs_srs({f"nu={nu}": ScenarioSpec("probit", nu=nu) for nu in (0.5, 1.0, 2.0)}),
                budgets=ten_to_hundred, replications=500, metric="absolute", name="probit",
            ),
        ),
        "thompson-proto": (
            "Thompson prototype: K=3 arms p=(0.1, 0.5, 0.8), T=3000, Beta(1,1)",
            ExperimentConfig(
                scenario=ScenarioSpec("arms", probs=(0.1, 0.5, 0.8)),
                roster=(AlgorithmSpec("thompson", params={"mode": "fixed-arms"}),),
                budgets=(3000,), replications=100, metric="absolute", name="thompson-proto",
            ),
        ),
        "thompson-binned": (
            "Thompson vs SRS and PartiBandits: 5 bins over [0,1], threshold 0.5, 5% flips, budgets 10-100",
            ExperimentConfig(
                scenario=flip05,
                roster=(
                    AlgorithmSpec("srs"),
                    AlgorithmSpec("thompson", params={"bins": 5}),
                    AlgorithmSpec("partibandits"),
                ),
                budgets=ten_to_hundred, replications=500, metric="absolute", name="thompson-binned",
            ),
        ),
        "csv-tails": (
            "file-backed pool: 10,000-row subsamples, top/bottom 5% of x (pass --csv PATH)",
            ExperimentConfig(
                scenario=ScenarioSpec("csv", path="pool.csv", tail_quantile=0.05),
                roster=(AlgorithmSpec("srs"), AlgorithmSpec("partibandits")),
                budgets=ten_to_hundred, replications=500, metric="absolute", name="csv-tails",
            ),
        ),
    }
    return presets


PRESETS = _build_presets()


def get_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name][1]
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
