"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import PRESETS, dump_config, get_preset, load_config
from .harness import ConfigError, ExperimentConfig, ReplicationError, emit_csv, plot_csv, replay, run_experiment

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _budgets(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(b) for b in text.split(",") if b.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"budgets must be comma-separated integers, got {text!r}")


def _add_source(p: argparse.ArgumentParser, required: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--preset", help="built-in preset name (see `presets`)")
    src.add_argument("--config", help="TOML experiment file")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="master seed (default: $PARTIBANDITS_SEED or the config's)")
    p.add_argument("--budgets", type=_budgets, help="comma-separated label budgets")
    p.add_argument("--reps", type=int, help="replications per (algorithm, budget)")
    p.add_argument("--metric", choices=("squared", "absolute"))
    p.add_argument("--parallelism", type=int)
    p.add_argument("--csv", dest="csv_path", help="data file for csv scenarios")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partibandits", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write its CSV")
    _add_source(run)
    _add_overrides(run)
    run.add_argument("--out", default="results.csv")
    run.add_argument("--plot", metavar="DIR", help="also write an SVG error-vs-budget chart to DIR")

    pre = sub.add_parser("presets", help="list built-in presets")
    pre.add_argument("--show", metavar="NAME", help="print a preset as a TOML config")

    val = sub.add_parser("validate", help="check a config without running it")
    _add_source(val)
    _add_overrides(val)

    rep = sub.add_parser("replay", help="re-run one (algorithm, budget, replication) and print its trace")
    _add_source(rep, required=False)
    _add_overrides(rep)
    rep.add_argument("--algo", required=True, help="roster label or algorithm name")
    rep.add_argument("--budget", type=int, required=True)
    rep.add_argument("--rep", type=int, required=True)
    return parser


def effective_config(args) -> ExperimentConfig:
    """Preset or file, with command-line overrides applied on top."""
    if getattr(args, "config", None):
        config = load_config(args.config)
    else:
        config = get_preset(getattr(args, "preset", None) or "default")
    changes = {}
    env_seed = os.environ.get("PARTIBANDITS_SEED")
    if args.seed is not None:
        changes["seed"] = args.seed
    elif env_seed is not None:
        try:
            changes["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError("PARTIBANDITS_SEED", f"not an integer: {env_seed!r}") from None
    if args.budgets is not None:
        changes["budgets"] = args.budgets
    if args.reps is not None:
        changes["replications"] = args.reps
    if args.metric is not None:
        changes["metric"] = args.metric
    if args.parallelism is not None:
        changes["parallelism"] = args.parallelism
    config = dataclasses.replace(config, **changes)
    if args.csv_path:
        def with_path(s):
            return dataclasses.replace(s, path=args.csv_path) if s is not None and s.kind == "csv" else s

        config = dataclasses.replace(
            config,
            scenario=with_path(config.scenario),
            roster=tuple(dataclasses.replace(a, scenario=with_path(a.scenario)) for a in config.roster),
        )
    return config.validate()


def _cmd_run(args) -> int:
    config = effective_config(args)
    table = run_experiment(config)
    emit_csv(table, args.out)
    print(f"wrote {len(table.rows)} rows ({config.metric} error, q={config.percentile}) to {args.out}")
    if args.plot:
        print(f"plot: {plot_csv(args.out, args.plot, f'{config.name} ({config.metric} error)')}")
    return 0


def _cmd_presets(args) -> int:
    if args.show:
        print(dump_config(get_preset(args.show)), end="")
        return 0
    width = max(len(n) for n in PRESETS)
    for name, (about, _) in PRESETS.items():
        print(f"{name:<{width}}  {about}")
    return 0


def _cmd_validate(args) -> int:
    config = effective_config(args)
    print(f"ok: {config.name}: {len(config.roster)} algorithms x {len(config.budgets)} budgets, "
          f"{config.replications} replications, seed {config.seed}")
    return 0


def _cmd_replay(args) -> int:
    config = effective_config(args)
    est, trace, err = replay(config, args.algo, args.budget, args.rep)
    print("round\tstage\tgroup\tpoint\tx\ty\tscores")
    for r in trace:
        scores = "" if r.scores is None else ",".join(format(s, ".6g") for s in r.scores)
        print(f"{r.round}\t{r.stage}\t{r.group}\t{r.point}\t{r.x:.12g}\t{r.y:g}\t{scores}")
    print(f"# estimate={est.value:.12g} labels_spent={est.labels_spent} {config.metric}_error={err:.12g}")
    return 0


COMMANDS = {"run": _cmd_run, "presets": _cmd_presets, "validate": _cmd_validate, "replay": _cmd_replay}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReplicationError as exc:
        c = exc.coordinates
        print(f"error: {exc}", file=sys.stderr)
        print(f"replay with: partibandits replay --seed {c['seed']} --algo '{c['algorithm']}' "
              f"--budget {c['budget']} --rep {c['rep']}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
