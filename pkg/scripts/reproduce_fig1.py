"""Run both error-vs-budget panels (and the 80-140 budget grid) and write CSV + SVG files.

    python scripts/reproduce_fig1.py --out runs/fig1 --reps 500
"""
import argparse
import dataclasses
import time
from pathlib import Path

from partibandits.config import get_preset
from partibandits.harness import emit_csv, plot_csv, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/fig1")
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--parallelism", type=int, default=1)
    ap.add_argument("--presets", nargs="+", default=["fig1-left", "fig1-right", "fig1-mid"])
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.presets:
        cfg = dataclasses.replace(get_preset(name), replications=args.reps, seed=args.seed,
                                  parallelism=args.parallelism)
        t0 = time.perf_counter()
        table = run_experiment(cfg)
        csv_path = out / f"{name}.csv"
        emit_csv(table, csv_path)
        svg = plot_csv(csv_path, out, f"{name}: 90th-percentile {cfg.metric} error")
        print(f"{name}: {len(table.rows)} rows in {time.perf_counter() - t0:.1f}s -> {csv_path}, {svg}")
        for label in sorted({r.algorithm for r in table.rows}):
            series = " ".join(f"{r.percentile_error:.4f}" for r in table.series(label))
            print(f"  {label:<24} {series}")


if __name__ == "__main__":
    main()
