"""Thompson sampling checks: arm concentration on fixed arms, and bias of the binned read-out.

    python scripts/thompson_checks.py --runs 100 --reps 500
"""
import argparse

import numpy as np

from partibandits.baselines import ThompsonConfig, run_thompson
from partibandits.envs import BernoulliArms
from partibandits.harness import AlgorithmSpec, ScenarioSpec, algorithm_rng, build_environment, run_algorithm

def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--horizon", type=int, default=3000)
    ap.add_argument("--budgets", type=int, nargs="+", default=[100, 1000, 3000])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = ThompsonConfig(mode="fixed-arms", probs=(0.1, 0.5, 0.8))
    arms = BernoulliArms(cfg.probs)
    shares = np.array([
        run_thompson(arms, cfg, args.horizon, np.random.default_rng([args.seed, r]))[1].notes["pulls"]
        for r in range(args.runs)
    ]) / args.horizon
    print(f"fixed arms p={cfg.probs}, T={args.horizon}, {args.runs} runs")
    print("  mean pull share per arm:", " ".join(f"{s:.3f}" for s in shares.mean(axis=0)))
    print(f"  best arm holds the majority in {np.mean(shares[:, -1] > 0.5):.0%} of runs")

    scen = ScenarioSpec("threshold", threshold=0.5, rho_le=0.05, rho_gt=0.05)
    roster = [AlgorithmSpec("srs"), AlgorithmSpec("thompson", params={"bins": 5}, scenario=scen)]
    print(f"\nbinned read-out, 5 bins, threshold 0.5, 5% flips, R={args.reps}")
    print(f"  {'N':>6} {'algorithm':<10} {'bias':>9} {'se':>8} {'rmse':>8}")
    for N in args.budgets:
        for a in roster:
            est = np.array([
                run_algorithm(a, build_environment(scen, args.seed, r), N,
                              algorithm_rng(args.seed, r, a.label, N))[0].value
                for r in range(args.reps)
            ])
            err = est - 0.5
            se = est.std(ddof=1) / np.sqrt(args.reps)
            print(f"  {N:>6} {a.label:<10} {err.mean():+9.5f} {se:8.5f} {np.sqrt(np.mean(err**2)):8.5f}")

if __name__ == "__main__":
    main()
