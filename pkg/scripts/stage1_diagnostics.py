"""Coverage and width of the Stage-1 disagreement interval across budgets and noise levels.

    python scripts/stage1_diagnostics.py --seeds 200
"""
import argparse

import numpy as np

from partibandits.envs import DgpSpec, LabelOracle
from partibandits.stage1 import learn_threshold_a2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--budgets", type=int, nargs="+", default=[25, 50, 100, 200])
    ap.add_argument("--rhos", type=float, nargs="+", default=[0.0, 0.05, 0.1])
    ap.add_argument("--delta", type=float, default=0.1)
    args = ap.parse_args()

    print(f"{'rho':>5} {'budget':>6} {'coverage':>8} {'width':>8} {'|t-0.5|':>8}")
    for rho in args.rhos:
        dgp = DgpSpec("threshold", 0.5, rho, rho)
        for b in args.budgets:
            cover, width, err = [], [], []
            for s in range(args.seeds):
                pool_seed, algo_seed = np.random.SeedSequence(s).spawn(2)
                res = learn_threshold_a2(LabelOracle(dgp.generate(pool_seed), b), b, args.delta,
                                         np.random.default_rng(algo_seed))
                lo, hi = res.region
                cover.append(lo <= 0.5 < hi)
                width.append(hi - lo)
                err.append(abs(res.classifier.threshold - 0.5))
            print(f"{rho:5.2f} {b:6d} {np.mean(cover):8.3f} {np.mean(width):8.4f} {np.mean(err):8.4f}")


if __name__ == "__main__":
    main()
