"""Acceptance suite: one test per criterion, at the stated scale and tolerance.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
ends with one ``[PASS]`` / ``[FAIL]`` line per criterion. Every Monte Carlo
criterion uses master seed 0.
"""
import dataclasses
import math

import mpmath
import numpy as np
import pytest

from partibandits.baselines import ThompsonConfig, run_srs, run_thompson
from partibandits.config import get_preset
from partibandits.core import StratificationScheme
from partibandits.envs import BernoulliArms, DgpSpec, LabelOracle
from partibandits.harness import (
    AlgorithmSpec,
    ExperimentConfig,
    ScenarioSpec,
    algorithm_rng,
    build_environment,
    emit_csv,
    run_algorithm,
    run_experiment,
)
from partibandits.stage1 import learn_threshold_a2
from partibandits.two_stage import PartiBanditsConfig, run_partibandits
from partibandits.ws_ucb import compute_cn, run_warmstart_ucb

SEED = 0
FLIP05 = ScenarioSpec("threshold", threshold=0.5, rho_le=0.05, rho_gt=0.05)


def cn_reference(delta, c1, c2, n):
    mpmath.mp.dps = 50
    d, c1, c2, n = (mpmath.mpf(v) for v in (delta, c1, c2, n))
    l2, lc = mpmath.log(2 / d), mpmath.log(c2 / d)
    first = 2 * mpmath.sqrt(2 * c1 * l2 * lc)
    second = 2 * mpmath.sqrt(c1 * l2 * (1 + c2 + lc)) / ((1 - d) * mpmath.sqrt(2 * l2)) / n**2
    return float(first + second)


@pytest.fixture(scope="module")
def fig1_right_serial():
    cfg = get_preset("fig1-right")
    assert cfg.seed == SEED and cfg.parallelism == 1
    return cfg, run_experiment(cfg)


@pytest.fixture(scope="module")
def unbiasedness_runs():
    """Signed estimates for the four unbiasedness algorithms, R = 10,000 at N = 100."""
    roster = (
        AlgorithmSpec("srs"),
        AlgorithmSpec("strs", params={"split": "true"}),
        AlgorithmSpec("ws-ucb", params={"split": "true"}),
        AlgorithmSpec("partibandits"),
    )
    R, N = 10_000, 100
    est = {a.label: np.empty(R) for a in roster}
    for rep in range(R):
        env = build_environment(FLIP05, SEED, rep)
        for a in roster:
            est[a.label][rep] = run_algorithm(a, env, N, algorithm_rng(SEED, rep, a.label, N))[0].value
    return est


@pytest.mark.criterion(1, "C_N formula oracle and floor")
def test_c1_formula_oracle(detail):
    raw = compute_cn(0.1, 1, 1, 100, floor=False)
    ref = cn_reference(0.1, 1, 1, 100)
    detail.append(f"C_N={raw:.10f} ref={ref:.10f} |diff|={abs(raw - ref):.1e}")
    assert abs(raw - ref) <= 1e-9
    assert abs(compute_cn(0.1, 1, 1, 100) - 7.4287) <= 1e-3
    assert compute_cn(0.5, 1e-6, 1e-6, 100) == 1.0


@pytest.mark.criterion(2, "unbiasedness within 3 SE (R=10,000, N=100)")
def test_c2_unbiasedness(unbiasedness_runs, detail):
    ok = True
    for label, values in unbiasedness_runs.items():
        se = values.std(ddof=1) / math.sqrt(values.size)
        z = (values.mean() - 0.5) / se
        detail.append(f"{label} z={z:+.2f}")
        ok &= abs(z) <= 3.0
    assert ok


@pytest.mark.criterion(3, "SRS MSE within [0.8, 1.2] x 0.0025")
def test_c3_srs_calibration(unbiasedness_runs, detail):
    mse = float(np.mean((unbiasedness_runs["srs"] - 0.5) ** 2))
    detail.append(f"MSE={mse:.6f} ratio={mse / 0.0025:.3f}")
    assert 0.8 * 0.0025 <= mse <= 1.2 * 0.0025


@pytest.mark.criterion(4, "WS-UCB vs SRS ordering and split monotonicity (fig1-right, R=500)")
def test_c4_right_panel(fig1_right_serial, detail):
    cfg, table = fig1_right_serial
    splits = ["ws-ucb@0.3", "ws-ucb@0.4", "ws-ucb@0.5"]
    p90 = {(r.algorithm, r.budget): r.percentile_error for r in table.rows}
    below_srs = []
    inversions = []
    for b in cfg.budgets:
        row = " ".join(f"{a.split('@')[-1]}={p90[(a, b)]:.4f}" for a in ["srs", *splits])
        detail.append(f"N={b}: {row}")
        below_srs += [(a, b) for a in splits if p90[(a, b)] > p90[("srs", b)]]
        inversions += [(b, lo, hi) for lo, hi in zip(splits, splits[1:]) if p90[(hi, b)] > p90[(lo, b)]]
    detail.append(f"(a) violations={below_srs}")
    detail.append(f"(b) inversions={inversions}")
    allowed = [inv for inv in inversions if inv[0] == min(cfg.budgets)]
    assert not below_srs, "(a) WS-UCB above SRS"
    assert len(allowed) <= 1 and len(allowed) == len(inversions), "(b) split ordering"


@pytest.mark.criterion(5, "PartiBandits crosses SRS and orders by nu (R=500)")
def test_c5_left_panel(detail):
    base = get_preset("fig1-left")
    roster = tuple(a for a in base.roster if a.scenario.rho_le in (0.0, 0.05, 0.1))
    cfg = dataclasses.replace(base, roster=roster)
    table = run_experiment(cfg)
    p90 = {(r.algorithm, r.budget): r.percentile_error for r in table.rows}
    ok = True
    at_100 = []
    for nu in (0.0, 0.05, 0.1):
        pb, srs = f"partibandits[nu={nu}]", f"srs[nu={nu}]"
        wins = [p90[(pb, b)] < p90[(srs, b)] for b in cfg.budgets]
        cross = next((b for k, b in enumerate(cfg.budgets) if all(wins[k:])), None)
        detail.append(f"nu={nu}: crossing at {cross}, N=100 pb={p90[(pb, 100)]:.4f} srs={p90[(srs, 100)]:.4f}")
        ok &= cross is not None
        at_100.append(p90[(pb, 100)])
    ok &= at_100[0] < at_100[1] < at_100[2]
    assert ok


@pytest.mark.criterion(6, "N x MSE of WS-UCB within a factor 4 over N=100..1600 (R=2,000)")
def test_c6_rate_shape(detail):
    cfg = ExperimentConfig(
        scenario=FLIP05,
        roster=(AlgorithmSpec("ws-ucb", params={"split": "true"}),),
        budgets=(100, 200, 400, 800, 1600),
        replications=2000, metric="squared", seed=SEED, name="rate-shape",
    )
    table = run_experiment(cfg)
    scaled = [r.budget * r.mean_error for r in table.series("ws-ucb")]
    detail.append("N*MSE=" + ",".join(f"{v:.4f}" for v in scaled) + f" spread={max(scaled) / min(scaled):.2f}")
    assert max(scaled) / min(scaled) <= 4.0


@pytest.mark.criterion(7, "warm-start floor and budget exactness (1,000 random runs)")
def test_c7_warm_floor(detail):
    gen = np.random.default_rng(SEED)
    runs = checked = exhausted = redrawn = 0
    while runs < 1000:
        G = int(gen.integers(1, 9))
        N = int(gen.integers(G, 501))
        tau = float(gen.choice([0.0, 0.25, 0.5, 1.0]))
        cuts = np.sort(gen.uniform(0, 1, G - 1))
        scheme = StratificationScheme.from_cuts(cuts, np.diff(np.concatenate(([0.0], cuts, [1.0]))))
        # small pools make exhaustion likely; a stratum without any pool point is not a valid input
        pool = DgpSpec("threshold", 0.5, 0.05, 0.05, pool_size=int(gen.integers(N, 20 * N + 1))).generate(gen)
        if len(scheme) != G or np.unique(scheme.assign(pool.x)).size < G:
            redrawn += 1
            continue
        runs += 1
        _, trace = run_warmstart_ucb(LabelOracle(pool, N), scheme, N, gen, tau=tau)
        n = np.bincount([r.group for r in trace], minlength=G)
        assert n.sum() == N
        if trace.notes["exhausted"]:
            exhausted += 1
            continue
        assert n.min() >= math.floor(round(tau * N / G, 9))
        checked += 1
    detail.append(f"floor checked on {checked} runs, {exhausted} with an exhausted stratum, "
                  f"{redrawn} draws with an empty stratum redrawn")


@pytest.mark.criterion(8, "Stage-1 interval coverage >= 90% and width shrinkage")
def test_c8_stage1(detail):
    dgp = DgpSpec("threshold", 0.5, 0.05, 0.05)
    hits = 0
    for s in range(500):
        ss = np.random.SeedSequence(SEED, spawn_key=(8, s))
        pool_seed, algo_seed = ss.spawn(2)
        res = learn_threshold_a2(LabelOracle(dgp.generate(pool_seed), 100), 100, 0.1,
                                 np.random.default_rng(algo_seed))
        lo, hi = res.region
        hits += lo <= 0.5 < hi
    detail.append(f"coverage={hits / 500:.3f}")
    clean = DgpSpec("threshold", 0.5, 0.0, 0.0)
    ratios = []
    for B in (25, 50):
        widths = {B: [], 2 * B: []}
        for s in range(100):
            ss = np.random.SeedSequence(SEED, spawn_key=(88, s))
            pool_seed, algo_seed = ss.spawn(2)
            pool = clean.generate(pool_seed)
            for b in (B, 2 * B):
                res = learn_threshold_a2(LabelOracle(pool, b), b, 0.1, np.random.default_rng(algo_seed))
                widths[b].append(res.region[1] - res.region[0])
        w1, w2 = np.mean(widths[B]), np.mean(widths[2 * B])
        ratios.append(w1 / w2)
        detail.append(f"width({B})={w1:.4f} width({2 * B})={w2:.4f}")
    assert hits / 500 >= 0.90
    assert all(r >= 1.5 for r in ratios)


@pytest.mark.criterion(9, "degenerate reductions reproduce SRS traces exactly")
def test_c9_reductions(detail):
    dgp = DgpSpec("threshold", 0.5, 0.05, 0.05)
    cases = 0
    for s in range(20):
        pool = dgp.generate(np.random.SeedSequence(SEED, spawn_key=(9, s)))
        N = 20 + 7 * s
        ref = lambda n: run_srs(LabelOracle(pool, n), n, np.random.default_rng(s))  # noqa: E731
        srs_est, srs_tr = ref(N)
        est, tr = run_warmstart_ucb(LabelOracle(pool, N), StratificationScheme.single(), N,
                                    np.random.default_rng(s))
        assert tr.draws() == srs_tr.draws() and est.value == srs_est.value
        est, tr = run_thompson(LabelOracle(pool, N), ThompsonConfig(bins=1), N, np.random.default_rng(s))
        assert tr.draws() == srs_tr.draws() and est.value == srs_est.value
        half_est, half_tr = ref(math.ceil(N / 2))
        est, tr = run_partibandits(LabelOracle(pool, N), PartiBanditsConfig(N, subroutine="constant"),
                                   np.random.default_rng(s))
        assert tr.draws() == half_tr.draws() and est.value == half_est.value
        cases += 3
    detail.append(f"{cases} seed-matched trace comparisons")


@pytest.mark.criterion(10, "Thompson: best arm majority; binned bias exceeds SRS at N=3000")
def test_c10_thompson(detail):
    cfg = ThompsonConfig(mode="fixed-arms", probs=(0.1, 0.5, 0.8))
    arms = BernoulliArms(cfg.probs)
    majority = 0
    for s in range(100):
        _, tr = run_thompson(arms, cfg, 3000, np.random.default_rng([SEED, 10, s]))
        majority += tr.notes["pulls"][2] > 1500
    detail.append(f"best-arm majority in {majority}/100")

    roster = (AlgorithmSpec("srs"), AlgorithmSpec("thompson", params={"bins": 5}))
    R, N = 500, 3000
    est = {a.label: np.empty(R) for a in roster}
    for rep in range(R):
        env = build_environment(FLIP05, SEED, rep)
        for a in roster:
            bound = dataclasses.replace(a, scenario=FLIP05)
            est[a.label][rep] = run_algorithm(bound, env, N, algorithm_rng(SEED, rep, a.label, N))[0].value
    bias = {k: abs(v.mean() - 0.5) for k, v in est.items()}
    detail.append(f"|bias| thompson={bias['thompson']:.5f} srs={bias['srs']:.5f}")
    assert majority >= 95
    assert bias["thompson"] > bias["srs"]


@pytest.mark.criterion(11, "fig1-right CSV byte-identical at parallelism 1 vs 8")
def test_c11_parallel_invariance(fig1_right_serial, tmp_path, detail):
    cfg, serial = fig1_right_serial
    a, b = tmp_path / "p1.csv", tmp_path / "p8.csv"
    emit_csv(serial, a)
    emit_csv(run_experiment(dataclasses.replace(cfg, parallelism=8)), b)
    detail.append(f"{len(a.read_bytes())} bytes compared")
    assert a.read_bytes() == b.read_bytes()
