"""Acceptance suite: every criterion runs at its stated tolerance and
prints one pass/fail line (run with ``pytest -s`` to see them live).

The heavyweight detection sweep (criteria 8 and 9) shares one Monte Carlo
run; expect the full module to take on the order of an hour or two on a
small machine.
"""

import math
from collections import Counter

import numpy as np
import pytest

from plantedstar.graphmodels import (
    ModelParams,
    _sample_planted_with_codes,
    encode_pair,
    sample_coupled,
    sample_null_degrees,
    sample_null_edges,
)
from plantedstar.harness import (
    RunConfig,
    derive_rng,
    exact_enumeration,
    run_null_phase,
    run_rem_phase,
    run_tv_sweep,
)
from plantedstar.hypergeom import (
    HypergeomParams,
    exact_cumulants,
    log_pmf,
    log_pmf_table,
    pgf_real_rooted,
    stirling_cumulant_bound,
    tilted_tail_gaussian,
)
from plantedstar.lrt import log_lr_exact
from plantedstar.numerics import normal_upper_tail

from stats_helpers import chi_square_gof_pvalue
from test_lrt import random_degree_vector

SWEEP_N = 30_000
SWEEP_K = 150
SWEEP_REPLICATES = 2_000
PHASE_REPLICATES = 500
REM_REPLICATES = 200


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\n[criterion {num:02d}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num:02d}: {detail}"


def test_criterion_01_exact_oracle_suite():
    details = []
    ok = True
    for k in (2, 3):
        res = exact_enumeration(4, 3, k)
        ok &= abs(res.e0_lambda - 1.0) <= 1e-12
        ok &= abs(res.tv - res.tv_ordered) <= 1e-12
        cfg = RunConfig(
            model=ModelParams(n=4, m=3, k=k),
            replicates=1_000_000,
            seed=101,
            experiment="tv_sweep",
            grid=None,
            threads=0,
        )
        rec = run_tv_sweep(cfg)
        tv_hat = rec.per_point[0].metrics["tv_lr"]
        gap = abs(tv_hat.estimate - res.tv)
        ok &= gap <= 3 * tv_hat.stderr
        details.append(
            f"k={k}: E0[lr]={res.e0_lambda:.15f} tv={res.tv:.6f} "
            f"tv_hat={tv_hat.estimate:.6f}+-{tv_hat.stderr:.6f}"
        )
    _report(1, ok, "; ".join(details))


def test_criterion_02_k1_identity():
    rng = np.random.default_rng(202)
    fuzz_ok = True
    for _ in range(10_000):
        n = int(rng.integers(3, 80))
        N = n * (n - 1) // 2
        m = int(rng.integers(1, min(N, 5 * n) + 1))
        deg = random_degree_vector(rng, n, m)
        if log_lr_exact(deg, ModelParams(n=n, m=m, k=1)) != 0.0:
            fuzz_ok = False
            break
    sampled_ok = True
    for r in range(200):
        params = ModelParams(n=100, m=400, k=1)
        deg = sample_null_degrees(params, derive_rng(202, 1, 0, 0, r))
        if log_lr_exact(deg, params) != 0.0:
            sampled_ok = False
            break
    cfg = RunConfig(
        model=ModelParams(n=100, m=400, k=1),
        replicates=2000,
        seed=203,
        experiment="tv_sweep",
        grid=None,
        threads=0,
    )
    rec = run_tv_sweep(cfg)
    point = rec.per_point[0]
    tv_ok = True
    for name in ("tv_lr", "tv_md"):
        est = point.metrics[name]
        tv_ok &= abs(est.estimate) <= max(3 * est.stderr, 1e-12)
    ok = fuzz_ok and sampled_ok and tv_ok
    _report(
        2,
        ok,
        f"fuzz zeros={fuzz_ok} sampled zeros={sampled_ok} "
        f"tv_lr={point.metrics['tv_lr'].estimate:.4f} "
        f"tv_md={point.metrics['tv_md'].estimate:.4f}",
    )


def test_criterion_03_hypergeometric_suite():
    rng = np.random.default_rng(303)
    norm_worst = 0.0
    for _ in range(20):
        N = int(rng.integers(10, 50_000))
        K = int(rng.integers(1, N))
        D = int(rng.integers(1, min(N, 2000) + 1))
        _, table = log_pmf_table(HypergeomParams(N, K, D))
        total = math.fsum(math.exp(v) for v in table)
        norm_worst = max(norm_worst, abs(total - 1.0))
    norm_ok = norm_worst <= 1e-12

    bound_ok = True
    found = 0
    while found < 50:
        N = int(rng.integers(30, 400))
        K = int(rng.integers(1, N))
        D = int(rng.integers(1, N))
        p = HypergeomParams(N, K, D)
        sigma = math.sqrt(p.variance())
        if sigma < 2.0:
            continue
        found += 1
        kappa = exact_cumulants(p, 6)
        for r in (3, 4, 5, 6):
            bound_ok &= abs(kappa[r - 1]) <= stirling_cumulant_bound(r, sigma)

    pgf_ok = True
    found = 0
    while found < 200:
        N = int(rng.integers(6, 1500))
        K = int(rng.integers(1, N))
        D = int(rng.integers(1, N))
        p = HypergeomParams(N, K, D)
        if not 2 <= p.support_size <= 64:
            continue
        found += 1
        pgf_ok &= pgf_real_rooted(p) is True

    p = HypergeomParams(1_000_000, 200_000, 250_000)
    mu = p.mean()
    sigma = math.sqrt(p.variance())
    assert sigma >= 30
    xs = np.arange(int(mu - 14 * sigma), int(mu + 14 * sigma) + 1, dtype=float)
    logp = np.array([log_pmf(p, int(x)) for x in xs])
    tilt_worst = 0.0
    for a in (0.0, 1.0, 2.0):
        w = logp + (a / sigma) * (xs - mu)
        hi = w.max()
        log_denom = hi + math.log(np.exp(w - hi).sum())
        for delta in np.linspace(-2.0, 2.0, 9):
            mask = xs >= mu + sigma * (a + delta)
            wm = w[mask]
            log_num = wm.max() + math.log(np.exp(wm - wm.max()).sum())
            exact = math.exp(log_num - log_denom)
            approx = tilted_tail_gaussian(a, a + delta)
            tilt_worst = max(tilt_worst, abs(approx - exact) / exact)
    tilt_ok = tilt_worst <= 0.10

    ok = norm_ok and bound_ok and pgf_ok and tilt_ok
    _report(
        3,
        ok,
        f"norm worst={norm_worst:.2e} cumulant bound={bound_ok} "
        f"pgf 200/200={pgf_ok} tilted worst rel={tilt_worst:.3f}",
    )


def test_criterion_04_sampler_exactness():
    rng = derive_rng(404, 0, 0, 0, 0)
    params = ModelParams(n=4, m=3, k=1)
    counts = Counter()
    for _ in range(200_000):
        edges = sample_null_edges(params, rng)
        counts[tuple(sorted(encode_pair(u, v) for u, v in edges))] += 1
    p_null = chi_square_gof_pvalue(list(counts.values()), [1 / 20] * 20)

    import itertools

    params = ModelParams(n=4, m=3, k=2)
    enum = exact_enumeration(4, 3, 2)
    combo_index = {
        combo: i for i, combo in enumerate(itertools.combinations(range(6), 3))
    }
    expected = np.array(enum.lr_table) / enum.n_graphs
    rng = derive_rng(404, 1, 0, 0, 0)
    plant_counts = np.zeros(20, dtype=np.int64)
    for _ in range(200_000):
        _, star, extra = _sample_planted_with_codes(params, rng)
        combo = tuple(sorted(np.concatenate([star, extra]).tolist()))
        plant_counts[combo_index[combo]] += 1
    p_plant = chi_square_gof_pvalue(plant_counts, expected)

    n, m = 100, 500
    params = ModelParams(n=n, m=m, k=1)
    rng = derive_rng(404, 2, 0, 0, 0)
    marg_counts = np.zeros(n, dtype=np.int64)
    for _ in range(100_000):
        deg = sample_null_degrees(params, rng)
        marg_counts[deg.degrees[0]] += 1
    lo, table = log_pmf_table(HypergeomParams(params.N, n - 1, m))
    probs = np.zeros(n)
    probs[lo : lo + table.size] = np.exp(table)
    p_marg = chi_square_gof_pvalue(marg_counts, probs)

    ok = p_null > 0.001 and p_plant > 0.001 and p_marg > 0.001
    _report(
        4,
        ok,
        f"null uniformity p={p_null:.4f} planted pmf p={p_plant:.4f} "
        f"degree marginal p={p_marg:.4f}",
    )


def test_criterion_05_coupling_domination():
    params = ModelParams(n=12, m=30, k=3)
    violations = 0
    rng = derive_rng(505, 0, 0, 0, 0)
    for _ in range(1_000_000):
        s = sample_coupled(params, rng)  # construction re-checks invariants
        d1 = s.degrees.degrees
        d0 = s.coupled_null.degrees
        bound = d0.copy()
        bound[s.leaves] += 1
        bound[s.hub] = d0[s.hub] + s.k
        if np.any(d1 > bound):
            violations += 1
    _report(5, violations == 0, f"violations={violations} over 1e6 coupled samples")


def test_criterion_06_rem_phase_transition():
    cfg = RunConfig(
        model=ModelParams(n=10**6, m=1, k=1),
        replicates=REM_REPLICATES,
        seed=606,
        experiment="rem_phase",
        grid=(0.5, 0.25, 0.125),
        grid_name="c",
        threads=0,
    )
    rec = run_rem_phase(cfg)
    med = {p.grid_value: p.metrics["z_q50"].estimate for p in rec.per_point}
    bands_ok = (
        0.9 <= med[0.5] <= 1.1 and 0.35 <= med[0.25] <= 0.65 and med[0.125] <= 0.1
    )
    # the true IQR shrinks only ~8% per decade of n, so resolving the trend
    # needs far more replicates than the median bands do
    iqrs = []
    trend_sizes = ((10**4, 20000), (10**5, 20000), (10**6, 20000), (10**7, 8000))
    for size_idx, (n_energy, reps) in enumerate(trend_sizes):
        cfg = RunConfig(
            model=ModelParams(n=n_energy, m=1, k=1),
            replicates=reps,
            seed=607 + size_idx,
            experiment="rem_phase",
            grid=(0.25,),
            grid_name="c",
            threads=0,
        )
        rec = run_rem_phase(cfg)
        point = rec.per_point[0]
        iqrs.append(
            point.metrics["z_q75"].estimate - point.metrics["z_q25"].estimate
        )
    trend_ok = all(a > b for a, b in zip(iqrs, iqrs[1:]))
    ok = bands_ok and trend_ok
    _report(
        6,
        ok,
        f"medians c=1/2:{med[0.5]:.3f} c=1/4:{med[0.25]:.3f} c=1/8:{med[0.125]:.4f}; "
        f"IQR trend {['%.3f' % v for v in iqrs]}",
    )


def test_criterion_07_null_lambda_phase():
    cfg = RunConfig(
        model=ModelParams.from_c(SWEEP_N, SWEEP_K, 0.25),
        replicates=PHASE_REPLICATES,
        seed=707,
        experiment="null_phase",
        grid=(0.5, 0.25, 0.125),
        grid_name="c",
        threads=0,
    )
    rec = run_null_phase(cfg)
    med = {p.grid_value: p.metrics["lambda_q50"].estimate for p in rec.per_point}
    ok = (
        0.8 <= med[0.5] <= 1.2
        and 0.3 <= med[0.25] <= 0.7
        and med[0.125] <= 0.2
    )
    _report(
        7,
        ok,
        f"median lr c=1/2:{med[0.5]:.3f} c=1/4:{med[0.25]:.3f} "
        f"c=1/8:{med[0.125]:.3f}",
    )


@pytest.fixture(scope="module")
def tv_sweep_record():
    cfg = RunConfig(
        model=ModelParams.from_gamma(SWEEP_N, SWEEP_K, 0.0),
        replicates=SWEEP_REPLICATES,
        seed=808,
        experiment="tv_sweep",
        grid=(-1.0, 0.0, 1.0),
        threads=0,
    )
    return run_tv_sweep(cfg)


def test_criterion_08_tv_curve_band(tv_sweep_record):
    points = tv_sweep_record.per_point
    tv = [p.metrics["tv_lr"].estimate for p in points]
    tv_md = [p.metrics["tv_md"].estimate for p in points]
    targets = [p.metrics["tv_target"].estimate for p in points]
    band_ok = all(abs(a - t) <= 0.15 for a, t in zip(tv, targets))
    decreasing_ok = all(a > b for a, b in zip(tv, tv[1:]))
    md_ok = all(abs(a - b) <= 0.05 for a, b in zip(tv_md, tv))
    ok = band_ok and decreasing_ok and md_ok
    _report(
        8,
        ok,
        "tv_lr=%s targets=%s tv_md=%s"
        % (
            ["%.3f" % v for v in tv],
            ["%.3f" % v for v in targets],
            ["%.3f" % v for v in tv_md],
        ),
    )


def test_criterion_09_agreement_and_recovery(tv_sweep_record):
    points = tv_sweep_record.per_point
    center = next(p for p in points if p.grid_value == 0.0)
    agree_ok = (
        center.metrics["disagree_p0"].estimate <= 0.15
        and center.metrics["disagree_p1"].estimate <= 0.15
    )
    rec = [p.metrics["recovery"].estimate for p in points]
    targets = [p.metrics["tv_target"].estimate for p in points]
    rec_band_ok = all(abs(r - t) <= 0.15 for r, t in zip(rec, targets))
    rec_mono_ok = all(a >= b for a, b in zip(rec, rec[1:]))
    ok = agree_ok and rec_band_ok and rec_mono_ok
    _report(
        9,
        ok,
        "disagree_p0=%.3f disagree_p1=%.3f recovery=%s targets=%s"
        % (
            center.metrics["disagree_p0"].estimate,
            center.metrics["disagree_p1"].estimate,
            ["%.3f" % v for v in rec],
            ["%.3f" % v for v in targets],
        ),
    )


def test_criterion_10_determinism():
    def run(threads):
        cfg = RunConfig(
            model=ModelParams(n=30, m=60, k=4),
            replicates=200,
            seed=1010,
            experiment="tv_sweep",
            grid=(0.0, 1.0),
            threads=threads,
            store_replicates=True,
        )
        return run_tv_sweep(cfg)

    rec1, rec8 = run(1), run(8)
    ok = True
    for p1, p8 in zip(rec1.per_point, rec8.per_point):
        ok &= p1.replicate_metrics == p8.replicate_metrics
        ok &= p1.metrics == p8.metrics
    _report(10, ok, "per-replicate metrics identical at threads=1 and threads=8")
