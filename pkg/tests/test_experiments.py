"""Experiment layer: statistical campaigns against exact oracles.

Claims: Wilson intervals behave and cover an exact Poisson oracle, batched
simulators agree with the slow sample-based evaluators in distribution and
exactly as functions of counts, campaigns are deterministic per seed, the
maximal/decoupling reports satisfy their trivial dominations, and LIL
trajectories scale linearly in the kernel.
"""

import math

import numpy as np
import pytest
from scipy import stats

from poisson_chaos.chaos import ustat_mean, ustat_variance
from poisson_chaos.errors import ConfigurationError, SizeError
from poisson_chaos.experiments import (
    ExperimentPlan,
    decoupling_check,
    empirical_tail,
    lil_trajectory,
    maximal_inequality_check,
    simulate_integral_batch,
    simulate_ustat_batch,
    variance_check,
    wilson_interval,
)
from poisson_chaos.kernels import DiscreteKernel, StepKernel, l2_norm_sq, symmetrize_tensor
from poisson_chaos.bounds import BoundSpec
from poisson_chaos.norms import build_norm_table

UNIT_CELL = StepKernel(np.array([1.0]), np.array([1.0]))


def test_wilson_interval_contains_point_estimate():
    for k, n in ((0, 10), (5, 10), (10, 10), (37, 1000)):
        lo, hi = wilson_interval(k, n)
        assert 0.0 <= lo <= k / n <= hi <= 1.0
    with pytest.raises(ConfigurationError):
        wilson_interval(1, 0)


def test_integral_batch_is_compensated_poisson():
    draws = simulate_integral_batch(UNIT_CELL, 4.0, 50_000, 123)
    # I = N - 4 with N ~ Poisson(4)
    assert abs(draws.mean()) < 5 * math.sqrt(4.0 / 50_000)
    assert abs(draws.var() - 4.0) < 5 * 4.0 * math.sqrt(2.0 / 50_000) + 0.05
    assert np.all((draws + 4.0) % 1 == 0)


def test_ustat_batch_matches_mean_and_variance():
    rng = np.random.default_rng(7)
    cm = rng.uniform(0.3, 1.0, 3)
    v = symmetrize_tensor(rng.standard_normal((3, 3)))
    np.fill_diagonal(v, 0.0)
    g = StepKernel(cm, v)
    draws = simulate_ustat_batch(g, 2.0, 30_000, 99)
    mean, var = ustat_mean(g, 2.0), ustat_variance(g, 2.0)
    assert abs(draws.mean() - mean) < 5 * math.sqrt(var / 30_000)
    m4 = np.mean((draws - draws.mean()) ** 4)
    se_var = math.sqrt((m4 - draws.var() ** 2) / 30_000)
    assert abs(draws.var(ddof=1) - var) < 5 * se_var


def test_empirical_tail_against_exact_poisson_oracle():
    spec = BoundSpec("simplified", {"B": [1.0, 1.0], "T": 4.0})
    plan = ExperimentPlan(
        "integral", UNIT_CELL, 4.0, 100_000, (2.0, 4.0, 8.0), 777, bound=spec
    )
    result = empirical_tail(plan)
    covered = 0
    for u, lo, hi in zip(result.u_grid, result.wilson_low, result.wilson_high):
        exact = stats.poisson.cdf(math.floor(4 - u), 4) + stats.poisson.sf(
            math.ceil(4 + u) - 1, 4
        )
        covered += lo <= exact <= hi
    assert covered >= 2  # Wilson 95% bands cover the oracle at nearly all points
    assert result.calibrated_c is not None and result.calibrated_c > 0
    assert result.bound_values is not None


def test_calibrated_constant_stable_across_seeds():
    spec = BoundSpec("simplified", {"B": [1.0, 1.0], "T": 4.0})
    cs = []
    for seed in (777, 778, 779):
        plan = ExperimentPlan("integral", UNIT_CELL, 4.0, 50_000, (2.0, 4.0, 8.0), seed, bound=spec)
        cs.append(empirical_tail(plan).calibrated_c)
    assert (max(cs) - min(cs)) / np.mean(cs) < 0.10


def test_campaign_determinism():
    plan = ExperimentPlan("integral", UNIT_CELL, 4.0, 2000, (2.0, 4.0), 5)
    a = empirical_tail(plan)
    b = empirical_tail(plan)
    assert a.frequencies == b.frequencies
    assert a.summaries == b.summaries


def test_plan_validation():
    with pytest.raises(ConfigurationError):
        ExperimentPlan("integral", UNIT_CELL, 4.0, 0, (1.0,), 1)
    with pytest.raises(ConfigurationError):
        ExperimentPlan("integral", UNIT_CELL, 4.0, 10, (2.0, 1.0), 1)
    with pytest.raises(ConfigurationError):
        ExperimentPlan("oops", UNIT_CELL, 4.0, 10, (1.0,), 1)


def test_isometry_of_compensated_integral():
    rng = np.random.default_rng(1)
    cm = rng.uniform(0.3, 1.0, 3)
    v = symmetrize_tensor(rng.standard_normal((3, 3)))
    np.fill_diagonal(v, 0.0)
    g = StepKernel(cm, v)
    draws = simulate_integral_batch(g, 2.0, 30_000, 4)
    target = 2 * 2.0**2 * l2_norm_sq(g)
    m4 = np.mean((draws - draws.mean()) ** 4)
    se = math.sqrt((m4 - draws.var() ** 2) / 30_000)
    assert abs(draws.var(ddof=1) - target) < 5 * se
    assert abs(draws.mean()) < 5 * math.sqrt(target / 30_000)


def test_variance_check_passes_and_rejects_m1():
    rng = np.random.default_rng(2)
    cm = rng.uniform(0.3, 1.0, 3)
    v = symmetrize_tensor(rng.standard_normal((3, 3)))
    np.fill_diagonal(v, 0.0)
    report = variance_check(StepKernel(cm, v), 1.5, 10_000, 11)
    assert report.passed
    with pytest.raises(ConfigurationError):
        variance_check(StepKernel(cm, v), 1.5, 1, 11)


def test_variance_check_zero_kernel_exact():
    g = StepKernel(np.ones(2), np.zeros((2, 2)))
    report = variance_check(g, 1.0, 100, 0)
    assert report.passed and report.empirical_var == 0.0


def test_maximal_sup_dominates_endpoint():
    report = maximal_inequality_check(UNIT_CELL, 4.0, 300, (2.0, 4.0), 42)
    for ps, pe in zip(report.p_sup, report.p_end[1.0]):
        assert ps >= pe
    assert report.dominating_c in (1.0, 2.0, 4.0, 8.0, None)
    assert "p_sup" in report.manifest()


def test_decoupling_d1_coupled_equals_decoupled():
    g = DiscreteKernel(np.ones(3) / 3, np.array([1.0, -1.0, 0.5]))
    report = decoupling_check(g, 10, 2000, (1.0, 3.0), 11)
    assert report.p_coupled == report.p_decoupled[1.0]
    assert report.dominating_c == 1.0


def test_decoupling_d2_oracle():
    """Decoupled statistic equals brute-force enumeration over index pairs."""
    import itertools

    from poisson_chaos.point_process import replication_rng

    rng = np.random.default_rng(0)
    v = symmetrize_tensor(rng.standard_normal((2, 2)))
    g = DiscreteKernel(np.ones(2) / 2, v)
    M, n = 40, 5
    r = replication_rng(33, 0)
    xs = [r.choice(2, size=(M, n), p=[0.5, 0.5]) for _ in range(2)]
    brute = np.array(
        [
            sum(
                v[xs[0][m, i], xs[1][m, j]]
                for i, j in itertools.permutations(range(n), 2)
            )
            for m in range(M)
        ]
    )
    rows = np.repeat(np.arange(M), n)
    c1 = np.zeros((M, 2)); c2 = np.zeros((M, 2))
    np.add.at(c1, (rows, xs[0].ravel()), 1.0)
    np.add.at(c2, (rows, xs[1].ravel()), 1.0)
    dec = np.einsum("ma,ab,mb->m", c1, v, c2) - v[xs[0], xs[1]].sum(axis=1)
    assert np.allclose(dec, brute)


def test_decoupling_size_caps():
    g = DiscreteKernel(np.ones(2), np.zeros((2, 2)))
    with pytest.raises(SizeError):
        decoupling_check(g, 100, 10, (1.0,), 0)
    with pytest.raises(ConfigurationError):
        decoupling_check(g, 10, 0, (1.0,), 0)


def test_lil_trajectories_scale_linearly():
    a = lil_trajectory(UNIT_CELL, 10, 3, 7, min_exponent=2)
    scaled_kernel = StepKernel(np.array([1.0]), np.array([2.5]))
    b = lil_trajectory(scaled_kernel, 10, 3, 7, min_exponent=2)
    assert np.allclose(b.integral, 2.5 * a.integral)
    assert np.allclose(b.ustat_centered, 2.5 * a.ustat_centered)


def test_lil_budget_enforced():
    with pytest.raises(SizeError):
        lil_trajectory(UNIT_CELL, 30, 1, 0)
    with pytest.raises(ConfigurationError):
        lil_trajectory(UNIT_CELL, 10, 1, 0, min_exponent=1)


def test_lil_d1_normalized_band():
    result = lil_trajectory(UNIT_CELL, 20, 10, 2024, min_exponent=4)
    run_max = np.abs(result.normalized_integral()).max(axis=1)
    in_band = np.sum((run_max >= 0.5) & (run_max <= 1.5))
    assert in_band >= 8
    assert result.cluster.upper == pytest.approx(1.0)


def test_lil_csv_shape():
    result = lil_trajectory(UNIT_CELL, 6, 2, 3, min_exponent=2)
    lines = result.to_csv().strip().splitlines()
    assert lines[0] == "seed_index,t,integral,ustat_centered"
    assert len(lines) == 1 + 2 * len(result.times)
