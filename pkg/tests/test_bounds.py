"""Bound layer: hand-derived values, shape properties, cluster sets.

Claims: hand evaluations at d=1 (including the enumeration of partition
terms in the moment bound), monotonicity in u and T, the zero-norm skip
rule, closed-form cluster-set extremes at d=1/2 and a rank-one d=3 case,
and the mixed L1(L2) norm against direct grid sums.
"""

import math

import numpy as np
import pytest

from poisson_chaos.bounds import (
    BoundSpec,
    curve_csv,
    integral_moment_bound,
    integral_tail_bound,
    lil_cluster_set,
    lil_normalizer,
    mixed_l1_l2_norm,
    ou_bound,
    ou_variance_bound,
    polynomial_tail_bound,
    power_length_bound,
    power_length_quantities,
    simplified_tail_bound,
    subgraph_tail_bound,
    ustat_tail_bound,
)
from poisson_chaos.errors import ConfigurationError, SizeError
from poisson_chaos.kernels import DiscreteKernel, Grid, symmetrize_tensor
from poisson_chaos.norms import NormTable, build_norm_table
from poisson_chaos.point_process import SpaceConfig


UNIT_TABLE = NormTable(d=1, entries={(0, (1,)): 1.0, (1, ()): 1.0})


def test_tail_bound_hand_value_d1():
    res = integral_tail_bound(UNIT_TABLE, T=1.0, u=1.0, c=1.0)
    assert res.value == pytest.approx(2.0 * math.exp(-1.0))
    assert res.exponent == pytest.approx(1.0)


def test_tail_bound_vacuous_at_small_u():
    res = integral_tail_bound(UNIT_TABLE, T=1.0, u=1e-14, c=1.0)
    assert res.value == pytest.approx(2.0, abs=1e-6)


def test_gaussian_regime_quadratic_scaling():
    table = NormTable(d=1, entries={(0, (1,)): 1.0, (1, ()): 0.0})
    e1 = integral_tail_bound(table, 1.0, 1.0).exponent
    e2 = integral_tail_bound(table, 1.0, 2.0).exponent
    assert e2 == pytest.approx(4 * e1)


def test_all_zero_norms_flagged():
    table = NormTable(d=1, entries={(0, (1,)): 0.0, (1, ()): 0.0})
    res = integral_tail_bound(table, 1.0, 1.0)
    assert res.trivial_zero and res.value == 0.0


def test_moment_bound_hand_enumeration_d1():
    # (k=0, one block) gives p^{1/2} T^{1/2}; (k=1, empty) gives p
    assert integral_moment_bound(UNIT_TABLE, T=1.0, p=4.0) == pytest.approx(6.0)
    with pytest.raises(ConfigurationError):
        integral_moment_bound(UNIT_TABLE, 1.0, 1.5)


def test_moment_bound_monotone_in_p_and_T():
    g = DiscreteKernel(np.ones(3), symmetrize_tensor(np.random.default_rng(0).standard_normal((3, 3))))
    table = build_norm_table(g)
    values_p = [integral_moment_bound(table, 1.0, p) for p in (2, 3, 5, 10)]
    values_T = [integral_moment_bound(table, T, 2.0) for T in (0.5, 1.0, 4.0)]
    assert values_p == sorted(values_p)
    assert values_T == sorted(values_T)


def test_simplified_matches_full_at_d1():
    a = integral_tail_bound(UNIT_TABLE, 1.0, 1.0).value
    b = simplified_tail_bound([1.0, 1.0], 1.0, 1.0).value
    assert a == pytest.approx(b)


def test_bounds_monotone_in_u():
    g = DiscreteKernel(np.ones(2), np.array([[1.0, 0.5], [0.5, -1.0]]))
    table = build_norm_table(g)
    us = np.linspace(0.1, 20.0, 40)
    vals = [integral_tail_bound(table, 2.0, u).value for u in us]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_full_bound_dominated_by_simplified_in_tail_regime():
    rng = np.random.default_rng(3)
    g = DiscreteKernel(
        rng.uniform(0.5, 1.5, 3), symmetrize_tensor(rng.standard_normal((3, 3)))
    )
    table = build_norm_table(g)
    B = [table.B(k) for k in range(3)]
    T = 2.0
    u_min = max(T ** ((2 - k) / 2) * B[k] for k in range(3))
    for u in np.linspace(u_min, 15 * u_min, 20):
        assert (
            integral_tail_bound(table, T, u).value
            <= simplified_tail_bound(B, T, u).value + 1e-12
        )


def test_ustat_bound_d1_reduces_and_large_u_regime():
    assert ustat_tail_bound([UNIT_TABLE], 1.0, 1.0).value == pytest.approx(
        integral_tail_bound(UNIT_TABLE, 1.0, 1.0).value
    )
    g = DiscreteKernel(np.ones(2), np.array([[1.0, 0.5], [0.5, 1.0]]))
    tables = [build_norm_table(DiscreteKernel(g.weights, g.values @ g.weights)),
              build_norm_table(g)]
    res = ustat_tail_bound(tables, 2.0, 1e9)
    assert res.regime.endswith("n=2,k=2,J=empty") or res.regime == "n=2,k=2,J=empty"
    assert res.exponent == pytest.approx((1e9 / tables[1].B(2)) ** 0.5, rel=1e-6)


def test_ustat_bound_gaussian_term_tracks_variance():
    from poisson_chaos.chaos import chaos_expand, ustat_variance

    rng = np.random.default_rng(8)
    g = DiscreteKernel(
        rng.uniform(0.5, 1.0, 3), symmetrize_tensor(rng.standard_normal((3, 3)))
    )
    T = 3.0
    decomp = chaos_expand(g)
    denom = sum(
        T ** (2 * g.order - n) * build_norm_table(gn).l2 ** 2
        for n, gn in enumerate(decomp.projected, start=1)
    )
    var = ustat_variance(g, T)
    # n! C(d,n)^2 coefficients: between min and max over n
    coeffs = [math.factorial(n) * math.comb(2, n) ** 2 for n in (1, 2)]
    assert min(coeffs) * denom <= var <= max(coeffs) * denom


def test_subgraph_bound_regimes():
    res = subgraph_tail_bound(var_st=4.0, t=1.0, b_dr=1.0, d=2, u=0.1)
    assert res.regime == "gaussian"
    assert subgraph_tail_bound(4.0, 1.0, 1.0, 2, 1e8).regime == "poisson"
    res_low = subgraph_tail_bound(4.0, 1.0, 1.0, 2, 1e-9)
    assert res_low.value == pytest.approx(2.0)


def test_power_length_closed_form_and_identity():
    space = SpaceConfig.torus(1, density=2.0)
    alpha, beta = 1.0, 1.5
    r = 0.1
    pairs = [(alpha, 1.0), (2 * alpha / 3, 1.0 / 3.0), (alpha / 2, 0.0),
             (2 * alpha, 2.0), (2 * alpha, 1.0)]
    A, B = power_length_quantities(space, r, beta, pairs)
    ball = 2.0 * 2.0 * beta * r  # density * unit-ball(1) * beta r
    assert B[(alpha, 1.0)] == pytest.approx(r**alpha * ball)
    assert A[(2 * alpha, 2.0)] == pytest.approx(2.0 * r ** (2 * alpha) * ball**2)
    # q-th power identity
    A2, B2 = power_length_quantities(space, r, beta, [(2 * alpha, 2.0)])
    assert B[(alpha, 1.0)] ** 2 == pytest.approx(B2[(2 * alpha, 2.0)])
    res, var = power_length_bound(A, B, t=2.0, u=1.0, beta=beta, alpha=alpha)
    assert 0 < res.value < 2 and var > 0


def test_ou_bound_variance_and_limits():
    assert ou_variance_bound(1.0, 1.0, 5.0) == pytest.approx(15.0)
    assert ou_variance_bound(2.0, 0.5, 1e-9) == pytest.approx((0.25 + 1.0) * 1e-9)
    res, var = ou_bound(rho=1.0, A=1.0, c_nu=1.0, T=5.0, u=100.0)
    assert res.regime == "square-root"


def test_mixed_norm_hand_banded_matrix():
    v = np.zeros((3, 3))
    v[0, 1] = v[1, 0] = 2.0
    v[1, 2] = v[2, 1] = 1.0
    g = DiscreteKernel(np.ones(3), v)
    rows = np.sqrt((v**2).sum(axis=1))
    assert mixed_l1_l2_norm(g, [1]) == pytest.approx(rows.sum())
    assert mixed_l1_l2_norm(g, [0, 1]) == pytest.approx(math.sqrt((v**2).sum()))
    assert polynomial_tail_bound(g, [0, 1], T=2.0, u=4.0) == pytest.approx(
        0.25 * 2.0 * math.sqrt((v**2).sum())
    )
    zero = DiscreteKernel(np.ones(2), np.zeros((2, 2)))
    assert polynomial_tail_bound(zero, [0], 1.0, 1.0) == 0.0


def test_cluster_set_d1_cauchy_schwarz():
    g = DiscreteKernel(np.ones(2), np.array([3.0, 4.0]))
    cs = lil_cluster_set(g)
    assert cs.upper == pytest.approx(5.0)
    assert cs.lower == pytest.approx(-5.0)
    assert cs.degeneracy_order == 1
    # phi attains the extreme in weighted L2
    attained = float(np.sum(g.values * cs.phi * g.weights))
    assert attained == pytest.approx(5.0)


def test_cluster_set_d2_spectrum_hull():
    g = DiscreteKernel(np.ones(2), np.diag([2.0, -1.0]))
    cs = lil_cluster_set(g)
    assert cs.upper == pytest.approx(2.0)
    assert cs.lower == pytest.approx(-1.0)
    # positive semidefinite kernel: lower extreme clipped at zero
    pos = DiscreteKernel(np.ones(2), np.diag([2.0, 1.0]))
    assert lil_cluster_set(pos).lower == 0.0


def test_cluster_set_d2_matches_dense_eigensolve():
    rng = np.random.default_rng(13)
    w = rng.uniform(0.5, 1.5, 5)
    v = symmetrize_tensor(rng.standard_normal((5, 5)))
    g = DiscreteKernel(w, v)
    cs = lil_cluster_set(g)
    sw = np.sqrt(w)
    evals = np.linalg.eigvalsh(v * sw[:, None] * sw[None, :])
    assert cs.upper == pytest.approx(max(evals[-1], 0.0), abs=1e-8)
    assert cs.lower == pytest.approx(min(evals[0], 0.0), abs=1e-8)


def test_cluster_set_d3_rank_one():
    a = np.array([1.0, 2.0, -1.0])
    g = DiscreteKernel(np.ones(3), np.einsum("i,j,k->ijk", a, a, a))
    cs = lil_cluster_set(g)
    assert cs.upper == pytest.approx(np.linalg.norm(a) ** 3, rel=1e-7)
    assert cs.lower == pytest.approx(-cs.upper)


def test_cluster_set_size_cap():
    g = DiscreteKernel(np.ones(2), np.zeros((2,) * 4))
    with pytest.raises(SizeError):
        lil_cluster_set(g)


def test_normalizer_values():
    t = 64.0
    assert lil_normalizer(t, 1) == pytest.approx(math.sqrt(2 * t * math.log(math.log(t))))
    assert lil_normalizer(t, 2, 1) == pytest.approx(
        t**1.5 * math.sqrt(2 * math.log(math.log(t)))
    )
    with pytest.raises(ConfigurationError):
        lil_normalizer(2.0, 1)


def test_bound_spec_validation_and_csv():
    with pytest.raises(ConfigurationError):
        BoundSpec("nonsense")
    with pytest.raises(ConfigurationError):
        BoundSpec("simplified", constant=0.0)
    spec = BoundSpec("integral_tail", {"table": UNIT_TABLE, "T": 1.0})
    assert spec.evaluate(1.0) == pytest.approx(2 * math.exp(-1.0))
    assert spec.exponent(1.0) == pytest.approx(1.0)
    csv_text = curve_csv([1.0], [integral_tail_bound(UNIT_TABLE, 1.0, 1.0)])
    assert csv_text.splitlines()[0] == "u,bound,regime"
