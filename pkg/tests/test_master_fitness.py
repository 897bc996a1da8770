import math

import numpy as np
import pytest
from scipy import stats
from hypothesis import given, settings
from hypothesis import strategies as st

from adjpossible.errors import ConvergenceError
from adjpossible.laws.fitness import bb_closed_form, heterogeneous_fitness_limit
from adjpossible.laws.master import stationary_distribution, stretched_exponential_r2, tail_slope


# --- stationary distribution ----------------------------------------------------

def test_linear_kernel_tail_near_minus_two():
    p = stationary_distribution(1.0, 0.1, 100_000)
    assert -2.1 <= tail_slope(p, 1000, 10_000) <= -1.9


def test_linear_kernel_exponent_tracks_self_consistent_normalizer():
    # with a self-consistent mean the tail exponent is 2 + m once truncation is negligible
    for m in (0.5, 1.0):
        p = stationary_distribution(1.0, m, 100_000)
        assert tail_slope(p, 1000, 10_000) == pytest.approx(-(2 + m), abs=0.02)


def test_sublinear_kernel_is_stretched_exponential():
    p = stationary_distribution(0.5, 0.1, 10_000)
    assert stretched_exponential_r2(p, 0.5, 10, 1000) > 0.99


def test_recursion_matches_direct_products():
    m, k_max = 0.7, 200
    p = stationary_distribution(1.0, m, k_max)
    mu = float(np.arange(1, k_max + 1) @ p)
    # independent check of the recursion with the returned normalizer
    q = [1.0]
    for k in range(2, k_max + 1):
        q.append(q[-1] * (k - 1) / mu / (m + k / mu))
    q = np.array(q) / sum(q)
    np.testing.assert_allclose(p, q, rtol=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.05, 3.0), st.integers(100, 3000))
def test_output_is_decreasing_probability_vector(lam, m, k_max):
    p = stationary_distribution(lam, m, k_max)
    assert len(p) == k_max
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) < 1e-8
    assert np.all(np.diff(p) <= 0)


def test_stationary_validation_and_nonconvergence():
    with pytest.raises(ValueError):
        stationary_distribution(1.5, 1.0, 1000)
    with pytest.raises(ValueError):
        stationary_distribution(1.0, 0.0, 1000)
    with pytest.raises(ValueError):
        stationary_distribution(1.0, 1.0, 50)
    with pytest.raises(ConvergenceError):
        stationary_distribution(1.0, 0.3, 1000, max_iter=1)


# --- closed-form exponential growth -----------------------------------------------

def test_closed_form_initial_value():
    eta, g, rl = 0.2, 0.4, 3.0
    want = rl ** (1 / (1 - g)) * (eta / (1 - g)) ** (-1 / (1 - g))
    assert bb_closed_form(eta, g, rl, 0.0) == pytest.approx(want, rel=1e-14)


def test_closed_form_doubles_each_step():
    k = bb_closed_form(math.log(2), 0.0, 1.0, np.arange(6.0))
    np.testing.assert_allclose(k[1:] / k[:-1], 2.0, rtol=1e-12)


@pytest.mark.parametrize("t", [1.0, 5.0, 10.0])
@pytest.mark.parametrize("eta,gamma", [(0.1, 0.0), (0.3, 0.5), (1.0, 0.9)])
def test_closed_form_growth_rate_by_finite_difference(t, eta, gamma):
    h = 1e-4
    fd = (bb_closed_form(eta, gamma, 2.0, t + h) - bb_closed_form(eta, gamma, 2.0, t - h)) / (2 * h)
    want = eta / (1 - gamma) * bb_closed_form(eta, gamma, 2.0, t)
    assert fd == pytest.approx(want, rel=1e-6)


def test_closed_form_domain():
    for args in [(0.0, 0.2, 1.0, 1.0), (-0.1, 0.2, 1.0, 1.0), (0.1, 1.0, 1.0, 1.0),
                 (0.1, 0.2, 0.0, 1.0), (0.1, 0.2, 1.0, -1.0)]:
        with pytest.raises(ValueError):
            bb_closed_form(*args)


# --- heterogeneous fitness -------------------------------------------------------

def test_uniform_fitness_gives_lognormal_sizes():
    # under normality the JB p-values are uniform, so check their spread across seeds
    etas = np.random.default_rng(0).uniform(0.0, 0.2, 1000)
    res = [heterogeneous_fitness_limit(etas, 100, rng=np.random.default_rng(s)) for s in range(100)]
    pvals = np.array([r.p_value for r in res])
    assert all(r.n == 1000 for r in res)
    assert np.mean(pvals < 0.01) <= 0.05
    assert stats.kstest(pvals, "uniform").pvalue > 0.01


def test_constant_fitness_is_degenerate():
    res = heterogeneous_fitness_limit(np.full(1000, 0.1), 100)
    assert res.variance == 0.0 and math.isnan(res.p_value)


def test_two_point_fitness_variance_grows_linearly():
    etas = np.where(np.random.default_rng(2).random(2000) < 0.5, 0.0, 0.2)
    var_eta = 0.01
    for t in (50, 100, 200):
        res = heterogeneous_fitness_limit(etas, t, rng=np.random.default_rng(t))
        assert res.variance / t == pytest.approx(var_eta, rel=0.1)


def test_custom_draw_is_used():
    res = heterogeneous_fitness_limit(np.zeros(1000), 10, draw=lambda rng, n: np.ones(n))
    assert res.variance == 0.0
    res = heterogeneous_fitness_limit(np.zeros(1000), 10, draw=lambda rng, n: rng.normal(0, 1, n))
    assert res.variance == pytest.approx(9.0, rel=0.15)
