import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from adjpossible.laws.powerlaw import (
    ccdf_regression,
    compare_lognormal,
    discrete_lognormal_logpmf,
    fit_power_law,
    sample_discrete_power_law,
)
from adjpossible.laws.zeta import hurwitz_zeta, hurwitz_zeta_array


def bisection_zeta_sampler(alpha, x_min, size, rng):
    """Independent sampler: invert the tail function with scipy's zeta by bisection."""
    norm = special.zeta(alpha, x_min)
    out = np.empty(size, dtype=np.int64)
    for n, u in enumerate(rng.random(size)):
        # smallest x with P(X > x) <= u, i.e. zeta(alpha, x+1)/norm <= u
        lo, hi = x_min, x_min
        while special.zeta(alpha, hi + 1) / norm > u:
            hi *= 2
        while lo < hi:
            mid = (lo + hi) // 2
            if special.zeta(alpha, mid + 1) / norm > u:
                lo = mid + 1
            else:
                hi = mid
        out[n] = lo
    return out


# --- Hurwitz zeta ----------------------------------------------------------

@pytest.mark.parametrize("s", [1.01, 1.5, 2.0, 2.5, 3.7, 7.0, 12.0, 20.0])
@pytest.mark.parametrize("q", [0.3, 1.0, 2.0, 11.5, 100.0, 1e4, 1e7])
def test_hurwitz_zeta_matches_scipy(s, q):
    assert hurwitz_zeta(s, q) == pytest.approx(special.zeta(s, q), rel=1e-10)


def test_hurwitz_zeta_array_matches_scalar():
    q = np.array([1.0, 3.0, 17.0, 250.0])
    np.testing.assert_allclose(hurwitz_zeta_array(2.3, q), [hurwitz_zeta(2.3, v) for v in q], rtol=1e-14)


def test_hurwitz_zeta_domain():
    with pytest.raises(ValueError):
        hurwitz_zeta(1.0, 1.0)
    with pytest.raises(ValueError):
        hurwitz_zeta(2.0, 0.0)


# --- sampler --------------------------------------------------------------------

def test_sampler_agrees_with_bisection_oracle():
    a = sample_discrete_power_law(2.5, 1, 4000, np.random.default_rng(0))
    b = bisection_zeta_sampler(2.5, 1, 4000, np.random.default_rng(1))
    # two-sample comparison on log scale: same distribution
    assert stats.ks_2samp(a, b).pvalue > 0.01
    freq = np.mean(a == 1)
    assert abs(freq - 1 / special.zeta(2.5, 1)) < 4 * math.sqrt(freq * (1 - freq) / len(a))


# --- fitting --------------------------------------------------------------------

def test_fit_recovers_exponent_from_oracle_samples():
    x = bisection_zeta_sampler(2.5, 1, 5000, np.random.default_rng(7))
    fit = fit_power_law(x, n_bootstrap=0)
    # standard error of the MLE at this size is about 0.02
    assert abs(fit.alpha - 2.5) < 0.08


def test_fit_large_sample_with_pvalue():
    x = sample_discrete_power_law(2.5, 1, 100_000, np.random.default_rng(3))
    fit = fit_power_law(x, n_bootstrap=100, seed=1)
    assert 2.45 <= fit.alpha <= 2.55
    assert fit.p_value > 0.1
    assert fit.n_tail <= len(x) and fit.ks_stat >= 0


def test_fit_selects_cutoff_above_contaminated_head():
    rng = np.random.default_rng(4)
    tail = sample_discrete_power_law(2.2, 20, 3000, rng)
    head = rng.integers(1, 20, 3000)
    fit = fit_power_law(np.concatenate([head, tail]), n_bootstrap=0)
    assert 12 <= fit.x_min <= 30
    assert abs(fit.alpha - 2.2) < 0.1


def test_fit_with_fixed_cutoff_uses_closed_tail():
    x = sample_discrete_power_law(3.0, 5, 2000, np.random.default_rng(8))
    fit = fit_power_law(x, n_bootstrap=0, x_min=5)
    assert fit.x_min == 5 and fit.n_tail == 2000


def test_bootstrap_is_deterministic_and_independent_of_jobs():
    x = sample_discrete_power_law(2.3, 1, 400, np.random.default_rng(9))
    serial = fit_power_law(x, n_bootstrap=40, seed=5)
    parallel = fit_power_law(x, n_bootstrap=40, seed=5, jobs=2)
    assert serial == parallel
    assert fit_power_law(x, n_bootstrap=40, seed=5) == serial


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_power_law(np.full(100, 4))
    with pytest.raises(ValueError):
        fit_power_law(np.arange(1, 20))
    with pytest.raises(ValueError):
        fit_power_law(list(range(1, 60)) + [0])
    x = sample_discrete_power_law(2.5, 1, 200, np.random.default_rng(0))
    with pytest.raises(ValueError):
        fit_power_law(x, x_min=int(x.max()))


def test_fit_serializes_with_field_names():
    x = sample_discrete_power_law(2.5, 1, 300, np.random.default_rng(2))
    d = json.loads(json.dumps(fit_power_law(x, n_bootstrap=10).to_dict()))
    assert set(d) == {"alpha", "x_min", "ks_stat", "p_value", "n_tail"}


@pytest.mark.slow
def test_self_sample_pvalues_look_uniform():
    pvals = []
    for s in range(50):
        x = sample_discrete_power_law(2.5, 1, 300, np.random.default_rng(1000 + s))
        pvals.append(fit_power_law(x, n_bootstrap=200, seed=s).p_value)
    assert stats.kstest(pvals, "uniform").pvalue > 0.01


# --- lognormal comparison ----------------------------------------------------

def test_discrete_lognormal_pmf_sums_to_one():
    x = np.arange(3, 200_000)
    total = np.exp(discrete_lognormal_logpmf(x, 1.0, 1.5, 3)).sum()
    assert total == pytest.approx(1.0, abs=1e-3)


def test_lognormal_favored_on_lognormal_data():
    rng = np.random.default_rng(6)
    x = np.maximum(1, np.round(rng.lognormal(2.0, 1.0, 5000))).astype(int)
    fit = fit_power_law(x, n_bootstrap=0, x_min=1)
    lr = compare_lognormal(x, fit)
    assert lr.r_statistic < 0 and lr.p_value < 0.01


def test_power_law_favored_on_large_power_law_sample():
    x = sample_discrete_power_law(2.5, 1, 100_000, np.random.default_rng(3))
    lr = compare_lognormal(x, fit_power_law(x, n_bootstrap=0))
    assert lr.r_statistic > 0


def test_self_samples_rarely_distinguishable_from_lognormal():
    passed = 0
    for s in range(50):
        x = sample_discrete_power_law(2.5, 1, 1000, np.random.default_rng(s))
        passed += compare_lognormal(x, fit_power_law(x, n_bootstrap=0)).p_value > 0.05
    assert passed >= 45


def test_compare_rejects_zero_variance_tail():
    x = np.concatenate([np.arange(1, 60), np.full(20, 500)])
    fit = fit_power_law(x, n_bootstrap=0)
    object.__setattr__(fit, "x_min", 500)
    with pytest.raises(ValueError, match="zero-variance"):
        compare_lognormal(x, fit)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_r_statistic_sign_matches_likelihood_difference(seed):
    rng = np.random.default_rng(seed)
    x = np.maximum(1, np.round(rng.lognormal(1.0, 1.2, 300))).astype(int)
    fit = fit_power_law(x, n_bootstrap=0)
    lr = compare_lognormal(x, fit)
    tail = x[x >= fit.x_min]
    ll_pl = np.sum(-fit.alpha * np.log(tail)) - len(tail) * math.log(special.zeta(fit.alpha, fit.x_min))
    ll_ln = np.sum(discrete_lognormal_logpmf(tail, *lr.lognormal_params, fit.x_min))
    assert (lr.r_statistic < 0) == (ll_ln > ll_pl)
    assert 0 <= lr.p_value <= 1


def test_ccdf_regression_is_a_diagnostic_slope():
    x = sample_discrete_power_law(2.5, 1, 20000, np.random.default_rng(1))
    slope, _, r2 = ccdf_regression(x)
    assert -2.0 < slope < -1.0 and 0 < r2 <= 1
