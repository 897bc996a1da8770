"""Discrete power-law fitting with KS-selected lower cutoff and bootstrap GOF.

The fitted model is ``p(x) = x^-alpha / zeta(alpha, x_min)`` for integer
``x >= x_min``.  ``alpha`` maximizes the log-likelihood by golden-section
search, ``x_min`` minimizes the Kolmogorov-Smirnov distance, and the p-value
comes from semi-parametric bootstrap replicates (each refit from scratch).
A discrete lognormal alternative is compared with Vuong's test.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_ndtr

from adjpossible.laws.zeta import hurwitz_zeta, hurwitz_zeta_array

ALPHA_BRACKET = (1.0 + 1e-6, 10.0)
ALPHA_TOL = 1e-4
MIN_TAIL = 10
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    x_min: int
    ks_stat: float
    p_value: float | None
    n_tail: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LRComparison:
    r_statistic: float
    p_value: float
    lognormal_params: tuple[float, float]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lognormal_params"] = list(self.lognormal_params)
        return d


def golden_section_max(f, lo: float, hi: float, tol: float = ALPHA_TOL) -> float:
    """Maximize a unimodal ``f`` on ``[lo, hi]`` to interval width ``tol``."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def power_law_loglik(alpha: float, x_min: int, n: int, sum_log: float) -> float:
    return -alpha * sum_log - n * math.log(hurwitz_zeta(alpha, x_min))


def mle_alpha(tail: np.ndarray, x_min: int) -> float:
    n = len(tail)
    sum_log = float(np.log(tail).sum())
    return golden_section_max(lambda a: power_law_loglik(a, x_min, n, sum_log), *ALPHA_BRACKET)


def _ks_distance(values: np.ndarray, counts: np.ndarray, alpha: float, x_min: int) -> float:
    """Exact sup-distance between empirical and model CDFs on ``x >= x_min``.

    ``values`` are the sorted unique tail values and ``counts`` their
    multiplicities.  Both CDFs are step functions on the integers, so the sup
    is attained just before or at an observed value.
    """
    z0 = hurwitz_zeta(alpha, x_min)
    emp = np.cumsum(counts) / counts.sum()
    emp_before = np.concatenate(([0.0], emp[:-1]))
    model_at = 1.0 - hurwitz_zeta_array(alpha, values + 1.0) / z0
    model_before = 1.0 - hurwitz_zeta_array(alpha, values.astype(float)) / z0
    return float(max(np.abs(emp - model_at).max(), np.abs(emp_before - model_before).max()))


def _scan_xmin(x: np.ndarray, x_min: int | None, min_tail: int):
    """Return ``(alpha, x_min, ks, n_tail)`` minimizing KS over candidate cutoffs."""
    values, counts = np.unique(x, return_counts=True)
    # tail sizes for each candidate cutoff
    tail_sizes = np.cumsum(counts[::-1])[::-1]
    if x_min is not None:
        candidates = [int(np.searchsorted(values, x_min))]
        if candidates[0] >= len(values) or tail_sizes[candidates[0]] < min_tail:
            raise ValueError(f"fewer than {min_tail} samples at or above x_min={x_min}")
    else:
        candidates = [i for i in range(len(values) - 1) if tail_sizes[i] >= min_tail]
        if not candidates:
            raise ValueError(f"no cutoff leaves at least {min_tail} tail samples")
    log_values = np.log(values)
    best = None
    for i in candidates:
        xm = int(values[i]) if x_min is None else int(x_min)
        v, c = values[i:], counts[i:]
        n = int(tail_sizes[i])
        sum_log = float((log_values[i:] * c).sum())
        alpha = golden_section_max(lambda a: power_law_loglik(a, xm, n, sum_log), *ALPHA_BRACKET)
        ks = _ks_distance(v, c, alpha, xm)
        if best is None or ks < best[2]:
            best = (alpha, xm, ks, n)
    return best


def _validate_samples(samples) -> np.ndarray:
    x = np.asarray(samples)
    if x.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if len(x) < 50:
        raise ValueError(f"need at least 50 samples (got {len(x)})")
    if np.any(x != np.round(x)) or np.any(x < 1):
        raise ValueError("samples must be integers >= 1")
    x = x.astype(np.int64)
    if np.all(x == x[0]):
        raise ValueError("degenerate sample: all values are equal")
    return x


def sample_discrete_power_law(alpha: float, x_min: int, size: int, rng: np.random.Generator,
                              table: int = 10_000) -> np.ndarray:
    """Draw from ``p(x) ~ x^-alpha`` on ``x >= x_min`` by inverse CDF.

    The first ``table`` support points use the exact survival function; beyond
    them the continuous approximation ``floor((x0 - 1/2) v^(-1/(alpha-1)) + 1/2)``
    is used, which is accurate to well below sampling noise at that depth.
    """
    support = np.arange(x_min, x_min + table, dtype=float)
    surv = hurwitz_zeta_array(alpha, support) / hurwitz_zeta(alpha, x_min)
    u = 1.0 - rng.random(size)  # in (0, 1]
    # smallest x with surv(x + 1) < u  <=>  largest index with surv >= u
    idx = np.searchsorted(-surv, -u, side="right") - 1
    out = (x_min + idx).astype(np.int64)
    x0 = x_min + table
    s0 = hurwitz_zeta(alpha, x0) / hurwitz_zeta(alpha, x_min)
    deep = u < s0
    if deep.any():
        v = u[deep] / s0
        out[deep] = np.floor((x0 - 0.5) * v ** (-1.0 / (alpha - 1.0)) + 0.5).astype(np.int64)
    return out


def _bootstrap_ks(args) -> float:
    seed_seq, below, n, n_tail, alpha, x_min, min_tail = args
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    m = int(rng.binomial(n, n_tail / n))
    tail = sample_discrete_power_law(alpha, x_min, m, rng)
    head = below[rng.integers(len(below), size=n - m)] if len(below) else np.empty(0, np.int64)
    sample = np.concatenate((head, tail))
    try:
        return _scan_xmin(sample, None, min_tail)[2]
    except ValueError:
        return math.inf


def fit_power_law(samples, n_bootstrap: int = 1000, seed: int = 0, x_min: int | None = None,
                  min_tail: int = MIN_TAIL, jobs: int = 1) -> PowerLawFit:
    """Fit a discrete power law to positive integer ``samples``.

    Bootstrap replicate ``i`` draws from ``SeedSequence(seed).spawn(n)[i]``, so
    results do not depend on ``jobs``.  ``n_bootstrap=0`` skips the p-value.
    """
    x = _validate_samples(samples)
    alpha, xm, ks, n_tail = _scan_xmin(x, x_min, min_tail)
    if n_tail < min_tail:
        raise ValueError(f"tail has only {n_tail} samples")
    p_value = None
    if n_bootstrap > 0:
        below = np.sort(x[x < xm])
        children = np.random.SeedSequence(seed).spawn(n_bootstrap)
        tasks = [(c, below, len(x), n_tail, alpha, xm, min_tail) for c in children]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                stats = list(pool.map(_bootstrap_ks, tasks, chunksize=max(1, n_bootstrap // (4 * jobs))))
        else:
            stats = [_bootstrap_ks(t) for t in tasks]
        p_value = float(np.mean(np.asarray(stats) >= ks))
    return PowerLawFit(alpha=float(alpha), x_min=int(xm), ks_stat=float(ks), p_value=p_value, n_tail=int(n_tail))


# --- lognormal alternative ------------------------------------------------------

def _log_interval_prob(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """``log(Phi(hi) - Phi(lo))`` without cancellation in either tail."""
    upper = lo > 0
    out = np.empty_like(lo)
    # right tail: work with survival functions
    a, b = log_ndtr(-lo[upper]), log_ndtr(-hi[upper])
    out[upper] = a + np.log1p(-np.exp(b - a))
    a, b = log_ndtr(hi[~upper]), log_ndtr(lo[~upper])
    out[~upper] = a + np.log1p(-np.exp(b - a))
    return out


def discrete_lognormal_logpmf(x, mu: float, sigma: float, x_min: int) -> np.ndarray:
    """Log-pmf of a lognormal binned onto integers, truncated to ``x >= x_min``.

    Integer ``x`` receives the continuous mass on ``[x - 1/2, x + 1/2)``.
    """
    x = np.asarray(x, dtype=float)
    lo = (np.log(x - 0.5) - mu) / sigma
    hi = (np.log(x + 0.5) - mu) / sigma
    norm = log_ndtr(-(math.log(x_min - 0.5) - mu) / sigma)
    return _log_interval_prob(lo, hi) - norm


def fit_discrete_lognormal(tail: np.ndarray, x_min: int) -> tuple[float, float]:
    logs = np.log(tail)
    if np.std(logs) == 0:
        raise ValueError("zero-variance tail: lognormal undefined")

    def nll(theta):
        mu, log_sigma = theta
        val = -discrete_lognormal_logpmf(tail, mu, math.exp(log_sigma), x_min).sum()
        return val if np.isfinite(val) else 1e300

    start = np.array([logs.mean(), math.log(logs.std())])
    best = None
    # second start far in the heavy-tail corner where lognormals mimic power laws
    for x0 in (start, np.array([logs.mean() - 2.0 * logs.std() ** 2, math.log(2.0 * logs.std())])):
        res = minimize(nll, x0, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 20000, "maxfev": 40000})
        if best is None or res.fun < best.fun:
            best = res
    mu, log_sigma = best.x
    return float(mu), float(math.exp(log_sigma))


def compare_lognormal(samples, pl_fit: PowerLawFit) -> LRComparison:
    """Vuong test of the fitted power law against a discrete lognormal.

    Negative ``r_statistic`` means the lognormal has the higher likelihood.
    """
    x = np.asarray(samples, dtype=np.int64)
    tail = x[x >= pl_fit.x_min]
    if len(tail) < 2 or np.all(tail == tail[0]):
        raise ValueError("zero-variance tail: comparison undefined")
    mu, sigma = fit_discrete_lognormal(tail, pl_fit.x_min)
    ll_pl = -pl_fit.alpha * np.log(tail) - math.log(hurwitz_zeta(pl_fit.alpha, pl_fit.x_min))
    ll_ln = discrete_lognormal_logpmf(tail, mu, sigma, pl_fit.x_min)
    diff = ll_pl - ll_ln
    n = len(diff)
    sd = float(diff.std())
    if sd == 0:
        return LRComparison(0.0, 1.0, (mu, sigma))
    r = float(diff.sum() / (sd * math.sqrt(n)))
    p = float(math.erfc(abs(r) / math.sqrt(2.0)))
    return LRComparison(r_statistic=r, p_value=p, lognormal_params=(mu, sigma))


def ccdf_regression(samples) -> tuple[float, float, float]:
    """OLS slope of log P(K >= k) on log k (diagnostic only).

    Returns ``(slope, intercept, r_squared)``.  Such regressions do not
    establish a power-law shape; use :func:`fit_power_law` for that.
    """
    x = np.asarray(samples, dtype=float)
    x = x[x >= 1]
    values, counts = np.unique(x, return_counts=True)
    ccdf = np.cumsum(counts[::-1])[::-1] / counts.sum()
    lx, ly = np.log(values), np.log(ccdf)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    r2 = 1.0 - resid.var() / ly.var() if ly.var() > 0 else 1.0
    return float(slope), float(intercept), float(r2)
