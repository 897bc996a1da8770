"""Stationary size distribution of a growing population with a power kernel ``k**lam``."""
from __future__ import annotations

import numpy as np

from adjpossible.errors import ConvergenceError


def _distribution(lam: float, m: float, mu: float, k: np.ndarray) -> np.ndarray:
    # P_k / P_{k-1} = (k-1)^lam / (mu*m + k^lam); entrants appear at k = 1
    log_ratio = lam * np.log(k[1:] - 1.0) - np.log(mu * m + k[1:] ** lam)
    logp = np.concatenate(([0.0], np.cumsum(log_ratio)))
    p = np.exp(logp - logp.max())
    return p / p.sum()


def stationary_distribution(lambda_kernel: float, m: float, k_max: int, tol: float = 1e-8,
                            max_iter: int = 10_000) -> np.ndarray:
    """Return ``P_k`` for ``k = 1..k_max`` (index 0 holds ``P_1``).

    The normalizer ``mu = sum k**lam P_k`` is the fixed point of the map
    ``mu -> sum k**lam P_k(mu)``, solved to relative tolerance ``tol``;
    ``ConvergenceError`` is raised after ``max_iter`` iterations.
    """
    if not 0 < lambda_kernel <= 1:
        raise ValueError(f"lambda_kernel must lie in (0, 1] (got {lambda_kernel})")
    if not m > 0:
        raise ValueError(f"m must be > 0 (got {m})")
    if int(k_max) != k_max or k_max < 100:
        raise ValueError(f"k_max must be an integer >= 100 (got {k_max})")
    k = np.arange(1, int(k_max) + 1, dtype=float)
    kl = k ** lambda_kernel

    def excess(mu):
        # mu - g(mu) is increasing in mu, so the fixed point is unique
        g = float(kl @ _distribution(lambda_kernel, m, mu, k))
        if not np.isfinite(g):
            raise ConvergenceError("normalizer became non-finite")
        return mu - g

    # g(mu) lies in [1, k_max], which brackets the fixed point; plain
    # iteration oscillates because g is decreasing, so use Illinois steps
    lo, hi = 1e-12, float(k_max) + 1.0
    f_lo, f_hi = excess(lo), excess(hi)
    side = 0
    for _ in range(max_iter):
        mu = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        f = excess(mu)
        if abs(f) <= tol * mu:
            p = _distribution(lambda_kernel, m, mu, k)
            return p / p.sum()
        if f < 0:
            lo, f_lo = mu, f
            if side == -1:
                f_hi /= 2
            side = -1
        else:
            hi, f_hi = mu, f
            if side == 1:
                f_lo /= 2
            side = 1
    raise ConvergenceError(f"normalizer did not converge in {max_iter} iterations")


def tail_slope(p, k_lo: int, k_hi: int) -> float:
    """OLS slope of ``ln P_k`` on ``ln k`` over ``k_lo <= k <= k_hi`` (1-based ``k``)."""
    k = np.arange(k_lo, k_hi + 1, dtype=float)
    y = np.log(np.asarray(p, float)[k_lo - 1:k_hi])
    return float(np.polyfit(np.log(k), y, 1)[0])


def stretched_exponential_r2(p, lam: float, k_lo: int, k_hi: int) -> float:
    """``r**2`` of the linear fit of ``ln(P_k k**lam)`` against ``k**(1-lam)``."""
    k = np.arange(k_lo, k_hi + 1, dtype=float)
    y = np.log(np.asarray(p, float)[k_lo - 1:k_hi]) + lam * np.log(k)
    x = k ** (1.0 - lam)
    return float(np.corrcoef(x, y)[0, 1] ** 2)
