"""Exponential growth under fitness, and the lognormal limit of heterogeneous fitness."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats


def bb_closed_form(eta: float, gamma: float, rho_lambda: float, t) -> float | np.ndarray:
    """``k(t) = (rho_lambda)^(1/(1-g)) * (eta/(1-g))^(-1/(1-g)) * exp(eta t/(1-g))``."""
    if not eta > 0:
        raise ValueError(f"eta must be > 0 for the closed form (got {eta})")
    if not 0 <= gamma < 1:
        raise ValueError(f"gamma must lie in [0, 1) (got {gamma})")
    if not rho_lambda > 0:
        raise ValueError(f"rho_lambda must be > 0 (got {rho_lambda})")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    inv = 1.0 / (1.0 - gamma)
    log_k0 = inv * math.log(rho_lambda) - inv * math.log(eta * inv)
    out = np.exp(log_k0 + eta * inv * t_arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NormalityCheck:
    statistic: float
    p_value: float
    variance: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def heterogeneous_fitness_limit(etas, t: int, rng: np.random.Generator | None = None,
                                draw=None) -> NormalityCheck:
    """Jarque-Bera normality test on ``ln k = sum_{s<t} eta_s`` per organization.

    ``etas`` holds one i.i.d. draw per organization and is used for the first
    step; later steps redraw by resampling ``etas`` (or by calling
    ``draw(rng, n)`` when given).  Constant ``etas`` give zero variance, where
    the statistic and p-value are NaN.
    """
    etas = np.asarray(etas, dtype=float)
    n = len(etas)
    if n < 2:
        raise ValueError("need at least two organizations")
    if t < 1:
        raise ValueError(f"t must be >= 1 (got {t})")
    rng = rng if rng is not None else np.random.default_rng(0)
    log_k = etas.copy()
    for _ in range(int(t) - 1):
        log_k += draw(rng, n) if draw is not None else rng.choice(etas, size=n)
    if np.ptp(log_k) == 0:
        return NormalityCheck(statistic=math.nan, p_value=math.nan, variance=0.0, n=n)
    var = float(np.var(log_k, ddof=1))
    res = stats.jarque_bera(log_k)
    return NormalityCheck(statistic=float(res.statistic), p_value=float(res.pvalue),
                          variance=var, n=n)
