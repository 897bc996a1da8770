"""Heaps' law: growth of distinct product types ``D`` with cumulative innovations ``k``."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from adjpossible.errors import ConvergenceError


@dataclass(frozen=True)
class HeapsFit:
    exponent: float
    prefactor: float
    stderr: float
    r_squared: float
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


def fit_heaps(pairs) -> HeapsFit:
    """Ordinary least squares of ``ln D`` on ``ln k``.

    Pairs with ``k < 1`` or ``D < 1`` are ignored.  Raises ``ValueError`` when
    fewer than three usable pairs remain or all ``k`` coincide.
    """
    arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
    arr = arr[(arr[:, 0] >= 1) & (arr[:, 1] >= 1)]
    n = len(arr)
    if n < 3:
        raise ValueError(f"need at least 3 pairs with k >= 1 and D >= 1, got {n}")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValueError("all k values are identical; slope undefined")
    yc = y - y.mean()
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = yc - slope * xc
    sse = float(resid @ resid)
    syy = float(yc @ yc)
    r2 = 1.0 if syy == 0 else min(max(1.0 - sse / syy, 0.0), 1.0)
    stderr = math.sqrt(sse / (n - 2) / sxx) if n > 2 else math.nan
    return HeapsFit(exponent=slope, prefactor=math.exp(intercept), stderr=stderr,
                    r_squared=r2, n_points=n)


def heaps_pairs(events) -> list[tuple[int, int]]:
    """``(k, D)`` after every event of every organization, in event order.

    ``events`` need ``org_id`` and ``is_new_type`` attributes.
    """
    state: dict = {}
    out = []
    for ev in events:
        kd = state.setdefault(ev.org_id, [0, 0])
        kd[0] += 1
        kd[1] += int(ev.is_new_type)
        out.append((kd[0], kd[1]))
    return out


# --- mean-field ODE ---------------------------------------------------------

@dataclass(frozen=True)
class OdeSolution:
    samples: list  # (k, D), ordered by k
    nu: float
    rho: float

    def to_dict(self) -> dict:
        return {"nu": self.nu, "rho": self.rho, "samples": [list(s) for s in self.samples]}


def heaps_rhs(k: float, D: float, nu: float, rho: float) -> float:
    return nu * D / (nu * D + rho * k)


def curve_start(nu: float, rho: float, d0: float) -> float:
    """Cumulative count at which ``D = d0`` on the curve through the origin of the invariant.

    For ``nu != rho`` that curve is ``D**(rho/nu) - nu*D = (rho - nu)*k``;
    for ``nu == rho`` the start is taken as ``k = d0``.
    """
    if nu == rho:
        return float(d0)
    return (d0 ** (rho / nu) - nu * d0) / (rho - nu)


def implicit_residual(k: float, D: float, nu: float, rho: float) -> float:
    """Residual of ``D**(rho/nu) - nu*D = (rho - nu)*k`` relative to its largest term."""
    lead = D ** (rho / nu)
    scale = max(lead, nu * D, abs(rho - nu) * k)
    return abs(lead - nu * D - (rho - nu) * k) / scale


def _rk4(k, D, h, nu, rho):
    f = heaps_rhs
    a = f(k, D, nu, rho)
    b = f(k + h / 2, D + h / 2 * a, nu, rho)
    c = f(k + h / 2, D + h / 2 * b, nu, rho)
    d = f(k + h, D + h * c, nu, rho)
    return D + h / 6 * (a + 2 * b + 2 * c + d)


def _integrate(k, D, k_end, h, nu, rho, rtol, max_steps):
    """Adaptive RK4 with step doubling from ``k`` to ``k_end``; returns ``(D, h)``."""
    steps = 0
    while k < k_end:
        h = min(h, k_end - k)
        full = _rk4(k, D, h, nu, rho)
        half = _rk4(k, D, h / 2, nu, rho)
        two = _rk4(k + h / 2, half, h / 2, nu, rho)
        if not (math.isfinite(full) and math.isfinite(two)):
            raise ConvergenceError(f"non-finite value at k={k}")
        err = abs(two - full) / 15.0
        scale = rtol * max(abs(two), 1.0)
        if err <= scale:
            k += h
            D = two + (two - full) / 15.0
            grow = 4.0 if err == 0 else min(4.0, 0.9 * (scale / err) ** 0.2)
            h *= max(grow, 1.0)
        else:
            h *= max(0.1, 0.9 * (scale / err) ** 0.2)
        steps += 1
        if steps > max_steps or h <= 0:
            raise ConvergenceError(f"step control failed near k={k}")
    return D, h


def solve_heaps_ode(nu: float, rho: float, k_max: float, d0: float = 1.0, k0: float | None = None,
                    n_samples: int = 200, k_eval=None, rtol: float = 1e-11,
                    max_steps: int = 1_000_000) -> OdeSolution:
    """Integrate ``dD/dk = nu*D/(nu*D + rho*k)`` from ``(k0, d0)`` to ``k_max``.

    ``k0`` defaults to :func:`curve_start`, so the solution follows the
    invariant curve through the origin.  Samples are taken at ``k_eval`` or at
    ``n_samples`` points spaced geometrically in ``k - k0 + 1``.
    """
    if not (nu > 0 and rho > 0):
        raise ValueError(f"nu and rho must be > 0 (got nu={nu}, rho={rho})")
    if not k_max > 1:
        raise ValueError(f"k_max must be > 1 (got {k_max})")
    if not d0 >= 1:
        raise ValueError(f"d0 must be >= 1 (got {d0})")
    if k0 is None:
        k0 = curve_start(nu, rho, d0)
    if not 0 <= k0 < k_max:
        raise ValueError(f"start k0={k0} must lie in [0, k_max)")
    if k_eval is None:
        span = np.geomspace(1.0, k_max - k0 + 1.0, n_samples) - 1.0 + k0
        span[-1] = k_max
        k_eval = span
    grid = sorted({float(k0), *(float(v) for v in k_eval if k0 <= v <= k_max)})

    samples = [(grid[0], float(d0))]
    D, h = float(d0), 1e-3 * max(1.0, grid[0])
    for k_prev, k_next in zip(grid, grid[1:]):
        D, h = _integrate(k_prev, D, k_next, h, nu, rho, rtol, max_steps)
        samples.append((k_next, D))
    return OdeSolution(samples=samples, nu=nu, rho=rho)
