"""Discrete-time simulator of organizations searching the adjacent possible.

Each organization holds ``k`` cumulative innovations spread over ``D`` distinct
product types and searches recombinations of length ``lambda`` among ``D*``
of them.  The number of reachable innovations per step is

    |U| = (nu + rho * k / D) * C(D*, lambda)

and each realized innovation is a new product type with probability
``nu*D / (nu*D + rho*k)``, otherwise an improvement of a held type.

Two regimes are supported:

* ``strong``: the organization searches its whole portfolio (``D* = D``), so
  the rate is super-linear in ``k`` until ``rate_cap`` binds.
* ``weak``: the search space evolves multiplicatively with depth ``d`` and
  scope ``s`` (``D* <- d/(1-s) * D*``), and the population competes for a
  shared innovation budget allocated in proportion to ``exp(eta) * k``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Iterable

import numpy as np

__all__ = [
    "Regime",
    "SimParams",
    "OrgState",
    "EventRecord",
    "Snapshot",
    "Trajectory",
    "recombination_count",
    "adjacent_possible_size",
    "update_search_space",
    "step_org",
    "run_population",
    "fitness",
    "new_type_probability",
]

_EPS = 1e-9


class Regime(str, Enum):
    STRONG = "strong"
    WEAK = "weak"


@dataclass(frozen=True)
class SimParams:
    """Model parameters for one simulation run.

    ``lambda_`` is serialized as ``"lambda"``.  ``resource_budget`` is the
    expected number of innovations per unit time the whole population can
    afford in the weak regime (``None`` disables the shared budget).
    ``fitness_spread`` draws each entrant's long-run depth uniformly within
    ``depth_mean +/- fitness_spread``, giving heterogeneous fitness.
    ``n_product_codes`` bounds the product catalog; ``None`` makes every new
    product type a globally fresh code.  ``initial_orgs`` organizations
    exist at time 0 before any entry.
    """

    nu: float
    rho: float
    lambda_: int = 2
    entry_rate: float = 1.0
    depth_mean: float = 0.9
    scope_mean: float = 0.1
    depth_jitter: float = 0.05
    scope_jitter: float = 0.05
    regime: Regime = Regime.WEAK
    rate_cap: float = 1000.0
    horizon: int = 500
    seed: int = 0
    dt: float = 1.0
    resource_budget: float | None = 3.0
    fitness_spread: float = 0.0
    n_product_codes: int | None = None
    initial_orgs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not self.nu > 0:
            raise ValueError(f"nu must be > 0 (got {self.nu})")
        if not self.rho > 0:
            raise ValueError(f"rho must be > 0 (got {self.rho})")
        if int(self.lambda_) != self.lambda_ or self.lambda_ < 1:
            raise ValueError(f"lambda must be an integer >= 1 (got {self.lambda_})")
        object.__setattr__(self, "lambda_", int(self.lambda_))
        if not self.entry_rate >= 0:
            raise ValueError(f"entry_rate must be >= 0 (got {self.entry_rate})")
        if not 0 < self.depth_mean <= 1:
            raise ValueError(f"depth_mean must lie in (0, 1] (got {self.depth_mean})")
        if not 0 <= self.scope_mean < 1:
            raise ValueError(f"scope_mean must lie in [0, 1) (got {self.scope_mean})")
        for name in ("depth_jitter", "scope_jitter", "fitness_spread"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0 (got {getattr(self, name)})")
        if not self.rate_cap > 0:
            raise ValueError(f"rate_cap must be > 0 (got {self.rate_cap})")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be an integer >= 1 (got {self.horizon})")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0 (got {self.dt})")
        if self.resource_budget is not None and not self.resource_budget > 0:
            raise ValueError(f"resource_budget must be > 0 or null (got {self.resource_budget})")
        if self.n_product_codes is not None and self.n_product_codes < 1:
            raise ValueError(f"n_product_codes must be >= 1 or null (got {self.n_product_codes})")
        if int(self.initial_orgs) != self.initial_orgs or self.initial_orgs < 1:
            raise ValueError(f"initial_orgs must be an integer >= 1 (got {self.initial_orgs})")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer (got {self.seed})")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        d["regime"] = self.regime.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimParams":
        d = dict(d)
        if "lambda" in d:
            d["lambda_"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown SimParams field(s): {', '.join(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def fitness(d_bar: float, s_bar: float) -> float:
    """Long-run growth rate of the search space, ``ln(d/(1-s))``."""
    if not 0 < d_bar <= 1:
        raise ValueError(f"d_bar must lie in (0, 1] (got {d_bar})")
    if not 0 <= s_bar < 1:
        raise ValueError(f"s_bar must lie in [0, 1) (got {s_bar})")
    return math.log(d_bar) - math.log1p(-s_bar)


@dataclass
class OrgState:
    org_id: int
    birth_time: int = 0
    k: int = 0
    D: int = 0
    d_star: float = 1.0
    depth_mean: float = 0.9
    scope_mean: float = 0.1
    codes: list = field(default_factory=list)

    @property
    def I(self) -> int:  # noqa: E743
        return self.k - self.D

    @property
    def eta(self) -> float:
        return fitness(self.depth_mean, self.scope_mean)


@dataclass(frozen=True)
class EventRecord:
    org_id: int
    time: int
    product_code: str
    is_new_type: bool


@dataclass(frozen=True)
class Snapshot:
    org_id: int
    time: int
    k: int
    D: int
    d_star: float


def recombination_count(d_star: float, lam: int) -> float:
    """Number of length-``lam`` recombinations among ``d_star`` elements.

    Non-integer ``d_star`` uses the Gamma-function binomial.
    """
    if d_star < lam:
        return 0.0
    if float(d_star).is_integer():
        return float(math.comb(int(d_star), lam))
    return math.exp(math.lgamma(d_star + 1) - math.lgamma(lam + 1) - math.lgamma(d_star - lam + 1))


def adjacent_possible_size(org: OrgState, params: SimParams) -> tuple[float, float, float]:
    """Return ``(|U_D|, |U_I|, |U|)`` for ``org``.

    An empty organization gets ``(nu, 0, nu)``.  Otherwise the recombination
    count is floored at one: an organization with fewer than ``lambda``
    searched types still works on what it already has.
    """
    if org.k == 0:
        return params.nu, 0.0, params.nu
    if org.D < 1:
        raise ValueError("organization with k > 0 must hold at least one product type")
    r = max(recombination_count(org.d_star, params.lambda_), 1.0)
    u_d = params.nu * r
    u_i = params.rho * (org.k / org.D) * r
    return u_d, u_i, u_d + u_i


def update_search_space(org: OrgState, d_t: float, s_t: float) -> float:
    """Multiply the search space by ``d_t/(1-s_t)``, clamped to ``[1, max(D, 1)]``."""
    if not 0 < d_t <= 1:
        raise ValueError(f"depth must lie in (0, 1] (got {d_t})")
    if not 0 <= s_t < 1:
        raise ValueError(f"scope must lie in [0, 1) (got {s_t})")
    grown = d_t / (1.0 - s_t) * org.d_star
    return min(max(grown, 1.0), float(max(org.D, 1)))


def new_type_probability(D: int, k: int, nu: float, rho: float) -> float:
    if k == 0:
        return 1.0
    num = nu * D
    return num / (num + rho * k)


class ProductCatalog:
    """Source of product codes for new product types."""

    def __init__(self, size: int | None = None):
        self.size = size
        self._next = 0
        if size is not None:
            self._codes = [f"p{i}" for i in range(size)]

    def fresh(self, org: OrgState, rng: np.random.Generator) -> str | None:
        if self.size is None:
            code = f"p{self._next}"
            self._next += 1
            return code
        held = set(org.codes)
        if len(held) >= self.size:
            return None
        while True:
            code = self._codes[int(rng.integers(self.size))]
            if code not in held:
                return code


def _jittered(mean: float, jitter: float, lo: float, hi: float, rng: np.random.Generator) -> float:
    if jitter == 0:
        return mean
    return min(max(rng.uniform(mean - jitter, mean + jitter), lo), hi)


def step_org(
    org: OrgState,
    params: SimParams,
    rng: np.random.Generator,
    time: int = 0,
    ceiling: float = math.inf,
    catalog: ProductCatalog | None = None,
) -> list[EventRecord]:
    """Advance ``org`` by one step and return the innovations it made.

    The event count is Poisson with mean ``min(|U| dt, ceiling dt, rate_cap)``;
    ``ceiling`` is the organization's share of a population budget.
    """
    if catalog is None:
        catalog = _LocalCatalog()
    _, _, u_total = adjacent_possible_size(org, params)
    mean = min(u_total * params.dt, ceiling * params.dt, params.rate_cap)
    n = int(rng.poisson(mean)) if mean > 0 else 0

    events = []
    for _ in range(n):
        p_new = new_type_probability(org.D, org.k, params.nu, params.rho)
        code = None
        if rng.random() < p_new:
            code = catalog.fresh(org, rng)
        if code is not None:
            org.codes.append(code)
            org.D += 1
            events.append(EventRecord(org.org_id, time, code, True))
        else:
            # catalog exhausted falls through to an improvement
            code = org.codes[int(rng.integers(len(org.codes)))]
            events.append(EventRecord(org.org_id, time, code, False))
        org.k += 1

    if params.regime is Regime.STRONG:
        org.d_star = float(max(org.D, 1))
    else:
        d_t = _jittered(org.depth_mean, params.depth_jitter, _EPS, 1.0, rng)
        s_t = _jittered(org.scope_mean, params.scope_jitter, 0.0, 1.0 - _EPS, rng)
        org.d_star = update_search_space(org, d_t, s_t)
    return events


class _LocalCatalog(ProductCatalog):
    """Org-local fresh codes, used when stepping an organization on its own."""

    def __init__(self):
        super().__init__(None)

    def fresh(self, org, rng):
        return f"p{org.D}"


@dataclass
class Trajectory:
    events: list[EventRecord]
    snapshots: list[Snapshot]
    params: SimParams
    orgs: list[OrgState] = field(default_factory=list)

    def final_k(self) -> dict[int, int]:
        return {o.org_id: o.k for o in self.orgs}

    def heaps_pairs(self) -> list[tuple[int, int]]:
        """``(k, D)`` after every event, for every organization."""
        state: dict[int, list[int]] = {}
        pairs = []
        for ev in self.events:
            kd = state.setdefault(ev.org_id, [0, 0])
            kd[0] += 1
            kd[1] += int(ev.is_new_type)
            pairs.append((kd[0], kd[1]))
        return pairs

    def write_events_csv(self, path) -> None:
        write_events_csv(path, self.events)

    def write_snapshots_csv(self, path) -> None:
        write_snapshots_csv(path, self.snapshots)


def _new_org(org_id: int, t: int, params: SimParams, rng: np.random.Generator) -> OrgState:
    depth = params.depth_mean
    if params.fitness_spread > 0:
        depth = _jittered(depth, params.fitness_spread, _EPS, 1.0, rng)
    return OrgState(org_id=org_id, birth_time=t, depth_mean=depth, scope_mean=params.scope_mean)


def run_population(params: SimParams) -> Trajectory:
    """Simulate ``initial_orgs`` founders plus Poisson(entry_rate) entrants per step.

    Fully determined by ``params`` (including ``params.seed``).
    """
    if params.horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.Generator(np.random.PCG64(params.seed))
    catalog = ProductCatalog(params.n_product_codes)
    orgs = [_new_org(n, 0, params, rng) for n in range(params.initial_orgs)]
    events: list[EventRecord] = []
    snapshots: list[Snapshot] = []
    shared = params.regime is Regime.WEAK and params.resource_budget is not None

    for t in range(params.horizon):
        for _ in range(int(rng.poisson(params.entry_rate)) if params.entry_rate > 0 else 0):
            orgs.append(_new_org(len(orgs), t, params, rng))

        if shared:
            weights = np.array([o.depth_mean / (1.0 - o.scope_mean) * max(o.k, 1) for o in orgs])
            ceilings = params.resource_budget * weights / weights.sum()
        else:
            ceilings = np.full(len(orgs), math.inf)

        for org, ceiling in zip(orgs, ceilings):
            events.extend(step_org(org, params, rng, t, float(ceiling), catalog))
            snapshots.append(Snapshot(org.org_id, t, org.k, org.D, org.d_star))

    return Trajectory(events=events, snapshots=snapshots, params=params, orgs=orgs)


# --- CSV / JSON interchange -------------------------------------------------

EVENT_HEADER = "org_id,time,product_code,is_new_type"
SNAPSHOT_HEADER = "org_id,time,k,D,d_star"


def write_events_csv(path, events: Iterable[EventRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(EVENT_HEADER + "\n")
        for ev in events:
            fh.write(f"{ev.org_id},{ev.time},{ev.product_code},{int(ev.is_new_type)}\n")


def write_snapshots_csv(path, snapshots: Iterable[Snapshot]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SNAPSHOT_HEADER + "\n")
        for s in snapshots:
            fh.write(f"{s.org_id},{s.time},{s.k},{s.D},{s.d_star!r}\n")


def _rows(path, header: str):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != header:
            raise ValueError(f"{path}: expected header {header!r}, got {first!r}")
        ncol = header.count(",") + 1
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != ncol:
                raise ValueError(f"{path}: line {lineno}: expected {ncol} fields, got {len(parts)}")
            yield lineno, parts


def read_events_csv(path) -> list[EventRecord]:
    out = []
    for lineno, (org, t, code, new) in _rows(path, EVENT_HEADER):
        try:
            if new not in ("0", "1"):
                raise ValueError(f"is_new_type must be 0 or 1, got {new!r}")
            out.append(EventRecord(int(org), int(t), code, new == "1"))
        except ValueError as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return out


def read_snapshots_csv(path) -> list[Snapshot]:
    out = []
    for lineno, (org, t, k, D, ds) in _rows(path, SNAPSHOT_HEADER):
        try:
            out.append(Snapshot(int(org), int(t), int(k), int(D), float(ds)))
        except ValueError as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return out


