"""Product space: proximity between products, organization density and diversification.

Events are ``(org_id, year, product_code)`` records grouped into periods of
``period_length`` years.  For each period, history counts are cumulative
strictly before the period start and delta counts fall inside the period.
Proximity ``phi[i, j]`` links a history product ``j`` to a current product
``i`` and is stored as the directed edge ``j -> i``.
"""
from __future__ import annotations

import csv
import math
from collections import namedtuple
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

ProductEvent = namedtuple("ProductEvent", "org_id year product_code")

PRODUCT_EVENT_HEADER = ["org_id", "year", "product_code"]
EDGE_HEADER = ["source", "target", "weight", "period"]


def _event_year(ev) -> float:
    year = getattr(ev, "year", None)
    if year is None:
        year = ev.time
    return year


def read_product_events(path) -> list[ProductEvent]:
    """Read an ``org_id,year,product_code`` CSV; bad rows raise ``ValueError`` naming the line."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PRODUCT_EVENT_HEADER:
            raise ValueError(f"line 1: expected header {','.join(PRODUCT_EVENT_HEADER)!r}, got {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"line {line_no}: expected 3 fields, got {len(row)}")
            org, year_s, code = row
            try:
                year = float(year_s)
            except ValueError:
                raise ValueError(f"line {line_no}: year {year_s!r} is not numeric") from None
            if not math.isfinite(year):
                raise ValueError(f"line {line_no}: year {year_s!r} is not finite")
            if not code:
                raise ValueError(f"line {line_no}: empty product_code")
            out.append(ProductEvent(org, int(year) if year.is_integer() else year, code))
    return out


def write_product_events(path, events) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRODUCT_EVENT_HEADER)
        for ev in events:
            w.writerow([ev.org_id, _event_year(ev), ev.product_code])


# --- counts -----------------------------------------------------------------

@dataclass(frozen=True)
class CountsTable:
    """Dense per-period counts.

    ``history[p, l, j]`` is org ``l``'s cumulative count in product ``j``
    before period ``p`` starts; ``delta[p, l, i]`` is its count during ``p``.
    """
    period_length: int
    period_starts: list
    orgs: list
    products: list
    history: np.ndarray
    delta: np.ndarray

    @property
    def n_periods(self) -> int:
        return len(self.period_starts)

    def period_index(self, period) -> int:
        """Index of ``period``, given as a start year."""
        try:
            return self.period_starts.index(period)
        except ValueError:
            raise KeyError(f"unknown period {period!r}") from None

    def org_index(self, org) -> int:
        try:
            return self.orgs.index(org)
        except ValueError:
            raise KeyError(f"unknown organization {org!r}") from None

    def portfolio(self, p: int) -> np.ndarray:
        """History counts at the start of period index ``p``; ``p == n_periods`` means after the last."""
        if p == self.n_periods:
            return self.history[-1] + self.delta[-1]
        return self.history[p]


def build_counts(events, period_length: int = 10) -> CountsTable:
    """Group events into periods of ``period_length`` years and tabulate counts.

    Periods start at multiples of ``period_length``; an event on a boundary
    year belongs to the later period.  Every period between the first and
    last event is present, even if empty.
    """
    events = list(events)
    if not events:
        raise ValueError("no events")
    if int(period_length) != period_length or period_length < 1:
        raise ValueError(f"period_length must be an integer >= 1 (got {period_length})")
    years = np.array([_event_year(ev) for ev in events], dtype=float)
    if not np.all(np.isfinite(years)):
        raise ValueError("event years must be finite numbers")
    origin = math.floor(years.min() / period_length) * period_length
    pidx = np.floor((years - origin) / period_length).astype(np.int64)
    n_periods = int(pidx.max()) + 1

    orgs = sorted({ev.org_id for ev in events}, key=lambda o: (str(type(o)), o))
    products = sorted({ev.product_code for ev in events})
    o_index = {o: n for n, o in enumerate(orgs)}
    j_index = {c: n for n, c in enumerate(products)}

    delta = np.zeros((n_periods, len(orgs), len(products)))
    np.add.at(delta, (pidx, [o_index[ev.org_id] for ev in events],
                      [j_index[ev.product_code] for ev in events]), 1.0)
    history = np.zeros_like(delta)
    history[1:] = np.cumsum(delta, axis=0)[:-1]
    starts = [origin + p * period_length for p in range(n_periods)]
    return CountsTable(int(period_length), starts, orgs, products, history, delta)


# --- proximity --------------------------------------------------------------

@dataclass(frozen=True)
class ProximityMatrix:
    """``phi[i, j]``: proximity of history product ``j`` to current product ``i``.

    Rows with no activity in the period are zero and listed as inactive.
    ``edges`` maps ``(source j, target i)`` to ``phi[i, j]`` for every
    retained pair, i.e. ``phi[i, j] > threshold[j]``.
    """
    period: object
    products: list
    phi: np.ndarray
    threshold: np.ndarray
    active: np.ndarray
    edges: dict = field(default_factory=dict)

    def retained(self) -> np.ndarray:
        return self.phi > self.threshold[None, :]

    def thresholded(self) -> np.ndarray:
        return np.where(self.retained(), self.phi, 0.0)


def proximity(counts: CountsTable, period) -> ProximityMatrix:
    """Proximity for ``period`` (a start year) from its deltas and prior history.

    Organizations with no history contribute nothing.  The threshold for
    history product ``j`` is its share of all innovations before the period.
    """
    p = counts.period_index(period)
    delta, hist = counts.delta[p], counts.history[p]
    dk_i = delta.sum(axis=0)
    if not np.any(dk_i > 0):
        raise ValueError(f"period {period} has no innovations")
    k_l = hist.sum(axis=1)
    shares = np.divide(hist, k_l[:, None], out=np.zeros_like(hist), where=k_l[:, None] > 0)
    weights = np.divide(delta, dk_i[None, :], out=np.zeros_like(delta), where=dk_i[None, :] > 0)
    phi = weights.T @ shares
    np.clip(phi, 0.0, 1.0, out=phi)

    k_j = hist.sum(axis=0)
    total = k_j.sum()
    # with no history at all nothing can pass the threshold
    threshold = k_j / total if total > 0 else np.full(len(k_j), np.inf)
    keep = phi > threshold[None, :]
    edges = {(counts.products[j], counts.products[i]): float(phi[i, j])
             for i, j in zip(*np.nonzero(keep))}
    return ProximityMatrix(period=period, products=list(counts.products), phi=phi,
                           threshold=threshold, active=dk_i > 0, edges=edges)


# --- density ----------------------------------------------------------------

@dataclass(frozen=True)
class DensityScore:
    org: object
    product: str
    period: object
    omega: float


def density_from_portfolio(portfolio, phi: ProximityMatrix, product: str,
                           thresholded: bool = True) -> float:
    """Portfolio-weighted proximity of ``product`` to a ``{product: count}`` mapping."""
    total = float(sum(portfolio.values()))
    if total <= 0:
        return 0.0
    target = phi.products.index(product)
    mat = phi.thresholded() if thresholded else phi.phi
    pos = {c: n for n, c in enumerate(phi.products)}
    return float(sum(cnt / total * mat[target, pos[h]] for h, cnt in portfolio.items() if cnt > 0))


def density_matrix(portfolios: np.ndarray, phi: ProximityMatrix, thresholded: bool = True) -> np.ndarray:
    """``omega[l, j]`` for a matrix of portfolio counts (orgs x products)."""
    k_l = portfolios.sum(axis=1, keepdims=True)
    shares = np.divide(portfolios, k_l, out=np.zeros_like(portfolios, dtype=float), where=k_l > 0)
    mat = phi.thresholded() if thresholded else phi.phi
    return shares @ mat.T


def density(counts: CountsTable, phi: ProximityMatrix, org, product: str, period=None,
            thresholded: bool = True) -> DensityScore:
    """Density of ``org`` toward ``product``, using its portfolio at the start of ``period``.

    ``period`` defaults to the proximity's own period.
    """
    period = phi.period if period is None else period
    row = counts.portfolio(counts.period_index(period))[counts.org_index(org)]
    portfolio = {c: row[n] for n, c in enumerate(counts.products)}
    return DensityScore(org, product, period, density_from_portfolio(portfolio, phi, product, thresholded))


# --- network statistics -----------------------------------------------------

@dataclass(frozen=True)
class NetworkStats:
    n_nodes: int
    n_edges: int
    density_pct: float
    avg_degree: float
    std_degree: float
    transitivity_pct: float
    avg_path_length: float
    connectivity: int
    biggest_component: int
    small_worldness: float

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in self.__dict__.items()}


def undirected_graph(phi: ProximityMatrix) -> nx.Graph:
    """Undirected projection of the retained edges, self-loops dropped, all products as nodes."""
    g = nx.Graph()
    g.add_nodes_from(phi.products)
    g.add_edges_from((s, t) for s, t in phi.edges if s != t)
    return g


def directed_graph(phi: ProximityMatrix) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(phi.products)
    g.add_weighted_edges_from((s, t, w) for (s, t), w in phi.edges.items() if s != t)
    return g


def _giant_path_length(g: nx.Graph) -> tuple[float, int]:
    if g.number_of_nodes() == 0:
        return math.nan, 0
    giant = max(nx.connected_components(g), key=len)
    if len(giant) < 2:
        return math.nan, len(giant)
    return nx.average_shortest_path_length(g.subgraph(giant)), len(giant)


def _transitivity(g: nx.Graph) -> float:
    # from integer counts, so the ratio is exact up to one division
    triangles = sum(nx.triangles(g).values()) // 3
    triples = sum(d * (d - 1) // 2 for _, d in g.degree())
    return 3 * triangles / triples if triples else 0.0


def graph_stats(g: nx.Graph, n_random: int = 100, seed: int = 0) -> NetworkStats:
    """Summary statistics of an undirected simple graph with an Erdos-Renyi baseline."""
    if n_random < 1:
        raise ValueError(f"n_random must be >= 1 (got {n_random})")
    n, e = g.number_of_nodes(), g.number_of_edges()
    if n < 2:
        raise ValueError(f"need at least 2 nodes (got {n})")
    degrees = np.array([d for _, d in g.degree()], dtype=float)
    clustering = _transitivity(g)
    path, giant = _giant_path_length(g)

    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n_random)]
    c_rand, l_rand = [], []
    for s in seeds:
        r = nx.gnm_random_graph(n, e, seed=s)
        c_rand.append(_transitivity(r))
        l_rand.append(_giant_path_length(r)[0])
    c_mean = float(np.mean(c_rand))
    l_mean = float(np.mean(l_rand)) if not all(math.isnan(v) for v in l_rand) else math.nan
    if c_mean > 0 and path > 0 and l_mean > 0:
        sw = (clustering / c_mean) / (path / l_mean)
    else:
        sw = math.nan

    return NetworkStats(
        n_nodes=n,
        n_edges=e,
        density_pct=100.0 * e / (n * (n - 1) / 2),
        avg_degree=float(degrees.mean()),
        std_degree=float(degrees.std()),
        transitivity_pct=100.0 * clustering,
        avg_path_length=float(path),
        connectivity=nx.number_connected_components(g),
        biggest_component=giant,
        small_worldness=float(sw),
    )


def network_stats(phi: ProximityMatrix, n_random: int = 100, seed: int = 0) -> NetworkStats:
    """Statistics of the undirected projection of ``phi``'s retained edges."""
    return graph_stats(undirected_graph(phi), n_random=n_random, seed=seed)


def reachable_products(phi: ProximityMatrix, sources, max_hops: int = 2) -> dict:
    """Products reachable from ``sources`` along directed edges in at most ``max_hops`` hops.

    Returns ``{product: hops}`` excluding the sources themselves.
    """
    g = directed_graph(phi)
    sources = set(sources)
    unknown = sources - set(g.nodes)
    if unknown:
        raise KeyError(f"unknown products {sorted(unknown)}")
    best: dict = {}
    for s in sorted(sources):
        for node, hops in nx.single_source_shortest_path_length(g, s, cutoff=max_hops).items():
            if node not in sources and (node not in best or hops < best[node]):
                best[node] = hops
    return dict(sorted(best.items()))


# --- diversification prediction ---------------------------------------------

@dataclass(frozen=True)
class DiversificationEval:
    """Next-period innovation probability by density bin.

    Each bin is a dict with ``omega_lo``, ``omega_hi`` and, for ``all``,
    ``explore`` and ``exploit``, the count ``n_*``, hits ``hits_*`` and
    probability ``p_*`` (``None`` when the count is zero).
    """
    bins: list
    n_triples: int
    base_rate: dict

    def to_dict(self) -> dict:
        return {"n_triples": self.n_triples, "base_rate": self.base_rate, "bins": self.bins}


def prediction_triples(counts: CountsTable, horizon_periods: int = 1, thresholded: bool = True):
    """``(omega, hit, explorative)`` arrays over every (org, product, period) triple.

    For period ``p``, proximity comes from ``p`` and the portfolio is the
    history at the start of ``p + 1``; ``hit`` means the organization
    innovated in the product during the next ``horizon_periods`` periods.
    Organizations with an empty portfolio are skipped.
    """
    if counts.n_periods < 2:
        raise ValueError("prediction needs at least two periods")
    if horizon_periods < 1:
        raise ValueError(f"horizon_periods must be >= 1 (got {horizon_periods})")
    omegas, hits, explore = [], [], []
    for p in range(counts.n_periods - 1):
        if not counts.delta[p].any():
            continue
        phi = proximity(counts, counts.period_starts[p])
        port = counts.portfolio(p + 1)
        present = port.sum(axis=1) > 0
        if not present.any():
            continue
        port = port[present]
        future = counts.delta[p + 1:p + 1 + horizon_periods, present].sum(axis=0)
        omegas.append(density_matrix(port, phi, thresholded).ravel())
        hits.append((future > 0).ravel())
        explore.append((port == 0).ravel())
    if not omegas:
        raise ValueError("no period with both activity and a following period")
    return np.concatenate(omegas), np.concatenate(hits), np.concatenate(explore)


def _rate(hits: np.ndarray) -> float | None:
    return float(hits.mean()) if len(hits) else None


def evaluate_prediction(counts: CountsTable, phi=None, horizon_periods: int = 1,
                        n_bins: int = 10, thresholded: bool = True) -> DiversificationEval:
    """Bin triples by quantiles of ``omega`` and report next-period innovation rates.

    Bin edges are the distinct ``omega`` quantiles, so heavy ties produce
    fewer than ``n_bins`` bins.  ``phi`` is accepted for interface symmetry;
    proximities are recomputed per period.
    """
    omega, hit, explore = prediction_triples(counts, horizon_periods, thresholded)
    edges = np.unique(np.quantile(omega, np.linspace(0.0, 1.0, n_bins + 1)))
    which = np.searchsorted(edges[1:-1], omega, side="right")
    bins = []
    for b in range(len(edges) - 1 if len(edges) > 1 else 1):
        m = which == b
        if not m.any():
            continue
        entry = {"omega_lo": float(omega[m].min()), "omega_hi": float(omega[m].max())}
        for name, mask in (("all", m), ("explore", m & explore), ("exploit", m & ~explore)):
            entry[f"n_{name}"] = int(mask.sum())
            entry[f"hits_{name}"] = int(hit[mask].sum())
            entry[f"p_{name}"] = _rate(hit[mask])
        bins.append(entry)
    base = {"all": _rate(hit), "explore": _rate(hit[explore]), "exploit": _rate(hit[~explore])}
    return DiversificationEval(bins=bins, n_triples=int(len(omega)), base_rate=base)


# --- edge-list interchange --------------------------------------------------

def network_rows(phi: ProximityMatrix) -> list:
    return [[s, t, repr(w), phi.period] for (s, t), w in sorted(phi.edges.items())]


def export_network(phis, path) -> None:
    """Write retained edges of one or more proximity matrices, sorted by source then target."""
    if isinstance(phis, ProximityMatrix):
        phis = [phis]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EDGE_HEADER)
        for phi in phis:
            w.writerows(network_rows(phi))


def read_network(path) -> dict:
    """Inverse of :func:`export_network`: ``{period: {(source, target): weight}}``.

    Periods are returned as ``int`` when they parse as integers.
    """
    out: dict = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EDGE_HEADER:
            raise ValueError(f"line 1: expected header {','.join(EDGE_HEADER)!r}, got {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ValueError(f"line {line_no}: expected 4 fields, got {len(row)}")
            s, t, w, period = row
            try:
                weight = float(w)
            except ValueError:
                raise ValueError(f"line {line_no}: weight {w!r} is not numeric") from None
            try:
                period = int(period)
            except ValueError:
                pass
            out.setdefault(period, {})[(s, t)] = weight
    return out


# --- synthetic data ---------------------------------------------------------

def synthetic_ring_events(n_orgs: int = 300, n_products: int = 40, n_periods: int = 4,
                          events_per_period: int = 6, locality: float = 2.0,
                          explore_prob: float = 0.5, period_length: int = 10,
                          seed: int = 0) -> list[ProductEvent]:
    """Events where organizations diversify into products near what they hold.

    Products sit on a ring.  Each organization starts at a random product;
    each event repeats a held product with probability ``1 - explore_prob``
    and otherwise picks a product with weight ``exp(-distance/locality)`` to
    the nearest held product.  Every organization makes the same number of
    events per period, spread over the period's years.
    """
    rng = np.random.default_rng(seed)
    ring = np.arange(n_products)
    events = []
    for org in range(n_orgs):
        held = {int(rng.integers(n_products))}
        for p in range(n_periods):
            years = p * period_length + rng.integers(0, period_length, events_per_period)
            for year in np.sort(years):
                if rng.random() < explore_prob:
                    h = np.fromiter(held, dtype=int)
                    gap = np.abs(ring[:, None] - h[None, :])
                    dist = np.minimum(gap, n_products - gap).min(axis=1)
                    w = np.exp(-dist / locality)
                    code = int(rng.choice(n_products, p=w / w.sum()))
                else:
                    code = int(rng.choice(sorted(held)))
                held.add(code)
                events.append(ProductEvent(f"o{org:04d}", int(year), f"c{code:03d}"))
    return events


def shuffle_products(events, seed: int = 0) -> list[ProductEvent]:
    """Permute product codes across events, keeping organizations and years."""
    rng = np.random.default_rng(seed)
    codes = [ev.product_code for ev in events]
    perm = rng.permutation(len(codes))
    return [ProductEvent(ev.org_id, _event_year(ev), codes[n]) for ev, n in zip(events, perm)]
