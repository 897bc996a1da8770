"""Attachment-kernel estimation: innovation rate as a function of cumulative innovations."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class KernelFit:
    exponent: float
    stderr: float
    bins: list = field(default_factory=list)  # (k_mid, mean_rate, n_orgs)

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "stderr": self.stderr, "bins": [list(b) for b in self.bins]}

    def write_bins_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k_mid", "mean_rate", "n_orgs"])
            for k_mid, rate, n in self.bins:
                w.writerow([repr(float(k_mid)), repr(float(rate)), int(n)])


def kernel_observations(snapshots):
    """Per organization-step ``(k before, events in step, org_id, time)``.

    ``snapshots`` are records with ``org_id``, ``time`` and ``k`` after each
    step; an organization's first snapshot is its birth step (``k`` before = 0).
    """
    by_org = defaultdict(list)
    for s in snapshots:
        by_org[s.org_id].append((s.time, s.k))
    ks, counts, orgs, times = [], [], [], []
    for org_id in sorted(by_org):
        prev = 0
        for t, k in sorted(by_org[org_id]):
            ks.append(prev)
            counts.append(k - prev)
            orgs.append(org_id)
            times.append(t)
            prev = k
    return (np.asarray(ks, float), np.asarray(counts, float), np.asarray(orgs),
            np.asarray(times, float))


def relative_rates(k, counts, times, window: float) -> np.ndarray:
    """Divide counts by the population rate per unit ``k`` in their time window.

    Removes common time trends (a shrinking per-capita budget, say) so that
    pooling steps does not mix different overall rates into the kernel shape.
    """
    win = np.floor(np.asarray(times, float) / window).astype(np.int64)
    _, inv = np.unique(win, return_inverse=True)
    tot_c = np.bincount(inv, weights=counts)
    tot_k = np.bincount(inv, weights=k)
    scale = np.divide(tot_c, tot_k, out=np.zeros_like(tot_c), where=tot_k > 0)
    s = scale[inv]
    return np.divide(counts, s, out=np.full_like(counts, np.nan), where=s > 0)


def kernel_from_observations(k_before, counts, org_ids, times=None, window: float | None = None,
                             bins_per_decade: float = 4.0, min_obs: int = 5,
                             dt: float = 1.0) -> KernelFit:
    """Log-bin ``(k, count)`` observations and fit ``log mean_rate ~ log k_mid``.

    ``k_mid`` is the mean ``k`` of the observations in a bin.  With ``window``
    set, counts are first converted to :func:`relative_rates` over time
    windows of that length.  Observations with ``k = 0`` are dropped, as are
    bins with fewer than ``min_obs`` observations or a zero mean rate.
    """
    k = np.asarray(k_before, float)
    c = np.asarray(counts, float) / dt
    org_ids = np.asarray(org_ids)
    keep = k >= 1
    k, c, org_ids = k[keep], c[keep], org_ids[keep]
    if len(k) == 0:
        raise ValueError("no observations with k >= 1")
    if window is not None:
        if times is None:
            raise ValueError("window normalization needs observation times")
        c = relative_rates(k, c, np.asarray(times, float)[keep], window)
        ok = np.isfinite(c)
        k, c, org_ids = k[ok], c[ok], org_ids[ok]
    top = np.log10(k.max()) + 1e-9
    edges = 10.0 ** np.arange(0.0, top + 1.0 / bins_per_decade, 1.0 / bins_per_decade)
    edges = np.unique(np.ceil(edges))
    which = np.searchsorted(edges, k, side="right") - 1

    bins = []
    for b in np.unique(which):
        m = which == b
        if m.sum() < min_obs:
            continue
        rate = c[m].mean()
        if rate <= 0:
            continue
        bins.append((float(k[m].mean()), float(rate), int(len(np.unique(org_ids[m])))))
    if len(bins) < 3:
        raise ValueError(f"need at least 3 usable bins, got {len(bins)}")
    x = np.log([b[0] for b in bins])
    y = np.log([b[1] for b in bins])
    res = stats.linregress(x, y)
    return KernelFit(exponent=float(res.slope), stderr=float(res.stderr), bins=bins)


def estimate_attachment_kernel(trajectory, window: float | None = 50.0, **kwargs) -> KernelFit:
    """Binned attachment kernel of a simulated trajectory (or its snapshots).

    Rates are relative to the population rate within ``window``-step blocks;
    pass ``window=None`` for raw per-step counts.
    """
    snapshots = getattr(trajectory, "snapshots", trajectory)
    k, c, orgs, times = kernel_observations(snapshots)
    if c.sum() < 100 or len(np.unique(orgs[c > 0])) < 10:
        raise ValueError("insufficient data: need >= 100 events across >= 10 organizations")
    params = getattr(trajectory, "params", None)
    if params is not None:
        kwargs.setdefault("dt", params.dt)
    return kernel_from_observations(k, c, orgs, times=times, window=window, **kwargs)
