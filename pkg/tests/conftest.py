import numpy as np
import pytest

from adjpossible.engine import Snapshot
from adjpossible.productspace import ProductEvent


def worked_example_events():
    """Two firms.  A holds electric motors and automotive 50/50 and makes 4 of the 5
    automotive innovations in the second decade; B holds only automotive and makes the fifth."""
    return [
        ProductEvent("A", 1990, "electric_motors"),
        ProductEvent("A", 1991, "automotive"),
        ProductEvent("B", 1992, "automotive"),
        ProductEvent("B", 1993, "automotive"),
        *[ProductEvent("A", 2000 + n, "automotive") for n in range(4)],
        ProductEvent("B", 2004, "automotive"),
    ]


def k5_events():
    """Org ``l`` holds one of every product except ``l``, then innovates in ``l``:
    every off-diagonal proximity is 0.25 against a threshold of 0.2."""
    products = [f"p{n}" for n in range(5)]
    events = []
    for l, own in enumerate(products):
        events += [ProductEvent(f"o{l}", 1990, p) for p in products if p != own]
        events.append(ProductEvent(f"o{l}", 2000, own))
    return events


def yule_snapshots(n_orgs, steps, rate_of_k, seed):
    """Population where each org's per-step events are Poisson(rate_of_k(k)); k starts at 1."""
    rng = np.random.default_rng(seed)
    k = np.ones(n_orgs)
    snaps = []
    for t in range(steps):
        k = k + rng.poisson(rate_of_k(k))
        snaps += [Snapshot(i, t, int(v), 1, 1.0) for i, v in enumerate(k)]
    return snaps


@pytest.fixture
def worked_example():
    return worked_example_events()


@pytest.fixture
def k5():
    return k5_events()


# verdict lines from the acceptance suite, repeated after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
