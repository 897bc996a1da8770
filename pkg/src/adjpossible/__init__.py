"""Adjacent-possible innovation dynamics: simulation, statistical laws, product space."""

__version__ = "0.1.0"

from adjpossible.engine import (  # noqa: F401
    EventRecord,
    OrgState,
    Regime,
    SimParams,
    Snapshot,
    Trajectory,
    adjacent_possible_size,
    fitness,
    recombination_count,
    run_population,
    step_org,
    update_search_space,
)
