"""Estimators and analytic oracles for Heaps' law, attachment kernels and size distributions."""

from adjpossible.laws.fitness import NormalityCheck, bb_closed_form, heterogeneous_fitness_limit  # noqa: F401
from adjpossible.laws.heaps import (  # noqa: F401
    HeapsFit,
    OdeSolution,
    fit_heaps,
    heaps_pairs,
    implicit_residual,
    solve_heaps_ode,
)
from adjpossible.laws.kernel import KernelFit, estimate_attachment_kernel  # noqa: F401
from adjpossible.laws.master import stationary_distribution  # noqa: F401
from adjpossible.laws.powerlaw import (  # noqa: F401
    LRComparison,
    PowerLawFit,
    ccdf_regression,
    compare_lognormal,
    fit_power_law,
)
from adjpossible.laws.zeta import hurwitz_zeta  # noqa: F401
