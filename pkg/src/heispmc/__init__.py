"""Prescribed mean curvature t-graphs in the Riemannian Heisenberg group.

Solvers for div((Du + X)/sqrt(eps^2 + |Du + X|^2)) = H on planar domains,
solvability checks for (Omega, H), graph curvature diagnostics and the
eps -> 0 continuation.
"""

from .conditions import ConditionReport, cheeger_bound, classify_domain, serrin_check
from .grid import GridDomain, ScalarField
from .kernels import BACKEND
from .solve import (
    PmcProblem,
    SolveReport,
    SolverConfig,
    boundary_flux,
    comparison_check,
    minimize_penalized,
    solve_dirichlet,
)
from .subriem import EpsSchedule, LimitReport, energy_eps, energy_subriemannian, eps_continuation

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConditionReport",
    "EpsSchedule",
    "GridDomain",
    "LimitReport",
    "PmcProblem",
    "ScalarField",
    "SolveReport",
    "SolverConfig",
    "boundary_flux",
    "cheeger_bound",
    "classify_domain",
    "comparison_check",
    "energy_eps",
    "energy_subriemannian",
    "eps_continuation",
    "minimize_penalized",
    "serrin_check",
    "solve_dirichlet",
]
