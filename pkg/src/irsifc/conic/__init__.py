"""Conic feasibility oracles backed by an in-tree interior-point solver."""

from .feasibility import (FEASIBLE, INFEASIBLE, NUMERICAL_FAILURE, FeasibilityVerdict,
                          SdpFeasibilityProblem, SocFeasibilityProblem, SocUser,
                          solve_sdp_feasibility, solve_soc_feasibility)
from .hsde import ConeSolution, SolverOptions, solve

__all__ = [
    "FEASIBLE", "INFEASIBLE", "NUMERICAL_FAILURE", "FeasibilityVerdict", "SdpFeasibilityProblem",
    "SocFeasibilityProblem", "SocUser", "solve_sdp_feasibility", "solve_soc_feasibility",
    "ConeSolution", "SolverOptions", "solve",
]
