"""Interior-point solver for linear programs over symmetric cones."""
from .cones import NonnegCone, PSDCone, SecondOrderCone, smat, svec, svec_dim
from .problem import ConeBlock, ConicProblem, ConicSolution
from .solver import (FAILED, INFEASIBLE, OPTIMAL, UNBOUNDED, NumericalFailure,
                     StandardResult, solve_standard)

__all__ = [
    "NonnegCone", "PSDCone", "SecondOrderCone", "smat", "svec", "svec_dim",
    "ConeBlock", "ConicProblem", "ConicSolution",
    "FAILED", "INFEASIBLE", "OPTIMAL", "UNBOUNDED", "NumericalFailure",
    "StandardResult", "solve_standard",
]
