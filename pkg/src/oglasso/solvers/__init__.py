"""Primal-Dual, ADMM and VarPro solvers for the overlapping group LASSO."""

from .admm import admm_solve, admm_x_system
from .common import (
    SolveResult,
    SolverConfig,
    extract_support,
    hadamard_value,
    objective,
    project_omega,
    prox_group_norm,
)
from .pd import pd_solve, pd_steps
from .varpro import (
    VarProLower,
    VarProState,
    varpro_gradient,
    varpro_lower_solve,
    varpro_solve,
    varpro_value,
)

SOLVERS = {"pd": pd_solve, "admm": admm_solve, "varpro": varpro_solve}

__all__ = [
    "SOLVERS",
    "SolveResult",
    "SolverConfig",
    "VarProLower",
    "VarProState",
    "admm_solve",
    "admm_x_system",
    "extract_support",
    "hadamard_value",
    "objective",
    "pd_solve",
    "pd_steps",
    "project_omega",
    "prox_group_norm",
    "varpro_gradient",
    "varpro_lower_solve",
    "varpro_solve",
    "varpro_value",
]
