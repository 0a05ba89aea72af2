"""Overlapping group LASSO: lifting calculus, dual certificates, AdaDROPS and solvers.

Minimizes ``||A x - y||^2 / (2 lam) + sum_t w_t ||x[G_t]||`` where the groups
``G_t`` may overlap.
"""

__version__ = "0.1.0"

from .adadrops import AdaDropsConfig, adadrops_run, build_restricted, support_update
from .certificates import (
    correlation_init,
    detect_zero_groups_lasso,
    detect_zero_groups_ogn,
    kkt_residual,
    lasso_certificate,
    ogn_certificate,
)
from .data import ProblemData, SyntheticSpec, gen_sliding, lambda_max, parse_libsvm
from .groups import GroupCovering, build_lifting, compute_supports, group_norm
from .solvers import SolverConfig, admm_solve, objective, pd_solve, varpro_solve

__all__ = [
    "AdaDropsConfig",
    "GroupCovering",
    "ProblemData",
    "SolverConfig",
    "SyntheticSpec",
    "adadrops_run",
    "admm_solve",
    "build_lifting",
    "build_restricted",
    "compute_supports",
    "correlation_init",
    "detect_zero_groups_lasso",
    "detect_zero_groups_ogn",
    "gen_sliding",
    "group_norm",
    "kkt_residual",
    "lambda_max",
    "lasso_certificate",
    "objective",
    "ogn_certificate",
    "parse_libsvm",
    "pd_solve",
    "support_update",
    "varpro_solve",
]
