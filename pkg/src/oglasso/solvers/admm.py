"""ADMM on the split ``z = L x``."""

from __future__ import annotations

import math

import numpy as np

from ..data import ProblemData
from ..groups import LiftingOperator
from ..linalg import DiagPlusGram
from ..trace import SolverTrace
from .common import SolveResult, SolverConfig, objective, prox_group_norm


def admm_x_system(problem: ProblemData, L: LiftingOperator, tau: float, plan, method="auto"):
    """Solver for ``(A^T A + lam tau L^T L) x = r``; Woodbury applies when ``m < n``."""
    return DiagPlusGram(problem.A, L.gram_diag, problem.lam * tau, plan, method=method)


def admm_solve(
    problem: ProblemData,
    L: LiftingOperator,
    config: SolverConfig = SolverConfig(),
    x0=None,
    z0=None,
    psi0=None,
    kappa=None,
) -> SolveResult:
    """ADMM with penalty ``tau`` (``config.tau``, default 1).

    Stops when ``max(||z - Lx||, tau ||L^T (z+ - z)||) / (1 + ||Lx||)`` is at
    most ``config.tol``. ``state`` carries ``z`` (exact zero blocks) and the
    multiplier ``psi``.
    """
    tau = config.tau if config.tau is not None else 1.0
    A, y, lam = problem.A, problem.y, problem.lam
    kappa = problem.n if kappa is None else kappa
    system = admm_x_system(problem, L, tau, config.plan)
    aty = np.asarray(A.T @ y).ravel()

    x = np.zeros(problem.n) if x0 is None else np.array(x0, dtype=float)
    z = L.lift(x) if z0 is None else np.array(z0, dtype=float)
    psi = np.zeros(L.p) if psi0 is None else np.array(psi0, dtype=float)
    trace = SolverTrace()
    converged, res, it = False, math.inf, 0
    for it in range(1, config.max_iters + 1):
        x = system.solve(aty + lam * L.adjoint(psi + tau * z))
        lx = L.lift(x)
        z_new = prox_group_norm(lx - psi / tau, L, 1.0 / tau)
        gap = z_new - lx
        psi = psi + tau * gap
        primal = np.linalg.norm(gap)
        dual = tau * np.linalg.norm(L.adjoint(z_new - z))
        res = max(primal, dual) / (1.0 + np.linalg.norm(lx))
        z = z_new
        trace.record(it, objective(problem, L, x), res, kappa)
        if res <= config.tol:
            converged = True
            break
    return SolveResult(x, trace, converged, it, res, {"z": z, "psi": psi})
