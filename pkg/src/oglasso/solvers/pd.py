"""Primal-Dual splitting on the saddle-point form of the problem."""

from __future__ import annotations

import math

import numpy as np

from ..data import ProblemData
from ..errors import StepSizeError
from ..groups import LiftingOperator
from ..linalg import DiagPlusGram
from ..trace import SolverTrace
from .common import SolveResult, SolverConfig, objective, project_omega


def pd_steps(L: LiftingOperator, config: SolverConfig):
    default = 0.99 / math.sqrt(L.norm_sq)
    sigma = config.sigma if config.sigma is not None else default
    tau = config.tau if config.tau is not None else default
    if sigma * tau * L.norm_sq >= 1.0:
        raise StepSizeError(
            f"sigma*tau*||L||^2 = {sigma * tau * L.norm_sq:.4g} must be < 1"
        )
    return sigma, tau


def pd_solve(
    problem: ProblemData,
    L: LiftingOperator,
    config: SolverConfig = SolverConfig(),
    x0=None,
    psi0=None,
    kappa=None,
) -> SolveResult:
    """Primal-Dual splitting.

    Each iteration solves ``(lam I + sigma A^T A) x+ = lam x - lam sigma L^T psi
    + sigma A^T y``, extrapolates ``xbar = 2 x+ - x`` and projects
    ``psi + tau L xbar`` blockwise onto the unit ball. Stops once the relative
    change of ``(x, psi)`` drops below ``config.tol``.
    """
    sigma, tau = pd_steps(L, config)
    A, y, lam = problem.A, problem.y, problem.lam
    kappa = problem.n if kappa is None else kappa
    system = DiagPlusGram(A, 1.0, lam / sigma, config.plan)
    aty = np.asarray(A.T @ y).ravel()

    x = np.zeros(problem.n) if x0 is None else np.array(x0, dtype=float)
    psi = np.zeros(L.p) if psi0 is None else project_omega(psi0, L)
    trace = SolverTrace()
    converged, res, it = False, math.inf, 0
    for it in range(1, config.max_iters + 1):
        rhs = lam * x - lam * sigma * L.adjoint(psi) + sigma * aty
        x_new = system.solve(rhs) / sigma
        psi_new = project_omega(psi + tau * L.lift(2.0 * x_new - x), L)
        step = math.sqrt(np.sum((x_new - x) ** 2) + np.sum((psi_new - psi) ** 2))
        scale = 1.0 + math.sqrt(x @ x + psi @ psi)
        res = step / scale
        x, psi = x_new, psi_new
        trace.record(it, objective(problem, L, x), res, kappa)
        if res <= config.tol:
            converged = True
            break
    return SolveResult(x, trace, converged, it, res, {"psi": psi})
