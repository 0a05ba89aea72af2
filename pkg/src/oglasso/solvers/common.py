"""Kernels and containers shared by the three solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import ProblemData
from ..groups import LiftingOperator
from ..linalg import DEFAULT_PLAN, LinearSolverPlan
from ..trace import SolverTrace


@dataclass(frozen=True)
class SolverConfig:
    """Iteration limits, stopping threshold and step parameters.

    ``sigma``/``tau`` are the Primal-Dual steps (default ``0.99 / ||L||``
    each); ADMM reads ``tau`` as its penalty (default 1). The ``armijo_*``
    fields drive the VarPro line search.
    """

    max_iters: int = 20000
    tol: float = 1e-8
    sigma: float | None = None
    tau: float | None = None
    plan: LinearSolverPlan = DEFAULT_PLAN
    seed: int = 0
    armijo_step: float = 1.0
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    armijo_max_backtracks: int = 60
    v_floor: float = 1e-10

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass
class SolveResult:
    """Final iterate, trace and solver-specific state (duals, VarPro ``v``)."""

    x: np.ndarray
    trace: SolverTrace
    converged: bool
    n_iter: int
    residual: float
    state: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.trace.last["obj"] if self.trace.last else float("nan")


def objective(problem: ProblemData, L: LiftingOperator, x) -> float:
    """``||A x - y||^2 / (2 lam) + sum_t w_t ||x[G_t]||``."""
    r = np.asarray(problem.A @ x).ravel() - problem.y
    return float(r @ r / (2.0 * problem.lam) + L.group_norm(x))


def prox_group_norm(z, L: LiftingOperator, gamma: float) -> np.ndarray:
    """Blockwise ``z[J] * max(0, 1 - gamma / ||z[J]||)``."""
    z = np.asarray(z, dtype=float)
    norms = L.block_norms(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > gamma, 1.0 - gamma / norms, 0.0)
    return z * scale[L.row_to_group]


def project_omega(psi, L: LiftingOperator) -> np.ndarray:
    """Project each lifted block onto the unit Euclidean ball."""
    psi = np.asarray(psi, dtype=float)
    norms = L.block_norms(psi)
    scale = 1.0 / np.maximum(norms, 1.0)
    return psi * scale[L.row_to_group]


def hadamard_value(L: LiftingOperator, x):
    """Optimal Hadamard factors ``(u, v)`` of ``L x`` and ``(||u||^2 + ||v||^2) / 2``."""
    z = L.lift(x)
    norms = L.block_norms(z)
    v = np.sqrt(norms)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(v > 0, 1.0 / v, 0.0)
    u = z * inv[L.row_to_group]
    return u, v, 0.5 * float(u @ u) + 0.5 * float(v @ v)


SUPPORT_RTOL = 1e-8


def extract_support(L: LiftingOperator, x, rtol: float = SUPPORT_RTOL, atol: float = 0.0) -> np.ndarray:
    """Groups with ``||x[G_t]|| > max(rtol ||x||, atol)``.

    Thresholding ``x`` rather than reading zero blocks of an auxiliary
    variable keeps the support consistent with ``x`` itself. ``atol`` catches
    solutions that are pure round-off, where the relative test keeps everything.
    """
    x = np.asarray(x, dtype=float)
    norms = L.block_norms(L.lift(x)) / L.weights
    return np.flatnonzero(norms > max(rtol * np.linalg.norm(x), atol))
