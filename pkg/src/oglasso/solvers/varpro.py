"""Variable projection on the Hadamard factorization ``L x = u (.)_J v``.

Eliminating ``(x, u)`` leaves the smooth function

    f(v) = |v|^2 / 2 + min_x { |A x - y|^2 / (2 lam) + x^T W_v x / 2 },
    W_v = L^T diag(1 / v^2 on each block) L  (diagonal),

with gradient ``v - v * |xi_J|^2`` where ``xi = D_v L x``. The lower problem
is a ridge regression with diagonal weights, solved in the smaller of the
``n x n`` or ``m x m`` forms.

Groups with ``|v_i|`` below ``config.v_floor`` are frozen: their coordinates
are pinned to zero (``W^{-1} = 0`` there) and their ``xi`` block takes its
``v -> 0`` limit.

``v_i = 0`` is always stationary, so a small gradient does not rule out a
saddle. Before convergence is declared, the groups with ``|v_i| <= sqrt(tol)``
are checked for a joint direction of negative curvature and revived along it
when one exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..data import ProblemData
from ..errors import LineSearchError
from ..groups import LiftingOperator
from ..linalg import (
    DEFAULT_PLAN,
    Cholesky,
    LinearSolverPlan,
    column_sq_norms,
    gram,
    outer_gram,
    pcg_solve,
)
from ..trace import SolverTrace
from .common import SolveResult, SolverConfig, objective

V_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class VarProState:
    """Lower-level solution at ``v`` and the value ``f(v)``."""

    v: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    alpha: np.ndarray
    value: float
    frozen: np.ndarray


class VarProLower:
    """Lower-level solver bound to one problem; caches ``A^T A`` when ``n <= m``."""

    def __init__(self, problem: ProblemData, L: LiftingOperator,
                 plan: LinearSolverPlan = DEFAULT_PLAN, v_floor: float = V_FLOOR):
        self.problem = problem
        self.L = L
        self.plan = plan
        self.v_floor = v_floor
        self.aty = np.asarray(problem.A.T @ problem.y).ravel()
        self.primal_form = problem.n <= problem.m
        self._gram = gram(problem.A) if self.primal_form and plan.kind == "cholesky" else None
        self._w2 = L.row_weight**2
        if plan.kind == "pcg":
            A = problem.A
            self._sq = A.multiply(A) if sp.issparse(A) else A * A
            self._col_sq = column_sq_norms(A)

    def weights(self, v):
        """``(W^{-1}, 1/v^2, frozen)`` with ``W^{-1} = 0`` on frozen coordinates."""
        L = self.L
        frozen = np.abs(v) < self.v_floor
        with np.errstate(divide="ignore"):
            inv_v2 = np.where(frozen, np.inf, 1.0 / np.where(frozen, 1.0, v) ** 2)
        W = np.bincount(L.row_to_col, weights=self._w2 * inv_v2[L.row_to_group], minlength=L.n)
        with np.errstate(divide="ignore"):
            winv = 1.0 / W
        return winv, inv_v2, frozen

    def solve(self, v) -> VarProState:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.L.n_groups,):
            raise ValueError(f"v must have length {self.L.n_groups}")
        A, y, lam = self.problem.A, self.problem.y, self.problem.lam
        winv, inv_v2, frozen = self.weights(v)

        if self.primal_form:
            # x = S (S G S + lam I)^{-1} S A^T y with S = W^{-1/2}
            s = np.sqrt(winv)
            if self._gram is not None:
                K = s[:, None] * self._gram * s[None, :]
                K[np.diag_indices_from(K)] += lam
                t = Cholesky(K).solve(s * self.aty)
            else:
                def apply_K(u):
                    return s * np.asarray(A.T @ (A @ (s * u))).ravel() + lam * u
                diag = s**2 * self._col_sq + lam
                t = pcg_solve(apply_K, diag, s * self.aty, self.plan.tol, self.plan.max_iters)[0]
            x = s * t
            resid = np.asarray(A @ x).ravel() - y
            alpha = resid / lam
            g = -np.asarray(A.T @ alpha).ravel()
        else:
            # (lam I + A W^{-1} A^T) alpha = -y, x = W^{-1} (-A^T alpha)
            if self.plan.kind == "cholesky":
                M = outer_gram(A, winv)
                M[np.diag_indices_from(M)] += lam
                alpha = -Cholesky(M).solve(y)
            else:
                def apply_M(a):
                    return np.asarray(A @ (winv * np.asarray(A.T @ a).ravel())).ravel() + lam * a
                diag = np.asarray(self._sq @ winv).ravel() + lam
                alpha = -pcg_solve(apply_M, diag, y, self.plan.tol, self.plan.max_iters)[0]
            g = -np.asarray(A.T @ alpha).ravel()
            x = winv * g
            resid = np.asarray(A @ x).ravel() - y

        xi = self._xi(g, winv, inv_v2, frozen)
        v2 = np.where(frozen, 0.0, v**2)
        value = 0.5 * float(v2.sum()) + 0.5 * float(xi**2 @ v2[self.L.row_to_group]) \
            + float(resid @ resid) / (2.0 * lam)
        return VarProState(v, x, xi, alpha, value, frozen)

    def _xi(self, g, winv, inv_v2, frozen):
        L = self.L
        grp, col = L.row_to_group, L.row_to_col
        frozen_rows = frozen[grp]
        frozen_w2 = np.bincount(col, weights=self._w2 * frozen_rows, minlength=L.n)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(
                frozen_rows,
                1.0 / frozen_w2[col],
                winv[col] * np.where(frozen_rows, 0.0, inv_v2[grp]),
            )
        return L.row_weight * g[col] * ratio


def varpro_lower_solve(problem: ProblemData, L: LiftingOperator, v, plan=DEFAULT_PLAN):
    """``(x, alpha, xi)`` solving ``(A^T A + lam W_v) x = A^T y`` at ``v``."""
    s = VarProLower(problem, L, plan).solve(v)
    return s.x, s.alpha, s.xi


def varpro_gradient(v, xi, L: LiftingOperator) -> np.ndarray:
    """``v - v * |xi_J|^2`` blockwise."""
    v = np.asarray(v, dtype=float)
    return v - v * L.block_norms(xi) ** 2


def varpro_value(problem: ProblemData, L: LiftingOperator, v, plan=DEFAULT_PLAN) -> float:
    return VarProLower(problem, L, plan).solve(v).value


def varpro_solve(
    problem: ProblemData,
    L: LiftingOperator,
    config: SolverConfig = SolverConfig(),
    v0=None,
    kappa=None,
) -> SolveResult:
    """Gradient descent on ``f(v)`` with Armijo backtracking.

    Stops when ``|grad f(v)| / (1 + |v|) <= config.tol`` and the groups with
    ``|v_i| <= sqrt(tol)`` admit no joint descent direction. Returns the
    lower-level ``x`` at the final ``v`` (``state["v"]``, ``state["xi"]``, ``state["alpha"]``).
    """
    kappa = problem.n if kappa is None else kappa
    lower = VarProLower(problem, L, config.plan, config.v_floor)
    v = np.ones(L.n_groups) if v0 is None else np.array(v0, dtype=float)
    cur = lower.solve(v)
    trace = SolverTrace()
    converged, res, it = False, math.inf, 0
    for it in range(1, config.max_iters + 1):
        grad = varpro_gradient(cur.v, cur.xi, L)
        gnorm2 = float(grad @ grad)
        res = math.sqrt(gnorm2) / (1.0 + np.linalg.norm(cur.v))
        trace.record(it, objective(problem, L, cur.x), res, kappa)
        if res <= config.tol:
            revived = _escape_saddle(lower, cur, L, config)
            if revived is None:
                converged = True
                break
            cur = revived
            continue
        # Once the Armijo decrease is below rounding in f, test it on the
        # trapezoid estimate f(v - s g) - f(v) ~ -s (|g|^2 + g.g_new) / 2,
        # which only needs gradients (approximate Armijo).
        noise = 1e3 * np.finfo(float).eps * max(1.0, abs(cur.value))
        step = config.armijo_step
        for _ in range(config.armijo_max_backtracks):
            trial_v = cur.v - step * grad
            trial_v[np.abs(trial_v) < config.v_floor] = 0.0
            trial = lower.solve(trial_v)
            decrease = config.armijo_slope * step * gnorm2
            if decrease >= noise:
                if trial.value <= cur.value - decrease:
                    break
            elif trial.value - cur.value <= noise:
                g_new = varpro_gradient(trial.v, trial.xi, L)
                if g_new @ grad >= -(1.0 - 2.0 * config.armijo_slope) * gnorm2:
                    break
            step *= config.armijo_shrink
        else:
            raise LineSearchError(
                f"no Armijo step after {config.armijo_max_backtracks} backtracks "
                f"(|grad| = {math.sqrt(gnorm2):.3e})",
                step=step,
                grad_norm=math.sqrt(gnorm2),
            )
        cur = trial
    state = {"v": cur.v, "xi": cur.xi, "alpha": cur.alpha}
    return SolveResult(cur.x, trace, converged, it, res, state)


def _escape_saddle(lower: VarProLower, cur: VarProState, L: LiftingOperator,
                   config: SolverConfig, sweeps: int = 100):
    """Leave ``v_S = 0`` along a descent direction, or ``None`` if there is none.

    With ``v_S = c sqrt(s)`` on the near-zero groups ``S`` and ``sum(s) = 1``,
    ``f`` changes by about ``c^2 (1 - H(s)) / 2`` where
    ``H(s) = sum_j g_j^2 / sum_{t in S, j in G_t} (w_t^2 / s_t)`` and ``g`` is
    the loss gradient. ``H`` is maximized by the reweighting
    ``s_t ~ w_t |x_Gt|`` with ``x = g / W_s``; descent exists iff the maximum
    exceeds 1.
    """
    root = math.sqrt(config.tol)
    small = np.abs(cur.v) <= root
    if not small.any():
        return None
    grp, col = L.row_to_group, L.row_to_col
    rows = small[grp]
    g = -np.asarray(lower.problem.A.T @ cur.alpha).ravel()
    w2 = lower._w2[rows]
    s = np.where(small, 1.0 / small.sum(), 0.0)
    best, best_s = -math.inf, s
    for _ in range(sweeps):
        W = np.bincount(col[rows], weights=w2 / s[grp[rows]], minlength=L.n)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(W > 0, g / W, 0.0)
        H = float(g @ x)
        if H <= best * (1.0 + 1e-12):
            break
        best, best_s = H, s
        z = np.where(rows, L.lift(x), 0.0)
        s = np.where(small, L.block_norms(z), 0.0)
        if s.sum() <= 0.0:
            break
        s = s / s.sum()
        s = np.where(small, np.maximum(s, 1e-6 * s.max()), 0.0)
    if best <= 1.0 + root:
        return None
    d = np.sqrt(best_s)
    noise = 1e3 * np.finfo(float).eps * max(1.0, abs(cur.value))
    step = config.armijo_step
    for _ in range(config.armijo_max_backtracks):
        v = cur.v.copy()
        v[small] = step * d[small]
        if np.any(np.abs(v[small]) < config.v_floor):
            break
        trial = lower.solve(v)
        if trial.value < cur.value - noise:
            return trial
        step *= config.armijo_shrink
    return None
