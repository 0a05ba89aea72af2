"""Dual certificates for zero-group detection, correlation screening and KKT residuals.

Two certificates are available at a point ``x``:

* the LASSO certificate ``beta = -A^T (A x - y) / lam``; ``||beta[G_t]|| < w_t``
  certifies ``x*[G_t] = 0`` at an optimum;
* the OGN certificate ``u`` in the lifted space, built from the minimum-norm
  solution of ``Lhat^T u = beta`` with active blocks overwritten by
  ``x[G_t] / ||x[G_t]||``; ``||u[J_t]|| < 1`` certifies a zero group and is
  never weaker than the LASSO test on inactive groups.

A norm exactly at the threshold counts as violating (the group is kept).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ProblemData
from .errors import DimensionError, UnsupportedMeasureError
from .groups import (
    GroupCovering,
    LiftingOperator,
    SupportState,
    effective_gram_diag,
    effective_lift_apply,
)
from .linalg import column_sq_norms
from .solvers.common import prox_group_norm


def lasso_certificate(problem: ProblemData, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise DimensionError(f"expected x of length {problem.n}, got {x.shape}")
    return -np.asarray(problem.A.T @ (problem.A @ x - problem.y)).ravel() / problem.lam


@dataclass(frozen=True, eq=False)
class OgnCertificate:
    u: np.ndarray
    state: SupportState


def min_norm_dual(L: LiftingOperator, S: SupportState, beta) -> np.ndarray:
    """``Lhat (Lhat^T Lhat)^{-1} beta``; both factors are applied matrix-free."""
    return effective_lift_apply(L, S, np.asarray(beta, dtype=float) / effective_gram_diag(L, S))


def ogn_certificate(L: LiftingOperator, S: SupportState, beta, x) -> OgnCertificate:
    """OGN certificate at ``x`` for the support state ``S`` (normally built from ``x``)."""
    u = min_norm_dual(L, S, beta)
    x = np.asarray(x, dtype=float)
    for t in S.active_groups:
        lo, hi = L.offsets[t], L.offsets[t + 1]
        xg = x[L.row_to_col[lo:hi]]
        nrm = np.linalg.norm(xg)
        if nrm == 0.0:
            raise ValueError(f"group {t + 1} is marked active but x vanishes on it")
        u[lo:hi] = xg / nrm
    u.setflags(write=False)
    return OgnCertificate(u, S)


def _split(values, threshold, mode, tol):
    strict = values < threshold * (1.0 - tol)
    if mode == "strict":
        return np.flatnonzero(strict)
    if mode == "violating":
        return np.flatnonzero(~strict)
    raise ValueError(f"mode must be 'strict' or 'violating', got {mode!r}")


def beta_group_norms(beta, covering: GroupCovering) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    return np.array([np.linalg.norm(beta[G]) for G in covering.groups])


def detect_zero_groups_lasso(beta, covering: GroupCovering, mode="strict", tol=0.0):
    """Groups with ``||beta[G_t]|| < w_t`` (``strict``) or the complement (``violating``).

    ``tol`` shrinks the threshold to ``w_t (1 - tol)`` so that a certificate
    evaluated at an approximate solution errs on the side of keeping groups.
    """
    return _split(beta_group_norms(beta, covering), covering.weights, mode, tol)


def detect_zero_groups_ogn(L: LiftingOperator, u, mode="strict", tol=0.0):
    """Groups with ``||u[J_t]|| < 1`` (``strict``) or the complement (``violating``).

    Active blocks of an ``OgnCertificate`` have norm 1 by construction and are
    always violating, even when rounding leaves the computed norm at ``1 - eps``.
    """
    if isinstance(u, OgnCertificate):
        norms = L.block_norms(u.u)
        norms[u.state.active] = np.maximum(norms[u.state.active], 1.0)
        return _split(norms, 1.0, mode, tol)
    return _split(L.block_norms(u), 1.0, mode, tol)


def correlation_scores(problem: ProblemData, covering: GroupCovering, col_sq=None):
    """``||A_G^T y|| / (||A_G||_F ||y||)`` per group; 0 for degenerate groups."""
    ynorm = np.linalg.norm(problem.y)
    if col_sq is None:
        col_sq = column_sq_norms(problem.A)
    corr = np.asarray(problem.A.T @ problem.y).ravel()
    scores = np.zeros(covering.n_groups)
    if ynorm == 0.0:
        return scores
    for t, G in enumerate(covering.groups):
        fro = np.sqrt(col_sq[G].sum())
        if fro > 0:
            scores[t] = np.linalg.norm(corr[G]) / (fro * ynorm)
    return scores


def correlation_init(problem: ProblemData, covering: GroupCovering, k: int, col_sq=None):
    """Indices of the ``k`` highest-scoring groups; ties go to the smaller index."""
    if not 1 <= k <= covering.n_groups:
        raise ValueError(f"k must lie in [1, {covering.n_groups}]")
    scores = correlation_scores(problem, covering, col_sq)
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:k])


def kkt_residual(problem: ProblemData, L: LiftingOperator, x) -> float:
    """Relative KKT residual for nonoverlapping groups.

    ``||Lx - prox(Lx - L^{-T} A^T (Ax - y) / lam)|| / (1 + ||Lx||_{1,2} + ||Ax - y||)``.
    """
    if L.p != L.n:
        raise UnsupportedMeasureError(
            "the relative KKT residual needs an invertible lifting (nonoverlapping groups)"
        )
    x = np.asarray(x, dtype=float)
    resid = np.asarray(problem.A @ x).ravel() - problem.y
    grad = np.asarray(problem.A.T @ resid).ravel() / problem.lam
    z = L.lift(x)
    # with one row per column, L^{-T} = L (L^T L)^{-1}
    step = z - L.lift(grad / L.gram_diag)
    num = np.linalg.norm(z - prox_group_norm(step, L, 1.0))
    return float(num / (1.0 + L.block_norms(z).sum() + np.linalg.norm(resid)))
