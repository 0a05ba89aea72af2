"""Linear-algebra kernels used by the solvers.

Design matrices are plain ``numpy`` arrays or ``scipy.sparse`` matrices.
The solvers only ever need systems of the form ``(c D + A^T A) x = r`` with
``D`` diagonal, which :class:`DiagPlusGram` solves either directly (cached
Cholesky of the ``n x n`` matrix or, when ``m < n``, of the ``m x m``
Sherman-Morrison-Woodbury matrix) or with Jacobi-preconditioned CG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ConvergenceError, DimensionError, FactorizationError


@dataclass(frozen=True)
class LinearSolverPlan:
    """How to solve the SPD systems: ``"cholesky"`` (cached) or ``"pcg"``."""

    kind: str = "cholesky"
    tol: float = 1e-12
    max_iters: int = 1000

    def __post_init__(self):
        if self.kind not in ("cholesky", "pcg"):
            raise ValueError(f"unknown linear solver kind {self.kind!r}")


DEFAULT_PLAN = LinearSolverPlan()


def as_design(A, sparse_below: float = 0.1):
    """Dense ndarray or CSC matrix, depending on density."""
    if sp.issparse(A):
        density = A.nnz / max(1, A.shape[0] * A.shape[1])
        return A.tocsc() if density < sparse_below else A.toarray()
    return np.asarray(A, dtype=float)


def column_sq_norms(A) -> np.ndarray:
    if sp.issparse(A):
        return np.asarray(A.multiply(A).sum(axis=0)).ravel()
    return np.einsum("ij,ij->j", A, A)


def gram(A) -> np.ndarray:
    """Dense ``A^T A``."""
    G = A.T @ A
    return G.toarray() if sp.issparse(G) else np.asarray(G)


def outer_gram(A, scale=None) -> np.ndarray:
    """Dense ``A diag(scale) A^T``."""
    if scale is None:
        G = A @ A.T
    elif sp.issparse(A):
        G = A @ sp.diags(scale) @ A.T
    else:
        G = (A * scale) @ A.T
    return G.toarray() if sp.issparse(G) else np.asarray(G)


class Cholesky:
    """Cached Cholesky factor of an SPD matrix."""

    def __init__(self, M):
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {M.shape}")
        try:
            self._factor = sla.cho_factor(M, lower=True, check_finite=True)
        except sla.LinAlgError as exc:
            raise FactorizationError(f"matrix is not positive definite: {exc}") from exc
        self.size = M.shape[0]

    def solve(self, b):
        return sla.cho_solve(self._factor, b, check_finite=False)


def cholesky_solve(M, b, factor: Cholesky | None = None):
    """Solve ``M x = b`` for SPD ``M``; pass ``factor`` to reuse a factorization."""
    factor = factor if factor is not None else Cholesky(M)
    return factor.solve(np.asarray(b, dtype=float))


def pcg_solve(apply_M, precond_diag, b, tol=1e-10, max_iters=1000, x0=None):
    """Jacobi-preconditioned conjugate gradient.

    Returns ``(x, n_iter)`` with ``||M x - b|| <= tol ||b||``; raises
    :class:`ConvergenceError` carrying the last relative residual otherwise.
    """
    b = np.asarray(b, dtype=float)
    d = np.asarray(precond_diag, dtype=float)
    if np.any(d <= 0):
        raise ValueError("preconditioner diagonal must be positive")
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    r = b - apply_M(x) if x0 is not None else b.copy()
    rel = np.linalg.norm(r) / bnorm
    if rel <= tol:
        return x, 0
    z = r / d
    p = z.copy()
    rz = r @ z
    for k in range(1, max_iters + 1):
        Mp = apply_M(p)
        pMp = p @ Mp
        if pMp <= 0:
            raise ConvergenceError("operator is not positive definite", residual=rel, n_iter=k)
        step = rz / pMp
        x += step * p
        r -= step * Mp
        rel = np.linalg.norm(r) / bnorm
        if rel <= tol:
            return x, k
        z = r / d
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(
        f"PCG did not reach {tol:g} in {max_iters} iterations (residual {rel:.3e})",
        residual=rel,
        n_iter=max_iters,
    )


class DiagPlusGram:
    """Solver for ``(c diag(d) + A^T A) x = r`` with ``c > 0`` and ``d > 0``.

    ``method`` is ``"auto"`` (Woodbury when ``m < n``), ``"smw"`` or
    ``"direct"``; it is ignored by the PCG plan.
    """

    def __init__(self, A, d, c, plan: LinearSolverPlan = DEFAULT_PLAN, method="auto"):
        m, n = A.shape
        d = np.broadcast_to(np.asarray(d, dtype=float), (n,))
        if c <= 0 or np.any(d <= 0):
            raise ValueError("c and the diagonal must be positive")
        self.A, self.d, self.c, self.plan = A, d, float(c), plan
        self.shape = (n, n)
        if plan.kind == "pcg":
            self.method = "pcg"
            self._precond = self.c * d + column_sq_norms(A)
            return
        if method == "auto":
            method = "smw" if m < n else "direct"
        self.method = method
        if method == "smw":
            self._dinv = 1.0 / d
            inner = outer_gram(A, self._dinv)
            inner[np.diag_indices_from(inner)] += self.c
            self._factor = Cholesky(inner)
        elif method == "direct":
            M = gram(A)
            M[np.diag_indices_from(M)] += self.c * d
            self._factor = Cholesky(M)
        else:
            raise ValueError(f"unknown method {method!r}")

    def matvec(self, x):
        return self.c * self.d * x + self.A.T @ (self.A @ x)

    def solve(self, r):
        r = np.asarray(r, dtype=float)
        if self.method == "direct":
            return self._factor.solve(r)
        if self.method == "smw":
            # (cD + A^T A)^{-1} = (1/c) D^{-1} [I - A^T (c I + A D^{-1} A^T)^{-1} A D^{-1}]
            h = self._dinv * r
            s = self._factor.solve(self.A @ h)
            return (h - self._dinv * (self.A.T @ s)) / self.c
        x, _ = pcg_solve(self.matvec, self._precond, r, self.plan.tol, self.plan.max_iters)
        return x


def smw_apply(A, d_inv, lambda_tau, r, plan: LinearSolverPlan = DEFAULT_PLAN):
    """``(lambda_tau D + A^T A)^{-1} r`` through the ``m x m`` Woodbury system."""
    d_inv = np.asarray(d_inv, dtype=float)
    if np.any(d_inv <= 0):
        raise ValueError("D^{-1} must be positive")
    if plan.kind == "pcg":
        h = d_inv * np.asarray(r, dtype=float)

        def apply_inner(s):
            return lambda_tau * s + A @ (d_inv * (A.T @ s))

        if sp.issparse(A):
            pre = lambda_tau + np.asarray(A.multiply(A) @ d_inv).ravel()
        else:
            pre = lambda_tau + (A * A) @ d_inv
        s, _ = pcg_solve(apply_inner, pre, A @ h, plan.tol, plan.max_iters)
        return (h - d_inv * (A.T @ s)) / lambda_tau
    return DiagPlusGram(A, 1.0 / d_inv, lambda_tau, plan, method="smw").solve(r)
