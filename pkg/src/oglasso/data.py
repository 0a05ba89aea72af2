"""Problem containers, LIBSVM ingestion and synthetic instance generators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, ParseError
from .groups import GroupCovering


@dataclass(frozen=True, eq=False)
class ProblemData:
    """Least-squares data ``(A, y)`` and the regularization ``lam > 0``.

    The objective is ``||A x - y||^2 / (2 lam) + R(x)``.
    """

    A: object
    y: np.ndarray
    lam: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        A = self.A if sp.issparse(self.A) else np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != y.size:
            raise DimensionError(f"A has shape {A.shape} but y has length {y.size}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def with_lambda(self, lam) -> "ProblemData":
        return ProblemData(self.A, self.y, lam)


def lambda_max(A, y, covering: GroupCovering) -> float:
    """``max_t ||A_Gt^T y|| / w_t``; ``x = 0`` is optimal for every ``lam`` at or above it.

    For a partition this is the exact threshold. With overlapping groups
    ``x = 0`` can stay optimal somewhat below it. For singleton groups with
    unit weights this is ``||A^T y||_inf``.
    """
    g = np.asarray(A.T @ y).ravel()
    return max(
        float(np.linalg.norm(g[G])) / w for G, w in zip(covering.groups, covering.weights)
    )


def parse_libsvm(path, n_features: int | None = None):
    """Read ``label idx:val ...`` lines (1-based indices) into a CSR matrix and labels."""
    rows, cols, vals, labels = [], [], [], []
    n_seen = 0
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                labels.append(float(tokens[0]))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad label {tokens[0]!r}", lineno) from None
            row = len(labels) - 1
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    j, v = int(idx), float(val)
                except ValueError:
                    j = 0
                if not sep or j < 1:
                    raise ParseError(f"{path}:{lineno}: malformed token {tok!r}", lineno)
                rows.append(row)
                cols.append(j - 1)
                vals.append(v)
                n_seen = max(n_seen, j)
    n = n_seen if n_features is None else int(n_features)
    if n < n_seen:
        raise ParseError(f"{path}: feature index {n_seen} exceeds n_features={n}")
    A = sp.coo_matrix((vals, (rows, cols)), shape=(len(labels), n)).tocsr()
    A.sum_duplicates()
    return A, np.asarray(labels)


def write_libsvm(path, A, y) -> None:
    A = sp.csr_matrix(A)
    A.sort_indices()
    with Path(path).open("w") as fh:
        for i, label in enumerate(np.asarray(y, dtype=float)):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            feats = " ".join(
                f"{j + 1}:{v!r}" for j, v in zip(A.indices[lo:hi], A.data[lo:hi].tolist())
            )
            fh.write(f"{float(label)!r} {feats}".rstrip() + "\n")


@dataclass(frozen=True)
class SyntheticSpec:
    """Sliding-window instance description.

    ``n = N gs - (N - 1) os``; weights default to ``sqrt(gs)``, ``m`` to
    ``round(n / 2)``, and ``lam = lambda_max / lambda_ratio`` unless ``lam``
    is given.
    """

    n_groups: int
    group_size: int
    overlap: int
    weight: float | None = None
    m: int | None = None
    seed: int = 0
    lambda_ratio: float = 10.0
    lam: float | None = None

    def __post_init__(self):
        if self.n_groups < 1 or self.group_size < 1:
            raise ValueError("need at least one group of positive size")
        if not 0 <= self.overlap < self.group_size:
            raise ValueError("overlap must satisfy 0 <= os < gs")
        if self.lam is None and not self.lambda_ratio > 0:
            raise ValueError("lambda_ratio must be positive")

    @property
    def n(self) -> int:
        return self.n_groups * self.group_size - (self.n_groups - 1) * self.overlap

    @property
    def n_samples(self) -> int:
        # half-up rounding, so odd n gives ceil(n / 2)
        return self.m if self.m is not None else int(math.floor(self.n / 2 + 0.5))


def sliding_covering(n_groups, group_size, overlap, weight=None) -> GroupCovering:
    stride = group_size - overlap
    groups = [np.arange(t * stride, t * stride + group_size) for t in range(n_groups)]
    w = math.sqrt(group_size) if weight is None else weight
    n = n_groups * group_size - (n_groups - 1) * overlap
    return GroupCovering(n, groups, np.full(n_groups, float(w)))


def gen_sliding(spec: SyntheticSpec):
    """Gaussian ``A`` and ``y`` on a sliding-window covering; returns ``(problem, covering)``.

    ``A`` and ``y`` come from independent child streams of ``SeedSequence(seed)``.
    """
    covering = sliding_covering(spec.n_groups, spec.group_size, spec.overlap, spec.weight)
    seq_a, seq_y = np.random.SeedSequence(spec.seed).spawn(2)
    A = np.random.default_rng(seq_a).standard_normal((spec.n_samples, spec.n))
    y = np.random.default_rng(seq_y).standard_normal(spec.n_samples)
    lam = spec.lam if spec.lam is not None else lambda_max(A, y, covering) / spec.lambda_ratio
    return ProblemData(A, y, lam), covering


def gen_tree_groups(depth: int, fanout: int, weight: float = 1.0) -> GroupCovering:
    """Parent-child groups on a complete ``fanout``-ary tree, nodes numbered breadth-first.

    Each internal node contributes ``{node} + children``; every leaf also gets
    a singleton group.
    """
    if depth < 1 or fanout < 1:
        raise ValueError("depth and fanout must be >= 1")
    level_sizes = [fanout**d for d in range(depth)]
    n = sum(level_sizes)
    groups = []
    first_leaf = n - level_sizes[-1]
    for node in range(first_leaf):
        children = [fanout * node + c for c in range(1, fanout + 1)]
        groups.append([node, *children])
    groups.extend([leaf] for leaf in range(first_leaf, n))
    return GroupCovering(n, groups, np.full(len(groups), float(weight)))


def multitask_to_group(A, Y, lam: float = 1.0):
    """Stack a multi-task problem ``min ||A X - Y||_F^2 / (2 lam) + sum_j ||X[j, :]||``.

    Variables are ``vec(X)`` (column-major), the design is ``kron(I_q, A)`` and
    group ``j`` collects row ``j`` of ``X``.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    m, n = A.shape
    if Y.shape[0] != m:
        raise DimensionError(f"A has {m} rows but Y has {Y.shape[0]}")
    q = Y.shape[1]
    if sp.issparse(A):
        big = sp.block_diag([A] * q, format="csc")
    else:
        big = np.kron(np.eye(q), np.asarray(A, dtype=float))
    y = Y.reshape(-1, order="F")
    groups = [np.arange(j, n * q, n) for j in range(n)]
    return ProblemData(big, y, lam), GroupCovering(n * q, groups, np.ones(n))


def _gaussian(seed, m, n):
    seq_a, seq_y = np.random.SeedSequence(seed).spawn(2)
    A = np.random.default_rng(seq_a).standard_normal((m, n))
    return A, np.random.default_rng(seq_y)


def _resolve_lambda(A, y, covering, lam, lambda_ratio):
    if lam is not None:
        return float(lam)
    if not lambda_ratio > 0:
        raise ValueError("lambda_ratio must be positive")
    return lambda_max(A, y, covering) / lambda_ratio


def gen_tree(depth: int, fanout: int, m: int | None = None, seed: int = 0,
             lambda_ratio: float = 10.0, lam: float | None = None):
    """Gaussian instance on :func:`gen_tree_groups`; ``m`` defaults to ``round(n / 2)``."""
    covering = gen_tree_groups(depth, fanout)
    m = int(math.floor(covering.n / 2 + 0.5)) if m is None else m
    A, rng = _gaussian(seed, m, covering.n)
    y = rng.standard_normal(m)
    return ProblemData(A, y, _resolve_lambda(A, y, covering, lam, lambda_ratio)), covering


def gen_multitask(n_features: int, n_tasks: int, m: int | None = None, seed: int = 0,
                  lambda_ratio: float = 10.0, lam: float | None = None):
    """Gaussian multi-task instance mapped through :func:`multitask_to_group`."""
    m = n_features // 2 if m is None else m
    A, rng = _gaussian(seed, max(m, 1), n_features)
    Y = rng.standard_normal((A.shape[0], n_tasks))
    problem, covering = multitask_to_group(A, Y, 1.0)
    lam = _resolve_lambda(problem.A, problem.y, covering, lam, lambda_ratio)
    return problem.with_lambda(lam), covering


def tune_lambda(problem: ProblemData, covering: GroupCovering, target=(10, 15), count=None,
                shrink: float = 0.85, rtol: float = 1e-3, max_evals: int = 200):
    """Find ``lam`` whose solution has between ``target[0]`` and ``target[1]`` nonzero groups.

    Walks down from ``lambda_max`` by factors of ``shrink`` until the count
    reaches ``target[0]``, then bisects geometrically. ``count(lam)`` returns
    the number of nonzero groups at ``lam``; the default runs VarPro to a loose
    tolerance. Returns ``(lam, k)``. Raises ``ValueError`` when the count jumps
    across the window inside a bracket narrower than ``rtol``.
    """
    lo_n, hi_n = target
    if not 1 <= lo_n <= hi_n <= covering.n_groups:
        raise ValueError(f"target must satisfy 1 <= lo <= hi <= {covering.n_groups}")
    if count is None:
        count = _varpro_count(problem, covering)
    hi = lambda_max(problem.A, problem.y, covering)  # too few groups at hi
    lam, evals = hi, 0
    while True:
        lam *= shrink
        k = count(lam)
        evals += 1
        if k >= lo_n:
            break
        hi = lam
        if evals >= max_evals:
            raise ValueError(f"fewer than {lo_n} groups after {evals} evaluations")
    lo = lam  # too many (or just enough) groups at lo
    while not lo_n <= k <= hi_n:
        if hi / lo <= 1.0 + rtol or evals >= max_evals:
            raise ValueError(
                f"the group count jumps across [{lo_n}, {hi_n}] near lambda = {lo:.6g}"
            )
        lam = math.sqrt(lo * hi)
        k = count(lam)
        evals += 1
        if k < lo_n:
            hi = lam
        elif k > hi_n:
            lo = lam
    return lam, k


def _varpro_count(problem: ProblemData, covering: GroupCovering, tol: float = 1e-8):
    from .groups import build_lifting
    from .linalg import column_sq_norms
    from .solvers import SolverConfig, extract_support, varpro_solve

    L = build_lifting(covering)
    config = SolverConfig(tol=tol, max_iters=5000)
    # typical size of x; blocks below 1e-10 of it are round-off
    fro = math.sqrt(float(column_sq_norms(problem.A).sum()))
    floor = 1e-10 * np.linalg.norm(problem.y) / max(fro, 1e-300)

    def count(lam):
        res = varpro_solve(problem.with_lambda(lam), L, config)
        return int(extract_support(L, res.x, atol=floor).size)

    return count
