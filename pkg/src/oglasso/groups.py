"""Group coverings, the lifting operator and extended supports.

Indices are 0-based in the Python API. Group files on disk use 1-based
indices (first line ``n N``, then one ``w k i_1 ... i_k`` line per group).

The lifting operator ``L`` stacks the weighted group slices ``w_t x[G_t]``.
Every row of ``L`` has exactly one nonzero entry, so it is stored as three
length-``p`` arrays (column, group and weight of each lifted row) and never
materialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CoveringError, DimensionError


@dataclass(frozen=True, eq=False)
class GroupCovering:
    """Groups ``G_t`` of ``range(n)`` with positive weights ``w_t``.

    Groups are normalized to sorted, duplicate-free ``int64`` arrays. The
    union of all groups must be the whole index range.
    """

    n: int
    groups: tuple
    weights: np.ndarray

    def __init__(self, n: int, groups: Iterable[Sequence[int]], weights=None):
        n = int(n)
        normalized = []
        for t, g in enumerate(groups):
            arr = np.unique(np.asarray(g, dtype=np.int64))
            if arr.size == 0:
                raise CoveringError(f"group {t + 1} is empty", group=t + 1)
            if arr[0] < 0 or arr[-1] >= n:
                raise CoveringError(
                    f"group {t + 1} has an index outside [1, {n}]", group=t + 1
                )
            arr.setflags(write=False)
            normalized.append(arr)
        if not normalized:
            raise CoveringError("a covering needs at least one group")
        if weights is None:
            weights = np.ones(len(normalized))
        weights = np.array(weights, dtype=float).reshape(-1)
        if weights.size != len(normalized):
            raise CoveringError(
                f"got {weights.size} weights for {len(normalized)} groups"
            )
        bad = np.flatnonzero(~(weights > 0) | ~np.isfinite(weights))
        if bad.size:
            raise CoveringError(
                f"group {bad[0] + 1} has nonpositive weight {weights[bad[0]]}",
                group=int(bad[0]) + 1,
            )
        covered = np.zeros(n, dtype=bool)
        for arr in normalized:
            covered[arr] = True
        if not covered.all():
            missing = np.flatnonzero(~covered)
            raise CoveringError(
                f"coordinates {(missing[:5] + 1).tolist()} are not covered by any group"
            )
        weights.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "groups", tuple(normalized))
        object.__setattr__(self, "weights", weights)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([g.size for g in self.groups])

    def is_partition(self) -> bool:
        return int(self.sizes.sum()) == self.n

    @classmethod
    def from_one_based(cls, n, groups, weights=None) -> "GroupCovering":
        return cls(n, [np.asarray(g) - 1 for g in groups], weights)

    def one_based(self) -> list[list[int]]:
        return [(g + 1).tolist() for g in self.groups]


@dataclass(frozen=True, eq=False)
class LiftingOperator:
    """Sparse representation of ``L: R^n -> R^p``.

    Row ``k`` has its single nonzero ``row_weight[k]`` in column
    ``row_to_col[k]`` and belongs to lifted block ``row_to_group[k]``. Block
    ``t`` occupies rows ``offsets[t]:offsets[t + 1]``.
    """

    n: int
    n_groups: int
    offsets: np.ndarray
    row_to_col: np.ndarray
    row_to_group: np.ndarray
    row_weight: np.ndarray
    weights: np.ndarray = field(repr=False)

    @property
    def p(self) -> int:
        return int(self.row_to_col.size)

    @cached_property
    def gram_diag(self) -> np.ndarray:
        """Diagonal of ``L^T L``: sum of ``w_t^2`` over groups containing ``i``."""
        return np.bincount(self.row_to_col, self.row_weight**2, minlength=self.n)

    @property
    def norm_sq(self) -> float:
        # columns are orthogonal, so the spectral norm is the largest column norm
        return float(self.gram_diag.max())

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionError(f"expected a vector of length {self.n}, got {x.shape}")
        return self.row_weight * x[self.row_to_col]

    def adjoint(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.p,):
            raise DimensionError(f"expected a vector of length {self.p}, got {u.shape}")
        return np.bincount(self.row_to_col, self.row_weight * u, minlength=self.n)

    def block_norms(self, z) -> np.ndarray:
        """Euclidean norm of each lifted block ``z[J_t]``."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.p,):
            raise DimensionError(f"expected a vector of length {self.p}, got {z.shape}")
        return np.sqrt(np.bincount(self.row_to_group, z * z, minlength=self.n_groups))

    def group_norm(self, x) -> float:
        return float(self.block_norms(self.lift(x)).sum())

    def blocks(self, z):
        return [z[self.offsets[t] : self.offsets[t + 1]] for t in range(self.n_groups)]


def build_lifting(covering: GroupCovering) -> LiftingOperator:
    """Lifting operator of a covering; rows are group-major, sorted within groups."""
    sizes = covering.sizes
    offsets = np.zeros(sizes.size + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    row_to_col = np.concatenate(covering.groups)
    row_to_group = np.repeat(np.arange(sizes.size), sizes)
    row_weight = covering.weights[row_to_group]
    for arr in (offsets, row_to_col, row_to_group, row_weight):
        arr.setflags(write=False)
    return LiftingOperator(
        n=covering.n,
        n_groups=covering.n_groups,
        offsets=offsets,
        row_to_col=row_to_col,
        row_to_group=row_to_group,
        row_weight=row_weight,
        weights=covering.weights,
    )


def covering_of(L: LiftingOperator) -> GroupCovering:
    """The covering a lifting operator was built from."""
    groups = [L.row_to_col[L.offsets[t] : L.offsets[t + 1]] for t in range(L.n_groups)]
    return GroupCovering(L.n, groups, L.weights)


def lift(L: LiftingOperator, x) -> np.ndarray:
    return L.lift(x)


def adjoint_lift(L: LiftingOperator, u) -> np.ndarray:
    return L.adjoint(u)


def group_norm(L: LiftingOperator, x) -> float:
    """Overlapping group norm ``sum_t w_t ||x[G_t]||``."""
    return L.group_norm(x)


def active_groups(L: LiftingOperator, x, tol: float = 0.0) -> np.ndarray:
    """Indices of groups with ``||x[G_t]|| > tol`` (sorted)."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    x = np.asarray(x, dtype=float)
    if x.shape != (L.n,):
        raise DimensionError(f"expected a vector of length {L.n}, got {x.shape}")
    norms = np.sqrt(np.bincount(L.row_to_group, x[L.row_to_col] ** 2, minlength=L.n_groups))
    return np.flatnonzero(norms > tol)


@dataclass(frozen=True, eq=False)
class SupportState:
    """Active groups and the extended supports they induce, as boolean masks.

    ``active`` has length N; ``ex`` (coordinate support) length n; ``ez``
    (lifted blocks of active groups) and ``el`` (lifted rows reachable from
    ``ex``) length p.
    """

    active: np.ndarray
    ex: np.ndarray
    ez: np.ndarray
    el: np.ndarray

    @property
    def active_groups(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    @property
    def inactive_groups(self) -> np.ndarray:
        return np.flatnonzero(~self.active)

    @property
    def ext_coord_support(self) -> np.ndarray:
        return np.flatnonzero(self.ex)

    @property
    def ext_group_support(self) -> np.ndarray:
        return np.flatnonzero(self.ez)

    @property
    def ext_lifted_support(self) -> np.ndarray:
        return np.flatnonzero(self.el)

    @property
    def kappa(self) -> int:
        return int(self.ex.sum())

    def project_x(self, x):
        return np.where(self.ex, x, 0.0)

    def project_x_perp(self, x):
        return np.where(self.ex, 0.0, x)

    def project_z(self, u):
        return np.where(self.ez, u, 0.0)

    def project_l(self, u):
        return np.where(self.el, u, 0.0)


def _as_mask(index, size, what):
    index = np.asarray(index)
    if index.dtype == bool:
        if index.shape != (size,):
            raise DimensionError(f"{what} mask must have length {size}")
        return index.copy()
    index = index.astype(np.int64).reshape(-1)
    if index.size and (index.min() < 0 or index.max() >= size):
        raise IndexError(f"{what} index out of range [0, {size})")
    mask = np.zeros(size, dtype=bool)
    mask[index] = True
    return mask


def compute_supports(covering: GroupCovering, L: LiftingOperator, active) -> SupportState:
    """Extended supports for an active group set (indices or boolean mask)."""
    act = _as_mask(active, covering.n_groups, "group")
    inactive_rows = ~act[L.row_to_group]
    touched = np.bincount(L.row_to_col, inactive_rows.astype(float), minlength=L.n) > 0
    ex = ~touched
    ez = act[L.row_to_group]
    el = ex[L.row_to_col]
    for arr in (act, ex, ez, el):
        arr.setflags(write=False)
    return SupportState(active=act, ex=ex, ez=ez, el=el)


def _leak_rows(L: LiftingOperator, S: SupportState) -> np.ndarray:
    # rows of active blocks whose column lies outside E_x
    return S.ez & ~S.ex[L.row_to_col]


def effective_lift_apply(L: LiftingOperator, S: SupportState, x) -> np.ndarray:
    """``(L - P_Tz L P_Tx^perp) x`` without forming the operator."""
    z = L.lift(x)
    z[_leak_rows(L, S)] = 0.0
    return z


def effective_lift_adjoint(L: LiftingOperator, S: SupportState, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return L.adjoint(np.where(_leak_rows(L, S), 0.0, u))


def effective_gram_diag(L: LiftingOperator, S: SupportState) -> np.ndarray:
    """Diagonal of ``Lhat^T Lhat``.

    Equals the full ``L^T L`` entry on ``E_x`` and the sum over inactive
    groups containing ``i`` elsewhere; always strictly positive.
    """
    keep = ~_leak_rows(L, S)
    return np.bincount(L.row_to_col, np.where(keep, L.row_weight**2, 0.0), minlength=L.n)


def read_groups(path) -> GroupCovering:
    """Parse a group file (1-based indices)."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise CoveringError(f"{path}: empty group file")
    try:
        n, n_groups = int(lines[0][0]), int(lines[0][1])
    except (IndexError, ValueError) as exc:
        raise CoveringError(f"{path}:1: expected 'n N'") from exc
    if len(lines) - 1 != n_groups:
        raise CoveringError(f"{path}: header announces {n_groups} groups, found {len(lines) - 1}")
    groups, weights = [], []
    for lineno, tokens in enumerate(lines[1:], start=2):
        try:
            w, k = float(tokens[0]), int(tokens[1])
            idx = [int(tok) for tok in tokens[2:]]
        except (IndexError, ValueError) as exc:
            raise CoveringError(f"{path}:{lineno}: malformed group line", group=lineno - 1) from exc
        if len(idx) != k:
            raise CoveringError(
                f"{path}:{lineno}: group size {k} but {len(idx)} indices", group=lineno - 1
            )
        groups.append(np.asarray(idx, dtype=np.int64) - 1)
        weights.append(w)
    return GroupCovering(n, groups, weights)


def write_groups(covering: GroupCovering, path) -> None:
    out = [f"{covering.n} {covering.n_groups}"]
    for g, w in zip(covering.groups, covering.weights):
        out.append(" ".join([repr(float(w)), str(g.size), *map(str, (g + 1).tolist())]))
    Path(path).write_text("\n".join(out) + "\n")
