"""Shared helpers: random coverings, dense materializations and small instances."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from oglasso.data import ProblemData, lambda_max
from oglasso.groups import GroupCovering, build_lifting


def random_covering(rng, n=None, n_groups=None, n_max=50, groups_max=20, weights="random"):
    """Random covering with mixed overlaps: random windows plus random scatter sets."""
    n = int(rng.integers(2, n_max + 1)) if n is None else n
    N = int(rng.integers(1, groups_max + 1)) if n_groups is None else n_groups
    groups = []
    for _ in range(N):
        if rng.random() < 0.5:
            size = int(rng.integers(1, max(2, n // 2) + 1))
            start = int(rng.integers(0, n - size + 1))
            groups.append(list(range(start, start + size)))
        else:
            size = int(rng.integers(1, n + 1))
            groups.append(rng.choice(n, size=size, replace=False).tolist())
    # patch coverage: every stray coordinate joins a random group
    covered = np.zeros(n, dtype=bool)
    for g in groups:
        covered[g] = True
    for i in np.flatnonzero(~covered):
        groups[int(rng.integers(N))].append(int(i))
    w = rng.uniform(0.5, 3.0, N) if weights == "random" else np.ones(N)
    return GroupCovering(n, groups, w)


def random_partition(rng, n, n_groups, weights="random"):
    perm = rng.permutation(n)
    cuts = np.sort(rng.choice(np.arange(1, n), size=n_groups - 1, replace=False))
    groups = np.split(perm, cuts)
    w = rng.uniform(0.5, 3.0, n_groups) if weights == "random" else np.ones(n_groups)
    return GroupCovering(n, groups, w)


def random_problem(rng, covering, m, ratio=None):
    A = rng.standard_normal((m, covering.n))
    y = rng.standard_normal(m)
    ratio = rng.uniform(1.5, 6.0) if ratio is None else ratio
    return ProblemData(A, y, lambda_max(A, y, covering) / ratio)


def dense_lifting(L) -> np.ndarray:
    M = np.zeros((L.p, L.n))
    M[np.arange(L.p), L.row_to_col] = L.row_weight
    return M


def random_active(rng, N):
    return rng.random(N) < rng.uniform(0.0, 1.0)


@st.composite
def coverings(draw, n_max=30, groups_max=12):
    """Hypothesis strategy over coverings, driven by a drawn seed."""
    seed = draw(st.integers(0, 2**32 - 1))
    return random_covering(np.random.default_rng(seed), n_max=n_max, groups_max=groups_max)


@pytest.fixture
def fig1():
    """Three windows {1,2},{2,3},{3,4} (0-based here), unit weights."""
    C = GroupCovering(4, [[0, 1], [1, 2], [2, 3]], [1, 1, 1])
    return C, build_lifting(C)
