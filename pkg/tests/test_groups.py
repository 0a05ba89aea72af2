import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import coverings, dense_lifting, random_covering
from oglasso.errors import CoveringError, DimensionError
from oglasso.groups import (
    GroupCovering,
    active_groups,
    adjoint_lift,
    build_lifting,
    compute_supports,
    covering_of,
    effective_gram_diag,
    effective_lift_adjoint,
    effective_lift_apply,
    group_norm,
    lift,
    read_groups,
    write_groups,
)


# build_lifting


def test_lifting_fig1_layout(fig1):
    _, L = fig1
    assert L.p == 6
    assert L.offsets.tolist() == [0, 2, 4, 6]
    assert (L.row_to_col + 1).tolist() == [1, 2, 2, 3, 3, 4]
    assert L.row_to_group.tolist() == [0, 0, 1, 1, 2, 2]


def test_lifting_single_group_is_identity():
    L = build_lifting(GroupCovering(5, [range(5)], [1.0]))
    assert L.p == 5
    np.testing.assert_array_equal(dense_lifting(L), np.eye(5))


def test_lifting_weighted_nested():
    L = build_lifting(GroupCovering(2, [[0], [0, 1]], [2.0, 3.0]))
    assert L.p == 3
    assert L.row_to_col.tolist() == [0, 0, 1]
    assert L.row_weight.tolist() == [2.0, 3.0, 3.0]
    np.testing.assert_array_equal(L.gram_diag, [13.0, 9.0])


def test_groups_are_sorted_and_deduplicated():
    C = GroupCovering(3, [[2, 0, 2], [1]])
    assert [g.tolist() for g in C.groups] == [[0, 2], [1]]


@pytest.mark.parametrize(
    "groups, weights, bad_group",
    [
        ([[0, 1], []], [1, 1], 2),
        ([[0, 1], [1, 2]], [1, 0], 2),
        ([[0, 1], [1, 2]], [-1, 1], 1),
        ([[0, 5]], [1], 1),
    ],
)
def test_invalid_covering_names_group(groups, weights, bad_group):
    with pytest.raises(CoveringError) as err:
        GroupCovering(3, groups, weights)
    assert err.value.group == bad_group


def test_uncovered_coordinate_rejected():
    with pytest.raises(CoveringError, match="not covered"):
        GroupCovering(4, [[0, 1], [1, 2]])


def test_duplicate_groups_are_distinct():
    C = GroupCovering(2, [[0, 1], [0, 1]], [1.0, 2.0])
    L = build_lifting(C)
    assert L.p == 4
    np.testing.assert_allclose(L.gram_diag, [5.0, 5.0])


# lift / adjoint / group_norm


def test_lift_examples():
    L = build_lifting(GroupCovering(3, [[0, 1], [1, 2]]))
    np.testing.assert_array_equal(lift(L, [5, 7, 0]), [5, 7, 7, 0])
    np.testing.assert_array_equal(lift(L, np.zeros(3)), np.zeros(4))
    L2 = build_lifting(GroupCovering(2, [[0], [0, 1]], [2, 3]))
    np.testing.assert_array_equal(lift(L2, [1, 1]), [2, 3, 3])


def test_adjoint_examples():
    L = build_lifting(GroupCovering(2, [[0], [0, 1]], [2, 3]))
    np.testing.assert_array_equal(adjoint_lift(L, lift(L, [1, 1])), [13, 9])
    np.testing.assert_array_equal(adjoint_lift(L, np.zeros(3)), np.zeros(2))
    L1 = build_lifting(GroupCovering(4, [range(4)]))
    u = np.array([1.0, -2.0, 3.0, 0.5])
    np.testing.assert_array_equal(adjoint_lift(L1, u), u)


def test_dimension_mismatch(fig1):
    _, L = fig1
    with pytest.raises(DimensionError):
        L.lift(np.zeros(3))
    with pytest.raises(DimensionError):
        L.adjoint(np.zeros(4))


def test_group_norm_examples(fig1):
    x = np.array([3.0, -4.0, 12.0])
    assert group_norm(build_lifting(GroupCovering(3, [range(3)])), x) == pytest.approx(13.0)
    _, L = fig1
    assert group_norm(L, np.array([1.0, 0, 0, 0])) == pytest.approx(1.0)
    L2 = build_lifting(GroupCovering(3, [[0, 1], [1, 2]], [2, 1]))
    assert group_norm(L2, np.array([3.0, 4.0, 0.0])) == pytest.approx(14.0)


# active groups and extended supports


def test_active_groups_examples(fig1):
    _, L = fig1
    assert active_groups(L, np.array([0, 1.0, 0, 0])).tolist() == [0, 1]
    assert active_groups(L, np.zeros(4)).size == 0
    assert active_groups(L, np.ones(4)).tolist() == [0, 1, 2]
    assert active_groups(L, np.array([0, 1e-3, 0, 0]), tol=1e-2).size == 0


def test_supports_fig1(fig1):
    C, L = fig1
    S = compute_supports(C, L, [0, 1])
    assert S.ext_coord_support.tolist() == [0, 1]
    assert S.ext_group_support.tolist() == [0, 1, 2, 3]
    assert S.ext_lifted_support.tolist() == [0, 1, 2]


def test_supports_fig2(fig1):
    C, L = fig1
    S = compute_supports(C, L, [0])
    assert S.ext_group_support.tolist() == [0, 1]
    assert S.ext_lifted_support.tolist() == [0]
    assert S.ext_coord_support.tolist() == [0]


def test_supports_everything_active(fig1):
    C, L = fig1
    S = compute_supports(C, L, [0, 1, 2])
    assert S.ex.all() and S.ez.all() and S.el.all()


def test_supports_reject_bad_index(fig1):
    C, L = fig1
    with pytest.raises(IndexError):
        compute_supports(C, L, [3])


def test_effective_lift_examples(fig1):
    C, L = fig1
    S = compute_supports(C, L, [0])
    # x supported on E_x: Lhat x = L x
    x = np.array([2.0, 0, 0, 0])
    np.testing.assert_array_equal(effective_lift_apply(L, S, x), L.lift(x))
    # x = e_2: row 2 (in E_z, column outside E_x) is removed, row 3 kept
    np.testing.assert_array_equal(effective_lift_apply(L, S, np.array([0, 1.0, 0, 0])),
                                  [0, 0, 1, 0, 0, 0])
    full = compute_supports(C, L, [0, 1, 2])
    v = np.random.default_rng(0).standard_normal(4)
    np.testing.assert_array_equal(effective_lift_apply(L, full, v), L.lift(v))


def test_effective_gram_diag_examples(fig1):
    C, L = fig1
    np.testing.assert_array_equal(effective_gram_diag(L, compute_supports(C, L, [0])), [1, 1, 2, 1])
    np.testing.assert_array_equal(effective_gram_diag(L, compute_supports(C, L, [0, 1, 2])),
                                  L.gram_diag)
    P = GroupCovering(6, [[0, 3], [1, 2], [4, 5]], [1.0, 2.0, 0.5])
    LP = build_lifting(P)
    for act in ([], [1], [0, 2]):
        np.testing.assert_array_equal(effective_gram_diag(LP, compute_supports(P, LP, act)),
                                      LP.gram_diag)


def test_group_file_round_trip(tmp_path):
    C = random_covering(np.random.default_rng(3))
    path = tmp_path / "g.grp"
    write_groups(C, path)
    back = read_groups(path)
    assert back.n == C.n
    assert [g.tolist() for g in back.groups] == [g.tolist() for g in C.groups]
    np.testing.assert_array_equal(back.weights, C.weights)
    assert path.read_text().splitlines()[0] == f"{C.n} {C.n_groups}"


def test_group_file_errors(tmp_path):
    path = tmp_path / "bad.grp"
    path.write_text("3 2\n1 2 1 2\n1 3 2 3\n")
    with pytest.raises(CoveringError, match=":3:"):
        read_groups(path)
    path.write_text("3 3\n1 2 1 2\n1 2 2 3\n")
    with pytest.raises(CoveringError, match="announces"):
        read_groups(path)


def test_covering_of_round_trip():
    C = random_covering(np.random.default_rng(5))
    back = covering_of(build_lifting(C))
    assert [g.tolist() for g in back.groups] == [g.tolist() for g in C.groups]


# properties


@settings(max_examples=60, deadline=None)
@given(coverings())
def test_fact_rows_and_gram(C):
    L = build_lifting(C)
    M = dense_lifting(L)
    assert ((M != 0).sum(axis=1) == 1).all()
    counts = np.array([sum(i in g for g in C.groups) for i in range(C.n)])
    np.testing.assert_array_equal((M != 0).sum(axis=0), counts)
    gram = M.T @ M
    np.testing.assert_allclose(gram, np.diag(np.diag(gram)), atol=0)
    expected = [sum(w**2 for g, w in zip(C.groups, C.weights) if i in g) for i in range(C.n)]
    np.testing.assert_allclose(np.diag(gram), expected, rtol=1e-14)
    for k in range(L.p):
        assert L.row_to_col[k] in C.groups[L.row_to_group[k]]
    assert L.norm_sq == pytest.approx(np.linalg.norm(M, 2) ** 2, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(coverings(), st.integers(0, 2**32 - 1))
def test_support_definitions(C, seed):
    rng = np.random.default_rng(seed)
    L = build_lifting(C)
    act = rng.random(C.n_groups) < 0.5
    S = compute_supports(C, L, act)
    inactive = [g for g, a in zip(C.groups, act) if not a]
    union = set().union(*map(set, inactive)) if inactive else set()
    assert set(S.ext_coord_support.tolist()) == set(range(C.n)) - union
    assert S.el[~S.ez].sum() == 0
    x = S.project_x(rng.standard_normal(C.n))
    assert not np.any(L.lift(x)[~S.el])


@settings(max_examples=60, deadline=None)
@given(coverings(), st.integers(0, 2**32 - 1))
def test_effective_lift_adjoint_pairing(C, seed):
    rng = np.random.default_rng(seed)
    L = build_lifting(C)
    S = compute_supports(C, L, rng.random(C.n_groups) < 0.5)
    x, u = rng.standard_normal(L.n), rng.standard_normal(L.p)
    lhs = effective_lift_apply(L, S, x) @ u
    rhs = x @ effective_lift_adjoint(L, S, u)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    assert (effective_gram_diag(L, S) > 0).all()
