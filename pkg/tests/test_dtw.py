import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glossalign.dtw import (
    TooLargeForOracle,
    build_cost_matrix,
    count_paths,
    dtw_align,
    dtw_from_cost,
    oracle_align,
    oracle_from_cost,
    path_cost,
    path_to_alignment_vector,
)
from glossalign.seqcore import AlignmentPath, CostFn, DimMismatch, check_path


def col(*values):
    return [[float(v)] for v in values]


def test_cost_matrix_examples():
    assert build_cost_matrix(col(1, 3), col(1, 2, 3)).tolist() == [[0, 1, 2], [2, 1, 0]]
    assert build_cost_matrix(col(4), col(4)).tolist() == [[0]]
    with pytest.raises(DimMismatch):
        build_cost_matrix([[1.0, 2.0]], [[1.0, 2.0, 3.0]])


@pytest.mark.parametrize("fn", list(CostFn))
def test_cost_matrix_matches_local_cost(fn):
    from glossalign.seqcore import local_cost

    rng = np.random.default_rng(3)
    a = rng.integers(0, 3, size=(4, 3)).astype(float) if fn is CostFn.TOKEN_MISMATCH else rng.normal(size=(4, 3))
    b = rng.integers(0, 3, size=(5, 3)).astype(float) if fn is CostFn.TOKEN_MISMATCH else rng.normal(size=(5, 3))
    C = build_cost_matrix(a, b, fn)
    for q, t in itertools.product(range(4), range(5)):
        assert C[q, t] == local_cost(a[q], b[t], fn)


def test_identity_alignment():
    res = dtw_align(col(1, 2, 3), col(1, 2, 3))
    assert res.cost == 0
    assert res.path.steps == ((1, 1), (2, 2), (3, 3))


def test_two_of_three():
    # the 2x3 grid has 5 warping paths; enumerate their costs by hand from
    # the cost matrix [[0,1,2],[2,1,0]]
    C = [[0, 1, 2], [2, 1, 0]]
    paths = [
        [(0, 0), (0, 1), (0, 2), (1, 2)],
        [(0, 0), (0, 1), (1, 2)],
        [(0, 0), (0, 1), (1, 1), (1, 2)],
        [(0, 0), (1, 1), (1, 2)],
        [(0, 0), (1, 0), (1, 1), (1, 2)],
    ]
    assert min(sum(C[q][t] for q, t in p) for p in paths) == 1
    assert dtw_align(col(0, 2), col(0, 1, 2)).cost == 1


def test_single_row():
    res = dtw_align(col(5), col(1, 2))
    assert res.cost == 7
    assert res.path.steps == ((1, 1), (1, 2))


def test_tie_breaking_prefers_diagonal_then_t():
    # all-zero costs: every path ties, the diagonal-first walk must win
    res = dtw_from_cost(np.zeros((2, 3)))
    assert res.path.steps == ((1, 1), (1, 2), (2, 3))
    res = dtw_from_cost(np.zeros((3, 2)))
    assert res.path.steps == ((1, 1), (2, 1), (3, 2))


def test_oracle_guard_and_trivial_grid():
    assert oracle_align(col(1), col(1)).path.steps == ((1, 1),)
    with pytest.raises(TooLargeForOracle):
        oracle_align(col(*range(8)), col(1))
    with pytest.raises(TooLargeForOracle):
        oracle_from_cost(np.zeros((2, 8)))


@pytest.mark.parametrize("q,t,expected", [(1, 1, 1), (2, 2, 3), (3, 3, 13), (5, 5, 321), (2, 3, 5), (7, 7, 8989)])
def test_oracle_enumerates_delannoy_number_of_paths(q, t, expected):
    assert count_paths(q, t) == expected


def test_path_to_vector_examples():
    diag = AlignmentPath(((1, 1), (2, 2), (3, 3)), 3, 3)
    np.testing.assert_allclose(path_to_alignment_vector(diag).values, [1 / 3, 2 / 3, 1.0])
    assert path_to_alignment_vector(AlignmentPath(((1, 1), (1, 2)), 1, 2)).tolist() == [1.0]
    # row 1 visits t=1 only, row 2 visits t=1 and t=2
    assert path_to_alignment_vector(AlignmentPath(((1, 1), (2, 1), (2, 2)), 2, 2)).tolist() == [0.5, 1.0]


small_seqs = st.lists(st.integers(0, 3), min_size=1, max_size=5).map(lambda xs: col(*xs))
real_seqs = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.lists(st.floats(-10, 10), min_size=2, max_size=2), min_size=n, max_size=n)
)


@given(small_seqs, small_seqs)
def test_matches_oracle_small(a, b):
    res = dtw_align(a, b)
    assert res.cost == oracle_align(a, b).cost
    check_path(res.path.steps, len(a), len(b))
    assert res.cost == path_cost(build_cost_matrix(a, b), res.path)


@given(real_seqs, real_seqs)
def test_transposition_and_vector(a, b):
    ab, ba = dtw_align(a, b, CostFn.EUCLIDEAN), dtw_align(b, a, CostFn.EUCLIDEAN)
    assert ab.cost == pytest.approx(ba.cost, rel=1e-12, abs=1e-12)
    v = path_to_alignment_vector(ab.path).values
    assert np.all(np.diff(v) >= 0) and v[-1] == 1.0 and v[0] > 0


@given(real_seqs)
def test_self_alignment_is_diagonal(a):
    res = dtw_align(a, a, CostFn.EUCLIDEAN)
    assert res.cost == 0
    assert res.path.steps == tuple((i, i) for i in range(1, len(a) + 1))


@settings(max_examples=60)
@given(
    st.integers(1, 5).flatmap(lambda q: st.integers(1, 5).flatmap(
        lambda t: st.lists(st.lists(st.integers(0, 9), min_size=t, max_size=t), min_size=q, max_size=q))),
    st.integers(1, 5),
)
def test_constant_shift(grid, c):
    # Integer costs keep the arithmetic exact. A uniform shift adds c per
    # visited cell, so the new optimum costs old-cost-of-its-path + c * len.
    C = np.array(grid, dtype=float)
    before = oracle_from_cost(C)
    after = dtw_from_cost(C + c)
    assert after.cost == oracle_from_cost(C + c).cost
    assert after.cost == path_cost(C, after.path) + c * len(after.path)
    assert after.cost >= before.cost + c * max(C.shape)
