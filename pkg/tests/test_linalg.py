from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agtensor import linalg


def span_set(M, q, cols=None):
    """All vectors in the row span, by enumeration."""
    M = [list(map(int, r)) for r in M]
    cols = len(M[0]) if cols is None else cols
    out = set()
    for coeffs in itertools.product(range(q), repeat=len(M)):
        out.add(tuple(sum(c * r[j] for c, r in zip(coeffs, M)) % q for j in range(cols)))
    return out


def rank_oracle(M, q):
    """Rank as log_q of the span size."""
    size = len(span_set(M, q))
    r = 0
    while q**r < size:
        r += 1
    return r


matrices = st.tuples(st.sampled_from([2, 3, 5]), st.integers(1, 4), st.integers(1, 5)).flatmap(
    lambda t: st.tuples(st.just(t[0]),
                        st.lists(st.lists(st.integers(0, t[0] - 1), min_size=t[2], max_size=t[2]),
                                 min_size=t[1], max_size=t[1])))


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_rank_and_rref_against_enumeration(args):
    q, M = args
    R, r, pivots = linalg.rref(M, q)
    assert r == rank_oracle(M, q)
    assert span_set(R[:r], q, len(M[0])) == span_set(M, q)
    assert len(pivots) == r
    for i, c in enumerate(pivots):
        col = np.zeros(len(M)); col[i] = 1
        assert np.array_equal(R[:, c], col)


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_kernel_against_enumeration(args):
    q, M = args
    A = np.array(M)
    K = linalg.kernel(A, q)
    cols = A.shape[1]
    brute = {v for v in itertools.product(range(q), repeat=cols) if not np.any(A @ np.array(v) % q)}
    assert K.shape == (cols - rank_oracle(M, q), cols)
    if K.shape[0]:
        assert span_set(K, q) == brute
    else:
        assert brute == {tuple([0] * cols)}


@settings(max_examples=150, deadline=None)
@given(matrices, st.data())
def test_solve_against_enumeration(args, data):
    q, M = args
    A = np.array(M)
    b = np.array(data.draw(st.lists(st.integers(0, q - 1), min_size=A.shape[0], max_size=A.shape[0])))
    x = linalg.solve(A, b, q)
    solvable = any(np.array_equal(A @ np.array(v) % q, b)
                   for v in itertools.product(range(q), repeat=A.shape[1]))
    if solvable:
        assert x is not None and np.array_equal(A @ x % q, b)
    else:
        assert x is None


def test_solve_free_variables_zero():
    x = linalg.solve([[1, 0, 2], [0, 1, 3]], [4, 5], 7)
    assert x.tolist() == [4, 5, 0]


def test_solve_dimension_mismatch():
    with pytest.raises(ValueError):
        linalg.solve([[1, 2]], [1, 2], 5)


def test_kernel_convention():
    # free columns 1 and 3, each basis vector has a 1 there
    K = linalg.kernel([[1, 2, 0, 1], [0, 0, 1, 4]], 5)
    assert K.tolist() == [[3, 1, 0, 0], [4, 0, 1, 1]]


def test_in_row_space_and_same_row_space():
    q = 7
    M = np.array([[1, 2, 3], [0, 1, 1]])
    assert linalg.in_row_space(M, (3 * M[0] + 5 * M[1]) % q, q)
    assert not linalg.in_row_space(M, [0, 0, 1], q)
    assert linalg.same_row_space(M, [[1, 3, 4], [2, 4, 6]], q)
    assert not linalg.same_row_space(M, [[1, 0, 0], [0, 1, 0]], q)
    with pytest.raises(ValueError):
        linalg.in_row_space(M, [1, 2], q)


def test_rows_in_span_zero_basis():
    out = linalg.rows_in_span(np.zeros((0, 3), dtype=np.int64), np.array([[0, 0, 0], [0, 1, 0]]), 5)
    assert out.tolist() == [True, False]


@pytest.mark.parametrize("q", [5, 4001, 2**31 - 1, 4611686018427387847])
def test_matmul_exact(q):
    rng = np.random.default_rng(q % 1000)
    top = min(q, 2**62)
    A = rng.integers(0, top, size=(6, 40), dtype=np.int64) % q
    B = rng.integers(0, top, size=(40, 5), dtype=np.int64) % q
    expected = [[sum(int(A[i, k]) * int(B[k, j]) for k in range(40)) % q for j in range(5)] for i in range(6)]
    assert linalg.matmul(A, B, q).tolist() == expected


def test_roundtrip_dict():
    A = np.array([[1, 2], [3, 4], [0, 6]])
    d = linalg.to_dict(A, 7)
    assert d["rows"] == 3 and d["cols"] == 2 and d["q"] == 7
    B, q = linalg.from_dict(d)
    assert q == 7 and np.array_equal(A, B)
    with pytest.raises(ValueError):
        linalg.from_dict({"rows": 1, "cols": 2, "q": 7, "entries": [1]})
    with pytest.raises(ValueError):
        linalg.from_dict({"rows": 1, "cols": 1, "q": 7, "entries": [7]})
