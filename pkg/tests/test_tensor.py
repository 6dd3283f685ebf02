from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest

from agtensor.codes import CoordinateSet, LinearCode, RadiusViolation, min_distance
from agtensor.families import rs_family
from agtensor.field import PrimeField
from agtensor.props import product_suite, restriction_commutes, restriction_suite
from agtensor.tensor import (
    InconsistentExtension, TensorCode, col_distance, corrupt, expand, extend_from_restriction,
    line_nearest, read_cells, read_grid, restrict_tensor, row_distance, tensor_contains,
    write_cells, write_grid,
)

GF2 = PrimeField(2)


def words(C):
    return {tuple(int(v) for v in w) for w in
            (np.array(m) @ C.generator % C.q for m in itertools.product(range(C.q), repeat=C.dim))}


def brute_tensor(C1, C2):
    """All n x m grids with rows in C1 and columns in C2."""
    rows = sorted(words(C1))
    col_words = words(C2)
    out = []
    for choice in itertools.product(rows, repeat=C2.length):
        F = np.array(choice)
        if all(tuple(F[:, x]) in col_words for x in range(C1.length)):
            out.append(F)
    return out


C1 = LinearCode(GF2, [[1, 1, 0], [0, 1, 1]])           # even weight, m = 3
C2 = LinearCode(GF2, [[1, 1, 1, 1]])                   # repetition, n = 4
T = TensorCode(C1, C2)


def test_tensor_code_against_enumeration():
    grids = brute_tensor(C1, C2)
    assert len(grids) == 2**T.dim
    assert T.shape == (4, 3)
    flat = T.as_linear_code()
    assert {tuple(g.reshape(-1)) for g in grids} == words(flat)
    for g in grids:
        assert tensor_contains(g, T)
    bad = grids[1].copy()
    bad[0, 0] ^= 1
    assert not tensor_contains(bad, T)
    assert min(int(np.count_nonzero(g)) for g in grids if np.any(g)) == min_distance(C1) * min_distance(C2)


def test_expand_matches_kron():
    rng = np.random.default_rng(0)
    fam = rs_family(7)
    T7 = TensorCode(fam.member(2), fam.member(1))
    X = rng.integers(0, 7, size=(2, 3))
    F = expand(X, T7)
    flat = (X.reshape(-1) @ np.kron(T7.C2.generator, T7.C1.generator)) % 7
    assert np.array_equal(F.reshape(-1), flat)
    assert tensor_contains(F, T7)
    with pytest.raises(ValueError):
        expand(np.zeros((3, 3)), T7)


def test_extend_from_restriction_recovers_codeword():
    fam = rs_family(11)
    Tr = TensorCode(fam.member(3), fam.member(2))
    X = np.random.default_rng(1).integers(0, 11, size=(3, 4))
    F = expand(X, Tr)
    A = CoordinateSet.of(11, [0, 2, 5, 9])
    B = CoordinateSet.of(11, [1, 4, 7])
    G, Y = extend_from_restriction(F[np.ix_(B.indices, A.indices)], Tr, A, B)
    assert np.array_equal(G, F) and np.array_equal(Y, X)


def test_extend_inconsistent_and_shape_errors():
    fam = rs_family(7)
    Tr = TensorCode(fam.member(1), fam.member(1))
    A = CoordinateSet.of(7, [0, 1, 2])
    B = CoordinateSet.of(7, [0, 1])
    values = np.zeros((2, 3), dtype=np.int64)
    values[0, 1] = 1  # a row that is not affine on three points
    with pytest.raises(InconsistentExtension):
        extend_from_restriction(values, Tr, A, B)
    with pytest.raises(ValueError):
        extend_from_restriction(np.zeros((3, 2)), Tr, A, B)


def test_restriction_commutes_examples_and_suites():
    fam = rs_family(5)
    Tr = TensorCode(fam.member(2), fam.member(1))
    A, B = CoordinateSet.of(5, [0, 3]), CoordinateSet.of(5, [1, 2, 4])
    assert restriction_commutes(Tr, A, B)
    R = restrict_tensor(Tr, A, B)
    assert R.shape == (3, 2)
    assert restriction_suite(trials=30, seed=5)["failures"] == []
    assert product_suite(trials=15, seed=5)["failures"] == []


def test_row_and_col_distance():
    fam = rs_family(7)
    Tr = TensorCode(fam.member(1), fam.member(1))
    F = expand(np.array([[1, 2], [3, 4]]), Tr)
    G = F.copy()
    G[0, 0] = (G[0, 0] + 1) % 7
    G[3, 5] = (G[3, 5] + 2) % 7
    assert row_distance(G, Tr.C1) == Fraction(2, 49)
    assert col_distance(G, Tr.C2) == Fraction(2, 49)
    assert row_distance(G, Tr.C1, reference=F) == Fraction(2, 49)
    assert col_distance(G, Tr.C2, reference=F) == Fraction(2, 49)
    nearest, d = line_nearest(G, Tr.C1)
    assert np.array_equal(nearest, F) and d.tolist() == [1, 0, 0, 1, 0, 0, 0]


def test_line_nearest_reference_radius_violation():
    fam = rs_family(7)
    C = fam.member(1)
    F = C.encode(np.array([[1, 2]]))
    G = F.copy()
    G[0, :3] = (G[0, :3] + 1) % 7
    with pytest.raises(RadiusViolation):
        line_nearest(G, C, reference=F)
    with pytest.raises(RadiusViolation):
        line_nearest(F, C, reference=G)


@pytest.mark.parametrize("model", ["uniform-cells", "row-burst", "col-burst"])
def test_corrupt_exact_count(model):
    F = np.zeros((20, 30), dtype=np.int64)
    G, cells = corrupt(F, 0.05, model, seed=3, q=5)
    assert len(cells) == 30 == np.count_nonzero(G)
    assert {(int(x), int(y)) for y, x in np.argwhere(G)} == {tuple(c) for c in cells.tolist()}
    assert cells.tolist() == sorted(cells.tolist())
    again, cells2 = corrupt(F, Fraction(1, 20), model, seed=3, q=5)
    assert np.array_equal(again, G) and np.array_equal(cells, cells2)
    if model == "row-burst":
        assert np.all(G[np.unique(cells[:, 1])[0]])


def test_corrupt_rejects_bad_arguments():
    with pytest.raises(ValueError):
        corrupt(np.zeros((2, 2)), 2, "uniform-cells", 0, 5)
    with pytest.raises(ValueError):
        corrupt(np.zeros((2, 2)), 0.5, "diagonal", 0, 5)


def test_grid_and_cell_files(tmp_path):
    F = np.arange(12).reshape(3, 4) % 7
    write_grid(tmp_path / "g.txt", F, 7, seed=9, provenance="unit")
    G, header = read_grid(tmp_path / "g.txt")
    assert np.array_equal(F, G)
    assert header == {"q": 7, "m": 4, "n": 3, "seed": 9, "provenance": "unit"}
    cells = np.array([[0, 1], [2, 0]])
    write_cells(tmp_path / "c.json", cells)
    assert np.array_equal(read_cells(tmp_path / "c.json"), cells)
    (tmp_path / "bad.txt").write_text("1 2\n")
    with pytest.raises(ValueError):
        read_grid(tmp_path / "bad.txt")
