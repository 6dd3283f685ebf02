from __future__ import annotations

import itertools

import numpy as np
import pytest

from agtensor.codes import min_distance
from agtensor.families import (
    EllipticCurve, FamilyDescriptor, PerturbedFamily, count_points, elliptic_family,
    elliptic_monomials, find_curve, rs_family, star_contained, verify_family,
)


def brute_count(p, a, b):
    return sum(1 for x in range(p) for y in range(p) if (y * y - x**3 - a * x - b) % p == 0)


def brute_find(p, threshold):
    for a in range(p):
        for b in range(p):
            if (a, b) == (0, 0) or (4 * a**3 + 27 * b**2) % p == 0:
                continue
            if brute_count(p, a, b) >= threshold:
                return a, b
    return None


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_count_points_matches_brute_force(p):
    for a in range(p):
        for b in range(p):
            if (4 * a**3 + 27 * b**2) % p:
                assert count_points(p, a, b) == brute_count(p, a, b)


def test_known_point_counts():
    assert count_points(5, 1, 1) == 8
    assert count_points(5, 0, 1) == 5


@pytest.mark.parametrize("p, threshold", [(5, 5), (5, 8), (7, 9), (11, 12), (13, 16), (5, 20)])
def test_find_curve_matches_brute_force(p, threshold):
    assert find_curve(p, threshold) == brute_find(p, threshold)


def test_find_curve_frozen_values():
    assert find_curve(101, 101) == (0, 1)
    assert count_points(101, 0, 1) == 101


def test_singular_and_bad_p_rejected():
    with pytest.raises(ValueError):
        EllipticCurve.create(5, 0, 0)
    with pytest.raises(ValueError):
        EllipticCurve.create(9, 1, 1)
    with pytest.raises(ValueError):
        find_curve(3, 1)


def test_rs_member_is_polynomial_evaluation():
    fam = rs_family(7)
    C = fam.member(2)
    evals = {tuple((c0 + c1 * x + c2 * x * x) % 7 for x in range(7))
             for c0, c1, c2 in itertools.product(range(7), repeat=3)}
    assert all(C.contains_rows(np.array(sorted(evals))))
    assert C.dim == 3
    assert min_distance(C) == 5
    assert fam.member(9 - 3).dim == 7  # capped at n


def test_rs_rejects_bad_points():
    with pytest.raises(ValueError):
        rs_family(7, [1, 1])
    with pytest.raises(ValueError):
        rs_family(7, [7])
    with pytest.raises(ValueError):
        rs_family(7, [])
    with pytest.raises(ValueError):
        rs_family(7).member(8)


def test_elliptic_monomials():
    assert elliptic_monomials(0) == [(0, 0)]
    assert elliptic_monomials(1) == [(0, 0)]
    assert elliptic_monomials(5) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1)]
    for ell in range(1, 30):
        assert len(elliptic_monomials(ell)) == ell  # Riemann-Roch on genus 1


def test_elliptic_members_p5():
    fam = elliptic_family(5, 1, 1)
    assert fam.n == 8 and fam.genus == 1
    dims = [fam.member(ell).dim for ell in range(9)]
    assert dims == [1, 1, 2, 3, 4, 5, 6, 7, 7]
    for ell in range(1, 8):
        assert min_distance(fam.member(ell)) >= 8 - ell


def test_elliptic_evaluations_are_functions_on_curve():
    fam = elliptic_family(7, 1, 3)
    C = fam.member(4)
    xs, ys = np.array(fam.points).T
    # x^2, x, y, 1 at every point
    for row in (xs * xs % 7, xs, ys, np.ones_like(xs)):
        assert C.contains_rows(row)[0]


def test_verify_family_small_exact():
    for q in (5, 7):
        assert verify_family(rs_family(q)).ok
    rep = verify_family(elliptic_family(5, 0, 1))
    assert rep.ok and rep.to_dict()["ok"]


def test_verify_family_sampled_mode():
    rep = verify_family(elliptic_family(13, 1, 1), distance_mode="sampled", distance_samples=64)
    assert rep.ok
    assert all(m["distance"] is None for m in rep.members)


def test_perturbed_family_is_reported_not_raised():
    fam = PerturbedFamily(rs_family(7), ell=2, row=1, col=3)
    rep = verify_family(fam)
    assert not rep.ok
    assert any("C(1) * C(1)" in v for v in rep.violations)
    assert not star_contained(fam, 1, 1)
    assert star_contained(rs_family(7), 1, 1)


def test_verify_family_on_point_subset():
    fam = rs_family(11, [0, 1, 2, 3, 4])
    assert verify_family(fam).ok
    with pytest.raises(ValueError):
        verify_family(fam, distance_mode="bogus")


def test_descriptor_roundtrip_and_build():
    d = FamilyDescriptor("elliptic", 101, 0, 1, "first:50")
    again = FamilyDescriptor.from_text(d.to_text())
    assert again == d
    fam = again.build()
    assert fam.n == 50 and fam.genus == 1
    rs = FamilyDescriptor.from_text("kind = rs\nq = 11\npoints = 0,2,4\n").build()
    assert rs.points.tolist() == [0, 2, 4]
    ell = FamilyDescriptor("elliptic", 5, 0, 1, "0:1,2:2").build()
    assert ell.points == ((0, 1), (2, 2))
    assert isinstance(FamilyDescriptor("rs", 7, perturb="2:1:3").build(), PerturbedFamily)


@pytest.mark.parametrize("text", [
    "kind = hermitian\nq = 7\n",
    "kind = rs\n",
    "kind = elliptic\nq = 5\na = 1\n",
])
def test_descriptor_rejects_bad_input(text):
    with pytest.raises(ValueError):
        FamilyDescriptor.from_text(text)


def test_descriptor_first_out_of_range():
    with pytest.raises(ValueError):
        FamilyDescriptor("rs", 7, points="first:8").build()
