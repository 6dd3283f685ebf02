from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from agtensor.field import FieldMismatch, PrimeField, add, inv, is_prime, mul, next_prime, power

SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 101, 4001]


def trial_division(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def test_is_prime_matches_trial_division():
    for n in range(-3, 5000):
        assert is_prime(n) == trial_division(n), n


def test_is_prime_large_known_values():
    assert is_prime(2**61 - 1)
    assert not is_prime(2**61 + 1)
    # strong pseudoprime to bases 2, 3, 5, 7
    assert not is_prime(3215031751)


def test_next_prime():
    assert next_prime(4000) == 4001
    assert next_prime(4001) == 4001
    assert next_prime(0) == 2


@pytest.mark.parametrize("bad", [0, 1, 4, 100, 4335])
def test_composite_modulus_rejected(bad):
    with pytest.raises(ValueError):
        PrimeField(bad)


@pytest.mark.parametrize("q", SMALL_PRIMES)
def test_inverse_table(q):
    F = PrimeField(q)
    for a in range(1, min(q, 300)):
        assert (F(a) * F(a).inverse()).value == 1
        assert inv(F(a)).value == pow(a, -1, q)
    with pytest.raises(ZeroDivisionError):
        F.zero().inverse()


@given(st.sampled_from(SMALL_PRIMES), st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
def test_ring_operations_match_python_ints(q, a, b):
    F = PrimeField(q)
    x, y = F(a), F(b)
    assert (x + y).value == (a + b) % q
    assert (x - y).value == (a - b) % q
    assert (x * y).value == (a * b) % q
    assert (-x).value == (-a) % q
    assert add(x, y) == x + y and mul(x, y) == x * y
    if b % q:
        assert ((x / y) * y) == x


@given(st.sampled_from(SMALL_PRIMES), st.integers(0, 10**4), st.integers(0, 200))
def test_power_matches_builtin(q, a, e):
    F = PrimeField(q)
    assert (F(a) ** e).value == pow(a, e, q)
    assert power(F(a), e).value == pow(a, e, q)


def test_zero_to_zero_is_one():
    assert (PrimeField(7).zero() ** 0).value == 1


def test_fermat():
    F = PrimeField(101)
    for a in range(1, 101):
        assert F(a) ** 100 == F.one()


def test_mixing_fields_raises():
    with pytest.raises(FieldMismatch):
        PrimeField(5)(1) + PrimeField(7)(1)


def test_int_coercion_and_array():
    F = PrimeField(7)
    assert F(3) + 5 == F(1)
    assert 10 * F(3) == F(2)
    assert F.array([-1, 7, 15]).tolist() == [6, 0, 1]
    assert len(F.elements()) == 7
