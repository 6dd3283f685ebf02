"""Prime field arithmetic.

Scalars are :class:`FieldElement` objects bound to a :class:`PrimeField`.
Bulk work elsewhere in the package uses int64 numpy arrays holding
canonical residues; :meth:`PrimeField.array` is the bridge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Deterministic Miller-Rabin witness set, exact for n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    n = max(n, 2)
    while not is_prime(n):
        n += 1
    return n


class FieldMismatch(ValueError):
    pass


def _egcd_inverse(a: int, q: int) -> int:
    old_r, r = a, q
    old_s, s = 1, 0
    while r:
        t = old_r // r
        old_r, r = r, old_r - t * r
        old_s, s = s, old_s - t * s
    if old_r != 1:
        raise ZeroDivisionError(f"{a} is not invertible modulo {q}")
    return old_s % q


@dataclass(frozen=True)
class PrimeField:
    """GF(q) for a prime q."""

    modulus: int

    def __post_init__(self) -> None:
        if not isinstance(self.modulus, int) or not is_prime(self.modulus):
            raise ValueError(f"modulus must be prime, got {self.modulus!r}")

    @property
    def q(self) -> int:
        return self.modulus

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.modulus, self)

    def zero(self) -> "FieldElement":
        return FieldElement(0, self)

    def one(self) -> "FieldElement":
        return FieldElement(1, self)

    def elements(self) -> list["FieldElement"]:
        return [FieldElement(v, self) for v in range(self.modulus)]

    def inv_int(self, a: int) -> int:
        a %= self.modulus
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        return _egcd_inverse(a, self.modulus)

    def array(self, values) -> np.ndarray:
        """Canonical int64 residues of ``values``."""
        return np.mod(np.asarray(values, dtype=np.int64), self.modulus)

    def __repr__(self) -> str:
        return f"GF({self.modulus})"


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: PrimeField

    def __post_init__(self) -> None:
        if not 0 <= self.value < self.field.modulus:
            raise ValueError(f"{self.value} is not a canonical residue mod {self.field.modulus}")

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatch(f"cannot combine {self.field} and {other.field}")
            return other
        if isinstance(other, (int, np.integer)):
            return self.field(int(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement((self.value + other.value) % self.field.modulus, self.field)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(-self.value % self.field.modulus, self.field)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement((self.value - other.value) % self.field.modulus, self.field)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.value * other.value % self.field.modulus, self.field)

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse")
        return FieldElement(_egcd_inverse(self.value, self.field.modulus), self.field)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __pow__(self, e: int) -> "FieldElement":
        if e < 0:
            return self.inverse() ** (-e)
        # square-and-multiply; 0**0 == 1
        result, base, q = 1, self.value, self.field.modulus
        while e:
            if e & 1:
                result = result * base % q
            base = base * base % q
            e >>= 1
        return FieldElement(result, self.field)

    def __eq__(self, other) -> bool:
        if isinstance(other, FieldElement):
            return self.field == other.field and self.value == other.value
        if isinstance(other, (int, np.integer)):
            return self.value == int(other) % self.field.modulus
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.value, self.field.modulus))

    def __int__(self) -> int:
        return self.value

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        return str(self.value)


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def power(a: FieldElement, e: int) -> FieldElement:
    if e < 0:
        raise ValueError("exponent must be non-negative")
    return a**e
