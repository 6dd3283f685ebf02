"""Linear codes over prime fields."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import linalg
from .field import PrimeField

DEFAULT_BUDGET = 2_000_000


class BudgetExceeded(RuntimeError):
    """An exhaustive computation would exceed its work budget."""


class RadiusViolation(RuntimeError):
    """A reference codeword is not certified as the unique nearest one."""


@dataclass(frozen=True)
class CoordinateSet:
    parent_length: int
    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.parent_length):
            raise ValueError("index out of range")

    @classmethod
    def full(cls, n: int) -> "CoordinateSet":
        return cls(n, tuple(range(n)))

    @classmethod
    def of(cls, n: int, indices) -> "CoordinateSet":
        return cls(n, tuple(sorted(set(int(i) for i in indices))))

    def __len__(self) -> int:
        return len(self.indices)


class LinearCode:
    """A linear code given by a full-row-rank ``k x n`` generator.

    ``distance_bound`` is an optional certified lower bound on the
    minimum distance (family members carry ``n - l``), with a short
    human-readable ``certificate`` explaining where it comes from.
    """

    def __init__(self, field: PrimeField, generator, *, distance_bound: int | None = None,
                 certificate: str | None = None, name: str = ""):
        q = field.modulus
        G = np.asarray(generator, dtype=np.int64)
        if G.ndim != 2:
            raise ValueError("generator must be 2-D")
        G = np.mod(G, q)
        if linalg.rank(G, q) != G.shape[0]:
            raise ValueError("generator must have full row rank")
        G.setflags(write=False)
        self.field = field
        self.generator = G
        self.distance_bound = distance_bound
        self.certificate = certificate
        self.name = name
        self._basis: np.ndarray | None = None

    @classmethod
    def from_rows(cls, field: PrimeField, rows, length: int | None = None, **kw) -> "LinearCode":
        """Code spanned by ``rows``; dependent rows are reduced away.

        Independent spanning sets are kept as given so that structured
        bases (monomials, say) survive.
        """
        q = field.modulus
        R = np.mod(np.asarray(rows, dtype=np.int64), q)
        if R.ndim == 1:
            R = R.reshape(1, -1) if R.size else np.zeros((0, length or 0), dtype=np.int64)
        if length is not None and R.shape[1] != length:
            raise ValueError("row length mismatch")
        if linalg.rank(R, q) != R.shape[0]:
            R = linalg.row_basis(R, q)
        return cls(field, R, **kw)

    @classmethod
    def zero(cls, field: PrimeField, n: int) -> "LinearCode":
        return cls(field, np.zeros((0, n), dtype=np.int64))

    @classmethod
    def full_space(cls, field: PrimeField, n: int) -> "LinearCode":
        return cls(field, np.eye(n, dtype=np.int64), distance_bound=1)

    @classmethod
    def repetition(cls, field: PrimeField, n: int) -> "LinearCode":
        return cls(field, np.ones((1, n), dtype=np.int64), distance_bound=n)

    @property
    def q(self) -> int:
        return self.field.modulus

    @property
    def length(self) -> int:
        return self.generator.shape[1]

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    @property
    def basis(self) -> np.ndarray:
        """Reduced echelon basis, cached; used for fast membership."""
        if self._basis is None:
            self._basis = linalg.row_basis(self.generator, self.q)
        return self._basis

    def encode(self, message) -> np.ndarray:
        return linalg.matmul(np.atleast_2d(message), self.generator, self.q).reshape(
            np.shape(message)[:-1] + (self.length,))

    def contains_rows(self, V) -> np.ndarray:
        V = np.mod(np.atleast_2d(np.asarray(V, dtype=np.int64)), self.q)
        if V.shape[1] != self.length:
            raise ValueError("vector length does not match code length")
        return linalg.rows_in_span(self.basis, V, self.q)

    def same_as(self, other: "LinearCode") -> bool:
        return (self.q == other.q and self.length == other.length
                and linalg.same_row_space(self.generator, other.generator, self.q))

    def is_subcode_of(self, other: "LinearCode") -> bool:
        return bool(np.all(other.contains_rows(self.generator))) if self.dim else True

    def __repr__(self) -> str:
        tag = f" {self.name}" if self.name else ""
        return f"<LinearCode{tag} [{self.length},{self.dim}] over GF({self.q})>"

    def to_dict(self) -> dict:
        return {"q": self.q, "n": self.length, "k": self.dim,
                "generator": linalg.to_dict(self.generator, self.q)}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearCode":
        G, q = linalg.from_dict(d["generator"])
        if (q, G.shape[1], G.shape[0]) != (d["q"], d["n"], d["k"]):
            raise ValueError("code header does not match generator")
        return cls(PrimeField(q), G)


def dimension(C: LinearCode) -> int:
    return C.dim


def contains(C: LinearCode, v) -> bool:
    v = np.asarray(v)
    if v.shape != (C.length,):
        raise ValueError("vector length does not match code length")
    return bool(C.contains_rows(v[None, :])[0])


def hamming(u, v) -> int:
    return int(np.count_nonzero(np.asarray(u) != np.asarray(v)))


def _check_budget(C: LinearCode, budget: int) -> None:
    if C.q ** C.dim > budget:
        raise BudgetExceeded(f"q^k = {C.q}^{C.dim} exceeds budget {budget}")


def iter_codewords(C: LinearCode, budget: int = DEFAULT_BUDGET, chunk: int = 1 << 16):
    """Yield blocks of codewords, in message order (lexicographic, first coordinate slowest)."""
    _check_budget(C, budget)
    q, k = C.q, C.dim
    total = q**k
    powers = q ** np.arange(k - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        msgs = (idx[:, None] // powers[None, :]) % q
        if k == 0:
            yield np.zeros((len(idx), C.length), dtype=np.int64)
        else:
            yield linalg.matmul(msgs, C.generator, q)


def _min_distance_enumerate(C: LinearCode, budget: int) -> int:
    best = C.length + 1
    for block in iter_codewords(C, budget):
        w = np.count_nonzero(block, axis=1)
        w = w[w > 0]
        if w.size:
            best = min(best, int(w.min()))
    return best


def _min_distance_zero_sets(C: LinearCode, budget: int) -> int:
    # A nonzero codeword vanishes on Z iff the generator restricted to Z
    # has rank < k.  dist = n - (largest such |Z|); sets below size k
    # always qualify, and full rank on all s-sets persists for larger s.
    n, k, q = C.length, C.dim, C.q
    G = C.generator
    spent = 0
    largest = k - 1
    for s in range(k, n + 1):
        found = False
        for Z in combinations(range(n), s):
            spent += 1
            if spent > budget:
                raise BudgetExceeded(f"zero-set search exceeded budget {budget}")
            if linalg.rank(G[:, Z], q) < k:
                found = True
                break
        if not found:
            break
        largest = s
    return n - largest


def min_distance(C: LinearCode, budget: int = DEFAULT_BUDGET, method: str = "auto") -> int:
    """Exact minimum Hamming weight of a nonzero codeword.

    ``enumerate`` walks all ``q**k`` codewords.  ``zero-sets`` finds the
    largest coordinate set on which some nonzero codeword vanishes, by
    rank tests on restricted generators.  ``auto`` picks whichever fits
    the budget, preferring enumeration.
    """
    if C.dim == 0:
        raise ValueError("the zero code has no nonzero codewords")
    if method == "enumerate":
        return _min_distance_enumerate(C, budget)
    if method == "zero-sets":
        return _min_distance_zero_sets(C, budget)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if C.q ** C.dim <= budget:
        return _min_distance_enumerate(C, budget)
    return _min_distance_zero_sets(C, budget)


def restrict(C: LinearCode, A: CoordinateSet) -> LinearCode:
    if A.parent_length != C.length:
        raise ValueError("coordinate set is for a different length")
    return LinearCode.from_rows(C.field, C.generator[:, list(A.indices)], len(A))


def star_product(C1: LinearCode, C2: LinearCode) -> LinearCode:
    if C1.field != C2.field or C1.length != C2.length:
        raise ValueError("star product needs codes of equal length over one field")
    n = C1.length
    if C1.dim == 0 or C2.dim == 0:
        return LinearCode.zero(C1.field, n)
    prods = (C1.generator[:, None, :] * C2.generator[None, :, :]) % C1.q
    return LinearCode.from_rows(C1.field, prods.reshape(-1, n), n)


def dual(C: LinearCode) -> LinearCode:
    if C.dim == 0:
        return LinearCode.full_space(C.field, C.length)
    return LinearCode(C.field, linalg.kernel(C.generator, C.q))


def nearest_codeword(C: LinearCode, v, *, reference=None, distance_bound: int | None = None,
                     budget: int = DEFAULT_BUDGET) -> tuple[np.ndarray, int]:
    """A codeword at minimum distance from ``v`` and that distance.

    Without ``reference`` the search is exhaustive (ties go to the first
    codeword in enumeration order).  With ``reference`` the caller
    proposes ``c*``; it is returned only if it lies in the code and
    ``2 * dist(v, c*)`` is below the certified minimum distance, which
    makes it the unique nearest codeword.
    """
    v = np.mod(np.asarray(v, dtype=np.int64), C.q)
    if v.shape != (C.length,):
        raise ValueError("vector length does not match code length")
    if reference is not None:
        bound = distance_bound if distance_bound is not None else C.distance_bound
        if bound is None:
            raise RadiusViolation("reference mode needs a certified distance bound")
        ref = np.mod(np.asarray(reference, dtype=np.int64), C.q)
        if not contains(C, ref):
            raise RadiusViolation("reference is not a codeword")
        dist = hamming(v, ref)
        if 2 * dist >= bound:
            raise RadiusViolation(f"distance {dist} not below half the bound {bound}")
        return ref, dist
    best, best_d = None, C.length + 1
    for block in iter_codewords(C, budget):
        d = np.count_nonzero(block != v[None, :], axis=1)
        i = int(np.argmin(d))
        if d[i] < best_d:
            best, best_d = block[i].copy(), int(d[i])
    return best, best_d
