"""Randomized small-instance property suites for tensor codes."""

from __future__ import annotations

import time

import numpy as np

from . import linalg
from .codes import CoordinateSet, LinearCode, min_distance
from .field import PrimeField
from .tensor import TensorCode, restrict_tensor


def random_code(rng: np.random.Generator, field: PrimeField, n: int, k: int) -> LinearCode:
    q = field.modulus
    while True:
        G = rng.integers(0, q, size=(k, n))
        if linalg.rank(G, q) == k:
            return LinearCode(field, G)


def random_subset(rng: np.random.Generator, n: int) -> CoordinateSet:
    size = int(rng.integers(1, n + 1))
    return CoordinateSet.of(n, rng.choice(n, size=size, replace=False))


def restriction_commutes(T: TensorCode, A: CoordinateSet, B: CoordinateSet) -> bool:
    """``C1|_A (x) C2|_B`` and ``(C1 (x) C2)|_{A x B}`` have the same span."""
    q, m = T.q, T.C1.length
    lhs = restrict_tensor(T, A, B).as_linear_code().generator
    coords = [y * m + x for y in B.indices for x in A.indices]
    rhs = T.as_linear_code().generator[:, coords]
    return linalg.same_row_space(lhs, rhs, q)


def restriction_suite(trials: int = 100, seed: int = 0, q: int = 5, max_len: int = 8,
                      max_dim: int = 3) -> dict:
    rng = np.random.default_rng(seed)
    field = PrimeField(q)
    start = time.perf_counter()
    failures = []
    for t in range(trials):
        m, n = (int(v) for v in rng.integers(1, max_len + 1, size=2))
        k1 = int(rng.integers(1, min(max_dim, m) + 1))
        k2 = int(rng.integers(1, min(max_dim, n) + 1))
        T = TensorCode(random_code(rng, field, m, k1), random_code(rng, field, n, k2))
        if not restriction_commutes(T, random_subset(rng, m), random_subset(rng, n)):
            failures.append(t)
    return {"trials": trials, "failures": failures, "elapsed": time.perf_counter() - start}


def product_suite(trials: int = 100, seed: int = 0, q: int = 5, max_len: int = 6,
                  max_product_dim: int = 6) -> dict:
    """dim and minimum distance of ``C1 (x) C2`` against the products, by enumeration."""
    rng = np.random.default_rng(seed)
    field = PrimeField(q)
    start = time.perf_counter()
    failures = []
    for t in range(trials):
        k1 = int(rng.integers(1, max_product_dim + 1))
        k2 = int(rng.integers(1, max_product_dim // k1 + 1))
        m = int(rng.integers(k1, max(k1, max_len) + 1))
        n = int(rng.integers(k2, max(k2, max_len) + 1))
        C1, C2 = random_code(rng, field, m, k1), random_code(rng, field, n, k2)
        G = np.kron(C2.generator, C1.generator)
        dim_ok = linalg.rank(G, q) == k1 * k2
        flat = LinearCode.from_rows(field, G, m * n)
        dist_ok = (min_distance(flat, method="enumerate")
                   == min_distance(C1, method="enumerate") * min_distance(C2, method="enumerate"))
        if not (dim_ok and dist_ok):
            failures.append(t)
    return {"trials": trials, "failures": failures, "elapsed": time.perf_counter() - start}
