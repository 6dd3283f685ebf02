"""Dense exact linear algebra over GF(q).

Matrices are 2-D int64 numpy arrays of canonical residues; vectors are
1-D arrays.  Every routine takes the modulus ``q`` explicitly.  Pivoting
is always "first nonzero entry in column order", so reduced forms,
kernel bases and particular solutions are reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np

_FLOAT_EXACT = 2**53
_INT64_SAFE = 2**62


def as_matrix(A, q: int) -> np.ndarray:
    A = np.mod(np.asarray(A, dtype=np.int64), q)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise ValueError("expected a 2-D array")
    return A


def matmul(A: np.ndarray, B: np.ndarray, q: int) -> np.ndarray:
    """``A @ B mod q`` computed exactly.

    Uses float64 BLAS when every partial sum stays below 2**53, int64
    otherwise, and Python integers as a last resort.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    inner = A.shape[-1]
    bound = max(inner, 1) * (q - 1) ** 2
    if bound < _FLOAT_EXACT:
        out = np.matmul(A.astype(np.float64), B.astype(np.float64))
        return np.mod(out, q).astype(np.int64)
    if bound < _INT64_SAFE:
        return np.mod(np.matmul(A.astype(np.int64), B.astype(np.int64)), q)
    out = np.matmul(A.astype(object), B.astype(object))
    return np.mod(out, q).astype(np.int64)


def rref(A, q: int) -> tuple[np.ndarray, int, list[int]]:
    """Reduced row echelon form of ``A`` over GF(q).

    Returns ``(R, rank, pivot_columns)``.
    """
    R = as_matrix(A, q).copy()
    rows, cols = R.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(R[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            R[[r, p]] = R[[p, r]]
        inv = pow(int(R[r, c]), q - 2, q)
        R[r, c:] = R[r, c:] * inv % q
        col = R[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            R[hit, c:] = (R[hit, c:] - np.outer(col[hit], R[r, c:])) % q
        pivots.append(c)
        r += 1
    return R, r, pivots


def rank(A, q: int) -> int:
    return rref(A, q)[1]


def row_basis(A, q: int) -> np.ndarray:
    """Rows of the reduced echelon form spanning the row space of ``A``."""
    R, r, _ = rref(A, q)
    return R[:r]


def kernel(A, q: int) -> np.ndarray:
    """Basis of ``{v : A v = 0}`` as the rows of a ``(cols - rank) x cols`` array.

    One basis vector per free column, in increasing column order, with a
    1 in that free column.
    """
    R, r, pivots = rref(A, q)
    cols = R.shape[1]
    pivset = set(pivots)
    free = [c for c in range(cols) if c not in pivset]
    K = np.zeros((len(free), cols), dtype=np.int64)
    for i, f in enumerate(free):
        K[i, f] = 1
        K[i, pivots] = (-R[:r, f]) % q
    return K


def solve(A, b, q: int) -> np.ndarray | None:
    """One solution of ``A x = b`` or ``None`` when inconsistent.

    Free variables are set to zero.
    """
    A = as_matrix(A, q)
    b = np.mod(np.asarray(b, dtype=np.int64), q).reshape(-1)
    if A.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape[0]} equations, {b.shape[0]} right-hand sides")
    cols = A.shape[1]
    R, r, pivots = rref(np.hstack([A, b[:, None]]), q)
    if pivots and pivots[-1] == cols:
        return None
    x = np.zeros(cols, dtype=np.int64)
    x[pivots] = R[:r, cols]
    return x


def in_row_space(M, v, q: int) -> bool:
    M = as_matrix(M, q)
    v = np.mod(np.asarray(v, dtype=np.int64), q).reshape(-1)
    if v.shape[0] != M.shape[1]:
        raise ValueError("vector length does not match matrix width")
    return bool(rows_in_span(row_basis(M, q), v[None, :], q)[0])


def rows_in_span(basis: np.ndarray, V: np.ndarray, q: int) -> np.ndarray:
    """Membership of every row of ``V`` in the span of an RREF ``basis``.

    ``basis`` must be the nonzero rows of a reduced echelon form.  Since
    its pivot columns form an identity block, ``v`` lies in the span iff
    ``v == v[pivots] @ basis``.
    """
    V = np.atleast_2d(V)
    if basis.shape[0] == 0:
        return ~np.any(V % q, axis=1)
    pivots = [int(np.flatnonzero(row)[0]) for row in basis]
    recon = matmul(V[:, pivots], basis, q)
    return np.all(recon == np.mod(V, q), axis=1)


def same_row_space(A, B, q: int) -> bool:
    A = as_matrix(A, q)
    B = as_matrix(B, q)
    if A.shape[1] != B.shape[1]:
        return False
    ra, rb = rank(A, q), rank(B, q)
    return ra == rb and rank(np.vstack([A, B]), q) == ra


def to_dict(A, q: int) -> dict:
    """Row-major serialization with an explicit ``(rows, cols, q)`` header."""
    A = as_matrix(A, q)
    return {"rows": int(A.shape[0]), "cols": int(A.shape[1]), "q": int(q),
            "entries": [int(v) for v in A.reshape(-1)]}


def from_dict(d: dict) -> tuple[np.ndarray, int]:
    rows, cols, q = d["rows"], d["cols"], d["q"]
    entries = d["entries"]
    if len(entries) != rows * cols:
        raise ValueError("entry count does not match header")
    A = np.array(entries, dtype=np.int64).reshape(rows, cols)
    if np.any((A < 0) | (A >= q)):
        raise ValueError("entries must be canonical residues")
    return A, q
