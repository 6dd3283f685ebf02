"""Tensor product codes on grids.

A grid ``F`` over an ``m``-long row code ``C1`` and an ``n``-long column
code ``C2`` is a numpy array of shape ``(n, m)`` indexed ``F[y, x]``:
a row fixes ``y`` and varies ``x``, a column fixes ``x``.  Every
function here uses that orientation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import linalg
from .codes import CoordinateSet, LinearCode, RadiusViolation, nearest_codeword, restrict


class InconsistentExtension(ValueError):
    """Values on ``A x B`` are not the restriction of any tensor codeword."""


@dataclass(frozen=True)
class TensorCode:
    C1: LinearCode  # rows, length m
    C2: LinearCode  # columns, length n

    def __post_init__(self) -> None:
        if self.C1.field != self.C2.field:
            raise ValueError("component codes live over different fields")

    @property
    def q(self) -> int:
        return self.C1.q

    @property
    def shape(self) -> tuple[int, int]:
        return self.C2.length, self.C1.length

    @property
    def dim(self) -> int:
        return self.C1.dim * self.C2.dim

    def as_linear_code(self) -> LinearCode:
        """Flattened code on coordinates ``y * m + x`` (small instances only)."""
        return LinearCode(self.C1.field, np.kron(self.C2.generator, self.C1.generator))


def _check_shape(F: np.ndarray, T: TensorCode) -> None:
    if F.shape != T.shape:
        raise ValueError(f"grid shape {F.shape} does not match code shape (n, m) = {T.shape}")


def tensor_contains(F, T: TensorCode) -> bool:
    F = np.asarray(F)
    _check_shape(F, T)
    return bool(np.all(T.C1.contains_rows(F)) and np.all(T.C2.contains_rows(F.T)))


def expand(X, T: TensorCode) -> np.ndarray:
    """Grid ``M2^T X M1`` for a ``k2 x k1`` coefficient matrix ``X``."""
    X = np.asarray(X, dtype=np.int64)
    if X.shape != (T.C2.dim, T.C1.dim):
        raise ValueError(f"coefficient shape {X.shape} != (k2, k1) = {(T.C2.dim, T.C1.dim)}")
    q = T.q
    if X.size == 0:
        return np.zeros(T.shape, dtype=np.int64)
    left = linalg.matmul(T.C2.generator.T, X, q)
    return linalg.matmul(left, T.C1.generator, q)


def line_nearest(F, code: LinearCode, reference=None) -> tuple[np.ndarray, np.ndarray]:
    """Nearest codeword of every row of ``F`` and the per-row distances.

    With ``reference`` (a grid of proposed codewords) each row is
    certified by membership plus the half-distance test against
    ``code.distance_bound``; any failure raises :class:`RadiusViolation`.
    Without it every row is decoded exhaustively.
    """
    F = np.mod(np.asarray(F, dtype=np.int64), code.q)
    if reference is None:
        out = np.empty_like(F)
        dists = np.empty(F.shape[0], dtype=np.int64)
        for y in range(F.shape[0]):
            out[y], dists[y] = nearest_codeword(code, F[y])
        return out, dists
    ref = np.mod(np.asarray(reference, dtype=np.int64), code.q)
    if ref.shape != F.shape:
        raise ValueError("reference grid shape mismatch")
    if code.distance_bound is None:
        raise RadiusViolation("reference mode needs a certified distance bound")
    if not np.all(code.contains_rows(ref)):
        raise RadiusViolation("a reference line is not a codeword")
    dists = np.count_nonzero(F != ref, axis=1)
    bad = np.flatnonzero(2 * dists >= code.distance_bound)
    if bad.size:
        raise RadiusViolation(f"line {int(bad[0])} is {int(dists[bad[0]])} from its reference; "
                              f"bound {code.distance_bound}")
    return ref, dists


def row_distance(F, C1: LinearCode, reference=None) -> Fraction:
    """Normalized distance of ``F`` to ``C1 (x) F_q^n``."""
    F = np.asarray(F)
    _, d = line_nearest(F, C1, reference)
    return Fraction(int(d.sum()), F.size)


def col_distance(F, C2: LinearCode, reference=None) -> Fraction:
    """Normalized distance of ``F`` to ``F_q^m (x) C2``."""
    F = np.asarray(F)
    ref = None if reference is None else np.asarray(reference).T
    _, d = line_nearest(F.T, C2, ref)
    return Fraction(int(d.sum()), F.size)


def restrict_tensor(T: TensorCode, A: CoordinateSet, B: CoordinateSet) -> TensorCode:
    """``C1|_A (x) C2|_B``; ``A`` indexes columns (x), ``B`` rows (y)."""
    return TensorCode(restrict(T.C1, A), restrict(T.C2, B))


def extend_from_restriction(values, T: TensorCode, A: CoordinateSet, B: CoordinateSet
                            ) -> tuple[np.ndarray, np.ndarray]:
    """A tensor codeword agreeing with ``values`` (shape ``|B| x |A|``) on ``A x B``.

    Solves for the coefficient matrix ``X`` with free variables zeroed.
    Returns ``(grid, X)``.
    """
    q = T.q
    values = np.mod(np.asarray(values, dtype=np.int64), q)
    if A.parent_length != T.C1.length or B.parent_length != T.C2.length:
        raise ValueError("coordinate sets do not match the code lengths")
    if values.shape != (len(B), len(A)):
        raise ValueError(f"values shape {values.shape} != (|B|, |A|) = {(len(B), len(A))}")
    G1a = T.C1.generator[:, list(A.indices)]
    G2b = T.C2.generator[:, list(B.indices)]
    system = np.kron(G2b.T, G1a.T)
    x = linalg.solve(system, values.reshape(-1), q)
    if x is None:
        raise InconsistentExtension("values are not in the restricted tensor code")
    X = x.reshape(T.C2.dim, T.C1.dim)
    return expand(X, T), X


def _as_fraction(eps) -> Fraction:
    if isinstance(eps, float):
        return Fraction(repr(eps))
    return Fraction(eps)


def corrupt(F, eps, model: str, seed: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Change exactly ``floor(eps * m * n)`` cells to different values.

    ``model`` is ``uniform-cells`` (positions uniform without
    replacement), ``row-burst`` (whole rows in random order, the last one
    partial) or ``col-burst``.  Returns the new grid and the changed cells
    as an array of ``(x, y)`` pairs sorted lexicographically.
    """
    F = np.asarray(F)
    eps = _as_fraction(eps)
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    n, m = F.shape
    count = int(eps * m * n)  # floor for non-negative rationals
    rng = np.random.default_rng(seed)
    if model == "uniform-cells":
        flat = rng.choice(m * n, size=count, replace=False)
    elif model == "row-burst":
        rows = rng.permutation(n)
        flat = (rows[:, None] * m + np.arange(m)[None, :]).reshape(-1)[:count]
    elif model == "col-burst":
        cols = rng.permutation(m)
        flat = (np.arange(n)[None, :] * m + cols[:, None]).reshape(-1)[:count]
    else:
        raise ValueError(f"unknown corruption model {model!r}")
    out = np.array(F, dtype=np.int64, copy=True)
    ys, xs = np.divmod(flat.astype(np.int64), m)
    out[ys, xs] = (out[ys, xs] + rng.integers(1, q, size=count)) % q
    cells = np.stack([xs, ys], axis=1) if count else np.zeros((0, 2), dtype=np.int64)
    cells = cells[np.lexsort((cells[:, 1], cells[:, 0]))]
    return out, cells


def write_grid(path, F, q: int, seed: int | None = None, provenance: str = "") -> None:
    """Header line (JSON) followed by one whitespace-separated line per row."""
    F = np.asarray(F)
    header = {"q": int(q), "m": int(F.shape[1]), "n": int(F.shape[0]), "seed": seed,
              "provenance": provenance}
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        np.savetxt(fh, F, fmt="%d")


def read_grid(path) -> tuple[np.ndarray, dict]:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError("missing grid header")
        header = json.loads(first[2:])
        F = np.loadtxt(fh, dtype=np.int64, ndmin=2).reshape(header["n"], header["m"])
    if np.any((F < 0) | (F >= header["q"])):
        raise ValueError("grid values must be canonical residues")
    return F, header


def write_cells(path, cells) -> None:
    Path(path).write_text(json.dumps([[int(x), int(y)] for x, y in np.asarray(cells).reshape(-1, 2)]) + "\n")


def read_cells(path) -> np.ndarray:
    return np.asarray(json.loads(Path(path).read_text()), dtype=np.int64).reshape(-1, 2)
