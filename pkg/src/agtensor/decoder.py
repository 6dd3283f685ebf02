"""Robust decoding of tensor products of AG code sequences.

Given ``R`` whose rows lie in ``C1(l)`` and ``C`` whose columns lie in
``C2(l)`` with ``delta(R, C) = eps``, :func:`decode` constructs a
``Q`` in ``C1(l) (x) C2(l)`` with ``delta(Q, R) + delta(Q, C) <= 2 eps``
by the prune / localize / extend argument, recording every intermediate
set and every bound in a :class:`DecoderTrace`.

All comparisons involving ``sqrt(eps)`` are made exactly: ``eps`` is the
rational ``errors / n**2`` and every inequality is rearranged into an
integer or :class:`~fractions.Fraction` comparison of squares.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import isqrt

import numpy as np

from .codes import CoordinateSet
from .families import AGFamily
from .field import is_prime
from .linalg import kernel
from .tensor import InconsistentExtension, TensorCode, expand, extend_from_restriction, line_nearest

EPS0 = Fraction(1, 100)
C0 = 15
RHO = EPS0 / 2
BAD_LINE_RATIO = Fraction(1, 4)  # eps / gamma**2, identically 1/4 for eps > 0
MAX_SAMPLING_ATTEMPTS = 64


class PreconditionFailure(ValueError):
    def __init__(self, report: "PreconditionReport"):
        super().__init__("preconditions failed: " + ", ".join(report.failures))
        self.report = report


class InvariantViolation(AssertionError):
    """A bound the argument guarantees did not hold."""


class DecodeFailure(RuntimeError):
    """Best-effort decoding could not complete a step."""


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def surd_sign(a, b, eps) -> int:
    """Exact sign of ``a + b * sqrt(eps)`` for rationals ``a, b`` and ``eps >= 0``."""
    a, b, eps = Fraction(a), Fraction(b), Fraction(eps)
    if b == 0 or eps == 0:
        return _sign(a)
    if a >= 0 and b > 0:
        return 1
    if a <= 0 and b < 0:
        return -1
    diff = a * a - b * b * eps
    return _sign(diff) if a > 0 else -_sign(diff)


def floor_sqrt_times(eps: Fraction, L: int) -> int:
    """``floor(sqrt(eps) * L)``, exactly."""
    return isqrt(int(Fraction(eps) * L * L))


@dataclass(frozen=True)
class Constants:
    eps: Fraction
    ell: int
    g: int
    L: int
    d: int
    eps0: Fraction = EPS0
    c0: int = C0
    rho: Fraction = RHO

    # gamma = 2 sqrt(eps), gamma' = 4 sqrt(eps); kept symbolic
    @property
    def gamma(self) -> float:
        return 2 * float(self.eps) ** 0.5

    @property
    def gamma_prime(self) -> float:
        return 4 * float(self.eps) ** 0.5

    @property
    def gamma_sq(self) -> Fraction:
        return 4 * self.eps

    @property
    def gamma_prime_sq(self) -> Fraction:
        return 16 * self.eps

    def to_dict(self) -> dict:
        return {"eps": str(self.eps), "ell": self.ell, "g": self.g, "L": self.L, "d": self.d,
                "gamma_sq": str(self.gamma_sq), "gamma_prime_sq": str(self.gamma_prime_sq),
                "eps0": str(self.eps0), "c0": self.c0, "rho": str(self.rho),
                "bad_line_ratio": str(BAD_LINE_RATIO)}


def derive_constants(eps, ell: int, g: int) -> Constants:
    eps = Fraction(eps) if not isinstance(eps, float) else Fraction(repr(eps))
    if eps < 0:
        raise ValueError("eps must be non-negative")
    L = 2 * (ell + g)
    return Constants(eps, ell, g, L, floor_sqrt_times(eps, L) + g + 2)


@dataclass(frozen=True)
class Condition:
    name: str
    holds: bool
    detail: str


@dataclass
class PreconditionReport:
    conditions: list[Condition]

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.conditions)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.conditions if not c.holds]

    def __getitem__(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "conditions": [
            {"name": c.name, "holds": c.holds, "detail": c.detail} for c in self.conditions]}

    def table(self) -> str:
        width = max(len(c.name) for c in self.conditions)
        return "\n".join(f"{c.name:<{width}}  {'true ' if c.holds else 'FALSE'}  {c.detail}"
                         for c in self.conditions)


def check_preconditions(n: int, ell: int, g: int, q: int, eps) -> PreconditionReport:
    """Decoding hypotheses plus the five constant inequalities, evaluated exactly."""
    k = derive_constants(eps, ell, g)
    e, L, d = k.eps, k.L, k.d
    conds = [
        Condition("q_prime", is_prime(q), f"q = {q}"),
        Condition("eps_range", 0 < e < EPS0, f"0 < eps = {e} < eps0 = {EPS0}"),
        Condition("ell_gt_max_c0_g", ell > max(C0, g), f"l = {ell} > max({C0}, {g})"),
        Condition("n_gt_c0_ell_g_sq", n > C0 * (ell + g) ** 2,
                  f"n = {n} > {C0}*({ell}+{g})^2 = {C0 * (ell + g) ** 2}"),
    ]
    # ineq1: gamma < gamma'(1 - gamma')  <=>  2s - 16 eps > 0
    conds.append(Condition("ineq1", surd_sign(-16 * e, 2, e) > 0,
                           f"2*sqrt(eps) < 4*sqrt(eps)*(1 - 4*sqrt(eps)) at eps = {e}"))
    # ineq2: (1 - eps/gamma^2) L > d + l
    lhs2 = (1 - BAD_LINE_RATIO) * L
    conds.append(Condition("ineq2", lhs2 > d + ell, f"(1 - 1/4)*{L} = {lhs2} > d + l = {d + ell}"))
    # ineq3: n(1 - gamma - gamma') - dL > L  <=>  (n - dL - L) - 6n s > 0
    conds.append(Condition("ineq3", surd_sign(n - d * L - L, -6 * n, e) > 0,
                           f"{n}*(1 - 6*sqrt(eps)) - {d}*{L} > {L}"))
    # ineq4: (2s + eps) n/(n - l) < 3s  <=>  s(n - 3l) - eps n > 0, given n > l
    conds.append(Condition("ineq4", n > ell and surd_sign(-e * n, n - 3 * ell, e) > 0,
                           f"(2*sqrt(eps) + eps)*{n}/{n - ell} < 3*sqrt(eps)"))
    # ineq5: (n - l - 3sn)/n > 1/2  <=>  (n/2 - l) - 3n s > 0
    conds.append(Condition("ineq5", surd_sign(Fraction(n, 2) - ell, -3 * n, e) > 0,
                           f"({n} - {ell} - 3*sqrt(eps)*{n})/{n} > 1/2"))
    return PreconditionReport(conds)


def grid_digest(F) -> str:
    return hashlib.sha256(np.ascontiguousarray(np.asarray(F, dtype="<i8")).tobytes()).hexdigest()


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _ids(mask_or_idx) -> list[int]:
    arr = np.asarray(mask_or_idx)
    if arr.dtype == bool:
        arr = np.flatnonzero(arr)
    return sorted(int(i) for i in arr)


@dataclass
class DecoderTrace:
    """Every intermediate object of one :func:`decode` call.

    Index sets are sorted lists of original row (``y``) or column
    (``x``) indices.  Grids are never permuted; reorderings exist only as
    these index lists.
    """

    q: int
    n: int
    ell: int
    g: int
    mode: str
    seed: int
    total_errors: int
    eps: Fraction
    constants: Constants | None = None
    preconditions: PreconditionReport | None = None
    trivial: bool = False
    digests: dict = dc_field(default_factory=dict)
    pruned_rows: list[int] = dc_field(default_factory=list)
    pruned_cols: list[int] = dc_field(default_factory=list)
    post_prune_error_fraction: Fraction | None = None
    M: dict = dc_field(default_factory=dict)
    localizer: dict = dc_field(default_factory=dict)
    bad_rows: list[int] = dc_field(default_factory=list)
    bad_cols: list[int] = dc_field(default_factory=list)
    good_counts: tuple[int, int] = (0, 0)
    M_prime: dict = dc_field(default_factory=dict)
    Q_coefficients: list | None = None
    cleanup_rows: list[int] = dc_field(default_factory=list)
    accounting: dict = dc_field(default_factory=dict)
    dist_QR: int | None = None
    dist_QC: int | None = None
    checks: list[tuple[str, bool]] = dc_field(default_factory=list)
    failure: str | None = None

    @property
    def all_checks_passed(self) -> bool:
        return self.failure is None and all(ok for _, ok in self.checks)

    @property
    def sum_fraction(self) -> Fraction | None:
        if self.dist_QR is None:
            return None
        return Fraction(self.dist_QR + self.dist_QC, self.n * self.n)

    @property
    def guarantee_holds(self) -> bool:
        """``delta(Q,R) + delta(Q,C) <= 2 eps`` and every check passed."""
        s = self.sum_fraction
        return s is not None and s <= 2 * self.eps and self.all_checks_passed

    @property
    def certified(self) -> bool:
        return self.guarantee_holds and (self.trivial or self.mode == "certified")

    def to_dict(self) -> dict:
        return {
            "params": {"q": self.q, "n": self.n, "ell": self.ell, "g": self.g,
                       "mode": self.mode, "seed": self.seed},
            "eps": _frac(self.eps), "total_errors": self.total_errors, "trivial": self.trivial,
            "constants": self.constants.to_dict() if self.constants else None,
            "preconditions": self.preconditions.to_dict() if self.preconditions else None,
            "digests": dict(sorted(self.digests.items())),
            "pruned_rows": self.pruned_rows, "pruned_cols": self.pruned_cols,
            "post_prune_error_fraction": (_frac(self.post_prune_error_fraction)
                                          if self.post_prune_error_fraction is not None else None),
            "M": self.M, "localizer": self.localizer,
            "bad_rows": self.bad_rows, "bad_cols": self.bad_cols,
            "good_counts": list(self.good_counts), "M_prime": self.M_prime,
            "Q_coefficients": self.Q_coefficients, "cleanup_rows": self.cleanup_rows,
            "accounting": self.accounting,
            "dist_QR": self.dist_QR, "dist_QC": self.dist_QC,
            "sum": _frac(self.sum_fraction) if self.sum_fraction is not None else None,
            "checks": [{"name": name, "passed": ok} for name, ok in self.checks],
            "failure": self.failure,
            "all_checks_passed": self.all_checks_passed,
            "guarantee_holds": self.guarantee_holds,
            "certified": self.certified,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"


@dataclass
class DecodeResult:
    Q: np.ndarray
    coefficients: np.ndarray
    trace: DecoderTrace


class _Pipeline:
    """State shared by the decoding steps."""

    def __init__(self, R, C, fam1: AGFamily, fam2: AGFamily, ell: int, mode: str, seed: int):
        if mode not in ("certified", "best-effort"):
            raise ValueError(f"mode must be certified or best-effort, got {mode!r}")
        if fam1.field != fam2.field or fam1.n != fam2.n:
            raise ValueError("families must share field and length")
        self.q, self.n = fam1.q, fam1.n
        R = np.asarray(R, dtype=np.int64)
        C = np.asarray(C, dtype=np.int64)
        if R.shape != (self.n, self.n) or C.shape != (self.n, self.n):
            raise ValueError(f"R and C must be square {self.n} x {self.n} grids")
        self.R, self.C = R, C
        self.fam1, self.fam2, self.ell = fam1, fam2, ell
        self.g = max(fam1.genus, fam2.genus)
        self.mode = mode
        self.rng = np.random.default_rng(seed)
        self.D = R != C
        total = int(self.D.sum())
        self.T = total
        self.trace = DecoderTrace(self.q, self.n, ell, self.g, mode, seed, total,
                                  Fraction(total, self.n * self.n))

    def check(self, name: str, ok: bool) -> bool:
        ok = bool(ok)
        self.trace.checks.append((name, ok))
        if not ok and self.mode == "certified":
            raise InvariantViolation(f"check failed: {name}")
        return ok

    def tensor(self, level: int) -> TensorCode:
        return TensorCode(self.fam1.member(level), self.fam2.member(level))


def decode(R, C, fam1: AGFamily, fam2: AGFamily, ell: int, *, mode: str = "certified",
           seed: int = 0) -> DecodeResult:
    """Construct ``Q`` from ``(R, C)``; see the module docstring.

    ``certified`` mode refuses inputs outside the theorem's parameter
    region and raises :class:`InvariantViolation` on any failed bound.
    ``best-effort`` mode runs anyway, records failed bounds in the trace
    and raises :class:`DecodeFailure` only when a step cannot be carried
    out at all.
    """
    P = _Pipeline(R, C, fam1, fam2, ell, mode, seed)
    tr = P.trace
    tr.digests.update(R=grid_digest(P.R), C=grid_digest(P.C))
    code1, code2 = fam1.member(ell), fam2.member(ell)
    inputs_ok = bool(np.all(code1.contains_rows(P.R)) and np.all(code2.contains_rows(P.C.T)))
    if not inputs_ok and mode == "certified":
        raise ValueError("rows of R must lie in C1(l) and columns of C in C2(l)")
    P.check("input_rows_R_in_C1_cols_C_in_C2", inputs_ok)
    tr.constants = k = derive_constants(tr.eps, ell, P.g)
    if P.T == 0:
        return _decode_trivial(P)
    tr.preconditions = check_preconditions(P.n, ell, P.g, P.q, tr.eps)
    if mode == "certified" and not tr.preconditions.ok:
        raise PreconditionFailure(tr.preconditions)
    try:
        survivors = _prune(P, k)
        rows_M, cols_M = _find_low_error_submatrix(P, k, *survivors)
        E, N = _find_error_localizer(P, k, rows_M, cols_M)
        good_r, good_c = _classify_good(P, E, N, rows_M, cols_M)
        del N
        rows_Mp, cols_Mp = _find_nonvanishing_submatrix(P, k, E, good_r, good_c)
        del E
        Q, X = _extract_Q(P, rows_Mp, cols_Mp)
        _cleanup_and_account(P, k, Q, cols_Mp)
    except (InconsistentExtension, DecodeFailure, InvariantViolation) as exc:
        if mode == "certified":
            if isinstance(exc, InvariantViolation):
                raise
            raise InvariantViolation(str(exc)) from exc
        tr.failure = str(exc)
        raise DecodeFailure(str(exc)) from exc
    if mode == "certified" and not tr.guarantee_holds:
        raise InvariantViolation("delta(Q,R) + delta(Q,C) exceeds 2 eps")
    return DecodeResult(Q, X, tr)


def _decode_trivial(P: _Pipeline) -> DecodeResult:
    # R == C: rows in C1(l), columns in C2(l), so R is already a tensor codeword.
    tr = P.trace
    tr.trivial = True
    size = min(P.n, max(tr.constants.L, P.ell + 1))
    idx = list(range(size))
    T = P.tensor(P.ell)
    A = B = CoordinateSet(P.n, tuple(idx))
    try:
        Q, X = extend_from_restriction(P.R[np.ix_(idx, idx)], T, A, B)
    except InconsistentExtension as exc:
        if P.mode == "certified":
            raise InvariantViolation(str(exc)) from exc
        tr.failure = str(exc)
        raise DecodeFailure(str(exc)) from exc
    P.check("Q_equals_R", np.array_equal(Q, P.R))
    tr.M_prime = {"rows": idx, "cols": idx}
    tr.Q_coefficients = X.tolist()
    tr.digests["Q"] = grid_digest(Q)
    tr.dist_QR = int(np.count_nonzero(Q != P.R))
    tr.dist_QC = int(np.count_nonzero(Q != P.C))
    P.check("guarantee_sum_le_2eps", tr.dist_QR + tr.dist_QC == 0)
    return DecodeResult(Q, X, tr)


def prune(R, C, k: Constants) -> tuple[list[int], list[int]]:
    """Rows and columns whose error fraction exceeds ``eps / gamma'``."""
    D = np.asarray(R) != np.asarray(C)
    T = int(D.sum())
    # e/n > sqrt(eps)/4  <=>  16 e^2 > eps n^2 = T
    row_err = D.sum(axis=1).astype(np.int64)
    col_err = D.sum(axis=0).astype(np.int64)
    return _ids(16 * row_err**2 > T), _ids(16 * col_err**2 > T)


def _prune(P: _Pipeline, k: Constants):
    tr, n, T = P.trace, P.n, P.T
    rows1, cols1 = prune(P.R, P.C, k)
    tr.pruned_rows, tr.pruned_cols = rows1, cols1
    # |R1| < gamma' n  <=>  |R1|^2 < 16 eps n^2 = 16 T
    P.check("pruned_rows_lt_gamma_prime_n", len(rows1) ** 2 < 16 * T)
    P.check("pruned_cols_lt_gamma_prime_n", len(cols1) ** 2 < 16 * T)
    keep_r = np.ones(n, dtype=bool)
    keep_r[rows1] = False
    keep_c = np.ones(n, dtype=bool)
    keep_c[cols1] = False
    surv_r, surv_c = np.flatnonzero(keep_r), np.flatnonzero(keep_c)
    remaining = int(P.D[np.ix_(surv_r, surv_c)].sum()) if surv_r.size and surv_c.size else 0
    if surv_r.size and surv_c.size:
        tr.post_prune_error_fraction = Fraction(remaining, int(surv_r.size * surv_c.size))
    return surv_r, surv_c


def find_low_error_submatrix(D: np.ndarray, surv_r, surv_c, L: int, cap: int,
                             rng: np.random.Generator, attempts: int = MAX_SAMPLING_ATTEMPTS):
    """An ``L x L`` index pair among survivors with at most ``cap`` errors.

    Seeded random sampling first, then the greedy fallback (least-error
    rows, then least-error columns on those rows).  Returns
    ``(rows, cols, errors, method, attempts_used)`` or ``None``.
    """
    surv_r, surv_c = np.asarray(surv_r), np.asarray(surv_c)
    if surv_r.size < L or surv_c.size < L:
        return None
    for attempt in range(1, attempts + 1):
        rows = np.sort(rng.choice(surv_r, size=L, replace=False))
        cols = np.sort(rng.choice(surv_c, size=L, replace=False))
        errs = int(D[np.ix_(rows, cols)].sum())
        if errs <= cap:
            return rows, cols, errs, "random", attempt
    sub = D[np.ix_(surv_r, surv_c)]
    rows = np.sort(surv_r[np.argsort(sub.sum(axis=1), kind="stable")[:L]])
    sub_rows = D[np.ix_(rows, surv_c)]
    cols = np.sort(surv_c[np.argsort(sub_rows.sum(axis=0), kind="stable")[:L]])
    errs = int(D[np.ix_(rows, cols)].sum())
    if errs <= cap:
        return rows, cols, errs, "greedy", attempts
    return None


def _find_low_error_submatrix(P: _Pipeline, k: Constants, surv_r, surv_c):
    tr, L = P.trace, k.L
    cap = int(Fraction(L * L * P.T, P.n * P.n))  # floor(L^2 eps)
    found = find_low_error_submatrix(P.D, surv_r, surv_c, L, cap, P.rng)
    if found is None:
        P.check("low_error_submatrix_found", False)
        raise DecodeFailure(f"no {L}x{L} submatrix with <= {cap} errors among survivors")
    rows, cols, errs, method, attempts = found
    P.check("low_error_submatrix_found", True)
    P.check("M_errors_le_floor_L2_eps", errs <= cap)
    # kernel exists: errors <= floor(eps L^2) < (d - g)^2
    P.check("M_errors_lt_localizer_dim", errs < (k.d - P.g) ** 2)
    tr.M = {"rows": _ids(rows), "cols": _ids(cols), "errors": errs, "cap": cap,
            "method": method, "attempts": attempts}
    return rows, cols


def find_error_localizer(R, C, rows_M, cols_M, fam1: AGFamily, fam2: AGFamily, d: int, ell: int):
    """Nonzero ``E`` in ``C1(d) (x) C2(d)`` vanishing on the errors of ``M``,
    and ``N`` in ``C1(d+l) (x) C2(d+l)`` extending ``E*R`` off ``M``.

    Returns ``(E, X_E, N, X_N)``; ``X_E`` is the first kernel basis vector.
    """
    q, n = fam1.q, fam1.n
    R = np.asarray(R)
    D = R != np.asarray(C)
    G1, G2 = fam1.member(d).generator, fam2.member(d).generator
    k1, k2 = G1.shape[0], G2.shape[0]
    sub = D[np.ix_(rows_M, cols_M)]
    ey, ex = np.nonzero(sub)
    ys, xs = np.asarray(rows_M)[ey], np.asarray(cols_M)[ex]
    constraints = (G2[:, ys].T[:, :, None] * G1[:, xs].T[:, None, :]).reshape(len(ys), k2 * k1) % q
    K = kernel(constraints.reshape(len(ys), k2 * k1), q)
    if K.shape[0] == 0:
        raise InvariantViolation("constraint map on the localizer space has trivial kernel")
    X_E = K[0].reshape(k2, k1)
    T_d = TensorCode(fam1.member(d), fam2.member(d))
    E = expand(X_E, T_d)
    T_dl = TensorCode(fam1.member(d + ell), fam2.member(d + ell))
    values = (E[np.ix_(rows_M, cols_M)] * R[np.ix_(rows_M, cols_M)]) % q
    N, X_N = extend_from_restriction(values, T_dl, CoordinateSet.of(n, cols_M), CoordinateSet.of(n, rows_M))
    return E, X_E, N, X_N


def _find_error_localizer(P: _Pipeline, k: Constants, rows_M, cols_M):
    tr, q = P.trace, P.q
    if k.d + P.ell > P.n:
        raise DecodeFailure(f"d + l = {k.d + P.ell} exceeds n = {P.n}")
    E, X_E, N, X_N = find_error_localizer(P.R, P.C, rows_M, cols_M, P.fam1, P.fam2, k.d, P.ell)
    ix = np.ix_(rows_M, cols_M)
    E_M, R_M, C_M, N_M = E[ix], P.R[ix], P.C[ix], N[ix]
    P.check("E_nonzero", bool(np.any(E)))
    P.check("E_vanishes_on_M_errors", not np.any(E_M[P.D[ix]]))
    P.check("ER_eq_N_on_M", np.array_equal(E_M * R_M % q, N_M))
    P.check("EC_eq_N_on_M", np.array_equal(E_M * C_M % q, N_M))
    zeros_row = int(max(np.count_nonzero(E_M == 0, axis=1).max(), 0))
    tr.localizer = {"X_E": X_E.tolist(), "X_N": X_N.tolist(), "E_zeros_in_M": int(np.count_nonzero(E_M == 0)),
                    "max_zeros_per_M_row": zeros_row}
    tr.digests.update(E=grid_digest(E), N=grid_digest(N))
    return E, N


def classify_good(R, C, rows_M, cols_M, pruned_rows=(), pruned_cols=()):
    """Bad and good lines relative to ``M``.

    A surviving row is bad when more than ``eps / gamma^2 = 1/4`` of its
    cells in ``M``'s columns disagree; columns likewise against ``M``'s
    rows.  Returns ``(bad_rows, bad_cols, good_rows, good_cols)`` as
    sorted index arrays.
    """
    D = np.asarray(R) != np.asarray(C)
    in_r1 = np.zeros(D.shape[0], dtype=bool)
    in_r1[list(pruned_rows)] = True
    in_c1 = np.zeros(D.shape[1], dtype=bool)
    in_c1[list(pruned_cols)] = True
    row_err = D[:, cols_M].sum(axis=1)
    col_err = D[rows_M, :].sum(axis=0)
    bad_r = (4 * row_err > len(cols_M)) & ~in_r1
    bad_c = (4 * col_err > len(rows_M)) & ~in_c1
    return (np.flatnonzero(bad_r), np.flatnonzero(bad_c),
            np.flatnonzero(~(in_r1 | bad_r)), np.flatnonzero(~(in_c1 | bad_c)))


def _classify_good(P: _Pipeline, E, N, rows_M, cols_M):
    tr, n, q = P.trace, P.n, P.q
    bad_r, bad_c, good_r, good_c = classify_good(P.R, P.C, rows_M, cols_M, tr.pruned_rows, tr.pruned_cols)
    tr.bad_rows, tr.bad_cols = _ids(bad_r), _ids(bad_c)
    # |R2| <= gamma (n - |R1|)  <=>  |R2|^2 <= 4 eps (n - |R1|)^2
    eps = tr.eps
    P.check("bad_rows_le_gamma_fraction", len(tr.bad_rows) ** 2 <= 4 * eps * (n - len(tr.pruned_rows)) ** 2)
    P.check("bad_cols_le_gamma_fraction", len(tr.bad_cols) ** 2 <= 4 * eps * (n - len(tr.pruned_cols)) ** 2)
    tr.good_counts = (int(good_r.size), int(good_c.size))
    ER_bad = (E * P.R % q) != N
    P.check("ER_eq_N_on_good_rows", not np.any(ER_bad[good_r]))
    on_G_R = not np.any(ER_bad[np.ix_(good_r, good_c)])
    del ER_bad
    EC_bad = (E * P.C % q) != N
    P.check("EC_eq_N_on_good_cols", not np.any(EC_bad[:, good_c]))
    on_G_C = not np.any(EC_bad[np.ix_(good_r, good_c)])
    del EC_bad
    P.check("identity_on_G", on_G_R and on_G_C)
    return good_r, good_c


def find_nonvanishing_submatrix(E, good_r, good_c, L: int):
    """``L`` good rows and ``L`` good columns on which ``E`` never vanishes.

    Returns ``(rows, cols, excluded_rows)`` or ``None`` when the recipe fails.
    """
    E_gc = E[:, good_c]
    nz_rows = [y for y in good_r if np.any(E_gc[y])]
    if not nz_rows:
        return None
    pivot = nz_rows[0]
    cols = np.asarray(good_c)[np.flatnonzero(E[pivot, good_c])][:L]
    if cols.size < L:
        return None
    all_nonzero = np.all(E[np.ix_(good_r, cols)] != 0, axis=1)
    qualifying = np.asarray(good_r)[all_nonzero]
    excluded = int(len(good_r) - qualifying.size)
    if qualifying.size < L:
        return None
    return qualifying[:L], cols, excluded


def _find_nonvanishing_submatrix(P: _Pipeline, k: Constants, E, good_r, good_c):
    tr, L = P.trace, k.L
    found = find_nonvanishing_submatrix(E, good_r, good_c, L)
    if found is None:
        P.check("nonvanishing_submatrix_found", False)
        raise DecodeFailure("could not find an LxL block of G on which E is nonzero")
    rows, cols, excluded = found
    P.check("nonvanishing_submatrix_found", True)
    P.check("excluded_rows_le_dL", excluded <= k.d * L)
    P.check("E_nonzero_on_M_prime", bool(np.all(E[np.ix_(rows, cols)] != 0)))
    P.check("R_eq_C_on_M_prime", not np.any(P.D[np.ix_(rows, cols)]))
    tr.M_prime = {"rows": _ids(rows), "cols": _ids(cols), "excluded_rows": excluded}
    return rows, cols


def extract_Q(R, rows, cols, fam1: AGFamily, fam2: AGFamily, ell: int):
    """Extend ``R`` on ``rows x cols`` to ``(Q, X)`` with ``Q`` in ``C1(l) (x) C2(l)``.

    Raises :class:`InconsistentExtension` if the block is not a restricted
    tensor codeword.
    """
    n = fam1.n
    T = TensorCode(fam1.member(ell), fam2.member(ell))
    values = np.asarray(R)[np.ix_(rows, cols)]
    return extend_from_restriction(values, T, CoordinateSet.of(n, cols), CoordinateSet.of(n, rows))


def _extract_Q(P: _Pipeline, rows, cols):
    values = P.R[np.ix_(rows, cols)]
    Q, X = extract_Q(P.R, rows, cols, P.fam1, P.fam2, P.ell)
    P.check("Q_agrees_on_M_prime", np.array_equal(Q[np.ix_(rows, cols)], values))
    P.trace.Q_coefficients = X.tolist()
    P.trace.digests["Q"] = grid_digest(Q)
    return Q, X


def _cleanup_and_account(P: _Pipeline, k: Constants, Q, cols_Mp):
    tr, n, T = P.trace, P.n, P.T
    L = len(cols_Mp)
    row_err = P.D[:, cols_Mp].sum(axis=1)
    r3 = 4 * row_err > L
    tr.cleanup_rows = _ids(r3)
    # |R3| < gamma n  <=>  |R3|^2 < 4 eps n^2 = 4T
    P.check("cleanup_rows_lt_gamma_n", int(r3.sum()) ** 2 < 4 * T)
    P.check("Q_cols_eq_C_on_M_prime_cols", np.array_equal(Q[:, cols_Mp], P.C[:, cols_Mp]))
    QR = Q != P.R
    P.check("Q_eq_R_off_cleanup_rows", not np.any(QR[~r3]))
    dist_QR = int(QR.sum())
    rows_RQ = np.any(QR, axis=1)
    del QR
    QC = Q != P.C
    dist_QC = int(QC.sum())
    cols_CQ = np.any(QC, axis=0)
    del QC
    tr.dist_QR, tr.dist_QC = dist_QR, dist_QC
    # delta(Q,R) <= 2 sqrt(eps)  <=>  dist^2 <= 4 eps n^4 = 4 T n^2
    P.check("delta_QR_le_2sqrt_eps", dist_QR**2 <= 4 * T * n * n)
    nr, nc = int(rows_RQ.sum()), int(cols_CQ.sum())
    P.check("rows_R_ne_Q_lt_3sqrt_eps", nr * nr < 9 * T)
    P.check("cols_C_ne_Q_lt_3sqrt_eps", nc * nc < 9 * T)
    # Region bookkeeping: "R side" rows (R != Q somewhere) and "C side" columns.
    # |A21 u A22| = nr * n, |A12 u A22| = nc * n.
    dist_A21 = int(P.D[np.ix_(rows_RQ, ~cols_CQ)].sum()) if nr else 0
    dist_A12 = int(P.D[np.ix_(~rows_RQ, cols_CQ)].sum()) if nc else 0
    P.check("A21_majority", nr == 0 or 2 * dist_A21 > nr * n)
    P.check("A12_majority", nc == 0 or 2 * dist_A12 > nc * n)
    P.check("A12_A21_le_total", dist_A12 + dist_A21 <= T)
    P.check("region_sizes_lt_2eps_n2", nr * n + nc * n < 2 * T)
    P.check("guarantee_sum_le_2eps", dist_QR + dist_QC <= 2 * T)
    tr.accounting = {"rows_R_ne_Q": nr, "cols_C_ne_Q": nc, "size_A21_A22": nr * n,
                     "size_A12_A22": nc * n, "dist_A21": dist_A21, "dist_A12": dist_A12,
                     "two_eps_n2": 2 * T}


# --- robustness --------------------------------------------------------------

@dataclass
class RobustnessReport:
    q: int
    n: int
    ell: int
    g: int
    eps_rc: Fraction
    a: Fraction
    b: Fraction
    branch: str  # "trivial" (eps >= eps0) or "decode"
    delta_FQ: Fraction  # upper bound on delta(F, C1(l) (x) C2(l))
    ratio: Fraction | None  # certified lower bound on the robustness ratio; None = unbounded
    theorem_applicable: bool
    source: str
    trace: DecoderTrace | None = None
    Q: np.ndarray | None = dc_field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.ratio is None or self.ratio >= RHO

    def to_dict(self) -> dict:
        return {"q": self.q, "n": self.n, "ell": self.ell, "g": self.g,
                "eps_rc": _frac(self.eps_rc), "a": _frac(self.a), "b": _frac(self.b),
                "branch": self.branch, "delta_FQ": _frac(self.delta_FQ),
                "ratio": None if self.ratio is None else _frac(self.ratio),
                "rho": _frac(RHO), "passed": self.passed,
                "theorem_applicable": self.theorem_applicable, "source": self.source}


def robust_test(F, fam1: AGFamily, fam2: AGFamily, ell: int, *, reference=None, seed: int = 0,
                decoded: DecodeResult | None = None) -> RobustnessReport:
    """Certify ``rho * delta(F, C1(l) (x) C2(l)) <= (a + b) / 2`` for one grid.

    ``R`` and ``C`` (the nearest row- and column-codeword grids) are found
    exhaustively, or from ``reference = (R_ref, C_ref)`` certified line by
    line through the half-distance bound.  When ``delta(R, C) < eps0`` a
    ``Q`` is decoded (certified mode inside the theorem's region,
    best-effort outside) and ``delta(F, Q)`` is the upper bound used.
    ``decoded`` reuses an earlier :func:`decode` of the same ``(R, C)``.
    """
    F = np.mod(np.asarray(F, dtype=np.int64), fam1.q)
    n = fam1.n
    C1, C2 = fam1.member(ell), fam2.member(ell)
    ref_R, ref_C = (None, None) if reference is None else reference
    R, dR = line_nearest(F, C1, ref_R)
    Ct, dC = line_nearest(F.T, C2, None if ref_C is None else np.asarray(ref_C).T)
    Cg = np.ascontiguousarray(Ct.T)
    size = n * n
    a, b = Fraction(int(dR.sum()), size), Fraction(int(dC.sum()), size)
    eps_rc = Fraction(int(np.count_nonzero(R != Cg)), size)
    source = "exhaustive" if reference is None else "reference (planted, half-distance certified)"
    g = max(fam1.genus, fam2.genus)
    applicable = check_preconditions(n, ell, g, fam1.q, eps_rc).ok or eps_rc == 0
    if eps_rc >= EPS0:
        # delta(F, tensor) <= 1 and a + b >= delta(R, C) >= eps0
        ratio = (a + b) / 2
        return RobustnessReport(fam1.q, n, ell, g, eps_rc, a, b, "trivial", Fraction(1), ratio, True, source)
    if decoded is not None and decoded.trace.digests.get("R") == grid_digest(R) \
            and decoded.trace.digests.get("C") == grid_digest(Cg):
        result = decoded
    else:
        try:
            result = decode(R, Cg, fam1, fam2, ell, mode="certified" if applicable else "best-effort",
                            seed=seed)
        except DecodeFailure:
            result = None
    if result is None:
        ratio = (a + b) / 2 if a + b else None
        return RobustnessReport(fam1.q, n, ell, g, eps_rc, a, b, "decode", Fraction(1), ratio,
                                applicable, source)
    delta_FQ = Fraction(int(np.count_nonzero(F != result.Q)), size)
    ratio = None if delta_FQ == 0 else ((a + b) / 2) / delta_FQ
    return RobustnessReport(fam1.q, n, ell, g, eps_rc, a, b, "decode", delta_FQ, ratio, applicable,
                            source, result.trace, result.Q)
