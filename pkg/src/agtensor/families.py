"""Algebraic-geometry code sequences.

An :class:`AGFamily` maps every ``0 <= l <= n`` to a length-``n`` code
``C(l)`` with ``dim C(l) >= l - g``, ``dist C(l) >= n - l`` and
``C(l) * C(m)`` contained in ``C(l + m)``.  Two instantiations are
provided: Reed-Solomon (genus 0) and evaluation codes on an elliptic
curve (genus 1, functions with poles only at infinity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from . import kvtext
from .codes import LinearCode, min_distance, star_product
from .field import PrimeField, is_prime


class AGFamily:
    """Base class; subclasses supply the spanning rows of ``C(l)``."""

    kind = "abstract"

    def __init__(self, field: PrimeField, genus: int, n: int):
        if not 0 <= genus <= n:
            raise ValueError("genus must satisfy 0 <= g <= n")
        self.field = field
        self.genus = genus
        self.n = n
        self._member = lru_cache(maxsize=None)(self._build_member)

    @property
    def q(self) -> int:
        return self.field.modulus

    @property
    def g(self) -> int:
        return self.genus

    def spanning_rows(self, ell: int) -> np.ndarray:
        raise NotImplementedError

    def certificate(self, ell: int) -> str:
        raise NotImplementedError

    def member(self, ell: int) -> LinearCode:
        if not 0 <= ell <= self.n:
            raise ValueError(f"l must lie in [0, {self.n}], got {ell}")
        return self._member(ell)

    def _build_member(self, ell: int) -> LinearCode:
        return LinearCode.from_rows(
            self.field, self.spanning_rows(ell), self.n,
            distance_bound=max(self.n - ell, 1), certificate=self.certificate(ell),
            name=f"{self.kind}({ell})")

    def __repr__(self) -> str:
        return f"<{type(self).__name__} q={self.q} n={self.n} g={self.genus}>"


def _power_rows(values: np.ndarray, top: int, q: int) -> np.ndarray:
    """Rows ``values**i`` for ``i = 0..top``."""
    rows = np.empty((top + 1, values.size), dtype=np.int64)
    rows[0] = 1
    for i in range(1, top + 1):
        rows[i] = rows[i - 1] * values % q
    return rows


class RSFamily(AGFamily):
    """``C(l)`` = evaluations of polynomials of degree <= l on ``points``."""

    kind = "rs"

    def __init__(self, field: PrimeField, points):
        pts = np.asarray([int(p) for p in points], dtype=np.int64)
        if pts.size == 0:
            raise ValueError("need at least one evaluation point")
        if np.any((pts < 0) | (pts >= field.modulus)):
            raise ValueError("evaluation points must be canonical field elements")
        if np.unique(pts).size != pts.size:
            raise ValueError("duplicate evaluation points")
        super().__init__(field, 0, int(pts.size))
        self.points = pts

    def spanning_rows(self, ell: int) -> np.ndarray:
        # degrees beyond n - 1 add nothing on n distinct points
        return _power_rows(self.points, min(ell, self.n - 1), self.q)

    def certificate(self, ell: int) -> str:
        return f"nonzero polynomial of degree <= {ell} has at most {ell} roots"


def rs_family(q: int, points=None) -> RSFamily:
    field = PrimeField(q)
    return RSFamily(field, range(q) if points is None else points)


# --- elliptic curves -------------------------------------------------------

def _check_curve(p: int, a: int, b: int) -> None:
    if not is_prime(p) or p <= 3:
        raise ValueError(f"p must be a prime > 3, got {p}")
    if (4 * a**3 + 27 * b**2) % p == 0:
        raise ValueError(f"singular curve: 4a^3 + 27b^2 = 0 mod {p} for a={a}, b={b}")


def _square_counts(p: int) -> np.ndarray:
    ys = np.arange(p, dtype=np.int64)
    return np.bincount(ys * ys % p, minlength=p)


def count_points(p: int, a: int, b: int) -> int:
    """Number of affine points on ``y^2 = x^3 + a x + b`` over GF(p)."""
    _check_curve(p, a, b)
    xs = np.arange(p, dtype=np.int64)
    rhs = (xs * xs % p * xs + a * xs + b) % p
    count = int(_square_counts(p)[rhs].sum())
    assert abs(count + 1 - (p + 1)) <= 2 * math.isqrt(p) + 2, "Hasse bound violated"
    return count


def find_curve(p: int, min_affine_points: int) -> tuple[int, int] | None:
    """First nonsingular ``(a, b)`` in lexicographic order from ``(0, 1)``
    whose affine point count reaches the threshold."""
    if not is_prime(p) or p <= 3:
        raise ValueError(f"p must be a prime > 3, got {p}")
    xs = np.arange(p, dtype=np.int64)
    x3 = xs * xs % p * xs % p
    sq = _square_counts(p)
    for a in range(p):
        ax = a * xs
        for b in range(1 if a == 0 else 0, p):
            if (4 * a**3 + 27 * b**2) % p == 0:
                continue
            if int(sq[(x3 + ax + b) % p].sum()) >= min_affine_points:
                return a, b
    return None


@dataclass(frozen=True)
class EllipticCurve:
    p: int
    a: int
    b: int
    points: tuple[tuple[int, int], ...] = dc_field(default=(), repr=False)

    @classmethod
    def create(cls, p: int, a: int, b: int) -> "EllipticCurve":
        a, b = a % p, b % p
        _check_curve(p, a, b)
        roots: dict[int, list[int]] = {}
        for y in range(p):
            roots.setdefault(y * y % p, []).append(y)
        pts = []
        for x in range(p):
            for y in roots.get((x**3 + a * x + b) % p, ()):
                pts.append((x, y))
        curve = cls(p, a, b, tuple(pts))
        assert all((y * y - x**3 - a * x - b) % p == 0 for x, y in pts)
        return curve

    @property
    def affine_count(self) -> int:
        return len(self.points)


def elliptic_monomials(ell: int) -> list[tuple[int, int]]:
    """Exponents ``(i, j)`` of ``x^i y^j`` with ``j <= 1`` and pole order ``2i + 3j <= l``,
    sorted by pole order."""
    mons = [(i, j) for j in (0, 1) for i in range(ell // 2 + 1) if 2 * i + 3 * j <= ell]
    return sorted(mons, key=lambda m: 2 * m[0] + 3 * m[1])


class EllipticFamily(AGFamily):
    """``C(l)`` = evaluations of ``L(l * P_inf)`` at affine points of a curve."""

    kind = "elliptic"

    def __init__(self, curve: EllipticCurve, points=None):
        pts = tuple(curve.points) if points is None else tuple((int(x), int(y)) for x, y in points)
        if not pts:
            raise ValueError("need at least one evaluation point")
        if len(set(pts)) != len(pts):
            raise ValueError("duplicate evaluation points")
        on_curve = set(curve.points)
        if any(pt not in on_curve for pt in pts):
            raise ValueError("evaluation point not on the curve")
        super().__init__(PrimeField(curve.p), 1, len(pts))
        self.curve = curve
        self.points = pts
        arr = np.asarray(pts, dtype=np.int64)
        self._x, self._y = arr[:, 0], arr[:, 1]

    def spanning_rows(self, ell: int) -> np.ndarray:
        q = self.q
        mons = elliptic_monomials(ell)
        top = max(i for i, _ in mons)
        xp = _power_rows(self._x, top, q)
        return np.stack([xp[i] * (self._y if j else 1) % q for i, j in mons])

    def certificate(self, ell: int) -> str:
        return f"nonzero function with pole order <= {ell} at infinity has at most {ell} zeros"


def elliptic_family(p: int, a: int, b: int, points=None) -> EllipticFamily:
    return EllipticFamily(EllipticCurve.create(p, a, b), points)


class PerturbedFamily(AGFamily):
    """Test fixture: ``base`` with one generator entry of ``C(l)`` shifted by ``delta``."""

    def __init__(self, base: AGFamily, ell: int, row: int, col: int, delta: int = 1):
        super().__init__(base.field, base.genus, base.n)
        self.base, self.target = base, (ell, row, col, delta)
        self.kind = f"perturbed-{base.kind}"

    def spanning_rows(self, ell: int) -> np.ndarray:
        rows = self.base.member(ell).generator.copy()
        t_ell, row, col, delta = self.target
        if ell == t_ell:
            rows[row % rows.shape[0], col] = (rows[row % rows.shape[0], col] + delta) % self.q
        return rows

    def certificate(self, ell: int) -> str:
        return "none (perturbed fixture)"

    def _build_member(self, ell: int) -> LinearCode:
        code = super()._build_member(ell)
        code.distance_bound = None if ell == self.target[0] else code.distance_bound
        return code


# --- verification ----------------------------------------------------------

@dataclass
class VerificationReport:
    kind: str
    q: int
    n: int
    g: int
    distance_mode: str
    members: list[dict] = dc_field(default_factory=list)
    products: list[dict] = dc_field(default_factory=list)

    @property
    def violations(self) -> list[str]:
        out = []
        for m in self.members:
            if m["dim_slack"] < 0:
                out.append(f"dim C({m['ell']}) = {m['dim']} < {m['ell']} - {self.g}")
            if not m["distance_ok"]:
                out.append(f"dist C({m['ell']}) below {self.n - m['ell']}")
        for p in self.products:
            if p["violations"]:
                out.append(f"C({p['ell']}) * C({p['m']}) not in C({p['ell'] + p['m']}): "
                           f"{p['violations']} of {p['checked']} products outside")
        return out

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"kind": self.kind, "q": self.q, "n": self.n, "g": self.g,
                "distance_mode": self.distance_mode, "members": self.members,
                "products": self.products, "violations": self.violations, "ok": self.ok}


def verify_family(fam: AGFamily, ells=None, pairs=None, distance_mode: str = "exact", *,
                  budget: int = 2_000_000, distance_samples: int = 256, seed: int = 0) -> VerificationReport:
    """Check both defining conditions on sampled ``l`` and ``(l, m)``.

    Failures become report entries; nothing is raised for a bad family.
    ``exact`` computes minimum distances exactly; ``sampled`` records the
    structural certificate and checks ``distance_samples`` random
    codewords against it.
    """
    if distance_mode not in ("exact", "sampled"):
        raise ValueError(f"unknown distance mode {distance_mode!r}")
    n, g = fam.n, fam.genus
    ells = list(range(n + 1)) if ells is None else list(ells)
    if pairs is None:
        pairs = [(l, m) for l in range(n + 1) for m in range(l, n + 1 - l)]
    rng = np.random.default_rng(seed)
    report = VerificationReport(fam.kind, fam.q, n, g, distance_mode)
    for ell in ells:
        code = fam.member(ell)
        need = n - ell
        entry = {"ell": ell, "dim": code.dim, "required_dim": ell - g, "dim_slack": code.dim - (ell - g),
                 "required_distance": need, "certificate": code.certificate}
        if distance_mode == "exact":
            dist = min_distance(code, budget)
            entry.update(distance=dist, distance_ok=dist >= need)
        else:
            msgs = rng.integers(0, fam.q, size=(distance_samples, code.dim))
            msgs = msgs[np.any(msgs, axis=1)]
            weights = np.count_nonzero(code.encode(msgs), axis=1) if msgs.size else np.array([n])
            lowest = int(weights.min())
            entry.update(distance=None, sampled_min_weight=lowest,
                         distance_ok=lowest >= need and code.distance_bound is not None
                         and code.distance_bound >= need)
        report.members.append(entry)
    for ell, m in pairs:
        if ell + m > n:
            continue
        target = fam.member(ell + m)
        a, b = fam.member(ell), fam.member(m)
        prods = (a.generator[:, None, :] * b.generator[None, :, :]) % fam.q
        inside = target.contains_rows(prods.reshape(-1, n))
        report.products.append({"ell": ell, "m": m, "checked": int(inside.size),
                                "violations": int(inside.size - inside.sum())})
    return report


def star_contained(fam: AGFamily, ell: int, m: int) -> bool:
    return star_product(fam.member(ell), fam.member(m)).is_subcode_of(fam.member(ell + m))


# --- descriptors -----------------------------------------------------------

_DESCRIPTOR_KEYS = ("kind", "q", "a", "b", "points", "perturb")


@dataclass(frozen=True)
class FamilyDescriptor:
    """Serializable recipe for a family.

    ``points`` is ``all``, ``first:N`` (the first N default points) or an
    explicit comma-separated list (``x`` for RS, ``x:y`` for elliptic).
    ``perturb`` (``l:row:col``) builds the mutation fixture.
    """

    kind: str
    q: int
    a: int | None = None
    b: int | None = None
    points: str = "all"
    perturb: str | None = None

    def items(self, prefix: str = "") -> list[tuple[str, str]]:
        out = []
        for key in _DESCRIPTOR_KEYS:
            value = getattr(self, key)
            if value is not None:
                out.append((prefix + key, str(value)))
        return out

    def to_text(self) -> str:
        return kvtext.dump(self.items())

    @classmethod
    def from_mapping(cls, d: dict[str, str], prefix: str = "") -> "FamilyDescriptor":
        get = lambda k: d.get(prefix + k)  # noqa: E731
        kind = get("kind")
        if kind not in ("rs", "elliptic"):
            raise ValueError(f"family kind must be rs or elliptic, got {kind!r}")
        if get("q") is None:
            raise ValueError("family descriptor needs q")
        a, b = get("a"), get("b")
        if kind == "elliptic" and (a is None or b is None):
            raise ValueError("elliptic descriptor needs a and b")
        return cls(kind, int(get("q")), None if a is None else int(a), None if b is None else int(b),
                   get("points") or "all", get("perturb"))

    @classmethod
    def from_text(cls, text: str) -> "FamilyDescriptor":
        return cls.from_mapping(kvtext.parse(text))

    def with_points(self, points: str) -> "FamilyDescriptor":
        return FamilyDescriptor(self.kind, self.q, self.a, self.b, points, self.perturb)

    def build(self) -> AGFamily:
        if self.kind == "rs":
            default = list(range(self.q))
            pts = self._select(default, lambda s: int(s))
            fam: AGFamily = RSFamily(PrimeField(self.q), pts)
        else:
            curve = EllipticCurve.create(self.q, self.a, self.b)
            pts = self._select(list(curve.points), lambda s: tuple(int(t) for t in s.split(":")))
            fam = EllipticFamily(curve, pts)
        if self.perturb:
            ell, row, col = (int(t) for t in self.perturb.split(":"))
            fam = PerturbedFamily(fam, ell, row, col)
        return fam

    def _select(self, default: list, parse_one) -> list:
        text = self.points.strip()
        if text == "all":
            return default
        if text.startswith("first:"):
            count = int(text[6:])
            if not 0 < count <= len(default):
                raise ValueError(f"first:{count} out of range (have {len(default)} points)")
            return default[:count]
        return [parse_one(tok.strip()) for tok in text.split(",") if tok.strip()]
