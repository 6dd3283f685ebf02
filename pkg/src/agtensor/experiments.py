"""Planted instances, experiment configs and trial execution."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import kvtext
from .decoder import DecodeFailure, PreconditionFailure, check_preconditions, decode, robust_test
from .families import AGFamily, FamilyDescriptor
from .tensor import TensorCode, corrupt, expand

LINE_MODELS = ("split", "row-burst", "col-burst")


def trial_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1, dtype=np.uint32)[0])


def _parse_fraction(s) -> Fraction:
    if isinstance(s, float):
        return Fraction(repr(s))
    return Fraction(str(s).strip())


@dataclass
class PlantedInstance:
    plant: np.ndarray
    coefficients: np.ndarray
    R: np.ndarray
    C: np.ndarray
    F: np.ndarray
    r_rows: np.ndarray
    c_cols: np.ndarray
    noise_cells: np.ndarray

    @property
    def eps_rc(self) -> Fraction:
        return Fraction(int(np.count_nonzero(self.R != self.C)), self.R.size)


def _random_nonzero_messages(rng, count: int, k: int, q: int) -> np.ndarray:
    msgs = rng.integers(0, q, size=(count, k))
    while count and k:
        zero = ~np.any(msgs, axis=1)
        if not zero.any():
            break
        msgs[zero] = rng.integers(0, q, size=(int(zero.sum()), k))
    return msgs


def planted_instance(fam1: AGFamily, fam2: AGFamily, ell: int, eps, *, model: str = "split",
                     noise=0, seed: int = 0) -> PlantedInstance:
    """A planted tensor codeword with R-side and C-side corruption.

    ``R`` is the plant with uniformly chosen rows replaced by other
    ``C1(l)`` codewords; ``C`` is the plant with uniformly chosen columns
    replaced by other ``C2(l)`` codewords.  The number of lines is
    ``floor(eps n^2) // n`` split evenly between the sides (``split``) or
    given to one side (``row-burst``/``col-burst``), so ``delta(R, C)``
    stays at or just below ``eps``.  ``F`` follows ``R`` off the C-side
    columns and ``C`` on them, then ``noise`` uniform cells are changed.
    """
    if model not in LINE_MODELS:
        raise ValueError(f"model must be one of {LINE_MODELS}")
    q, n = fam1.q, fam1.n
    rng = np.random.default_rng(seed)
    T = TensorCode(fam1.member(ell), fam2.member(ell))
    X = rng.integers(0, q, size=(T.C2.dim, T.C1.dim))
    plant = expand(X, T)
    lines = int(_parse_fraction(eps) * n * n) // n
    n_rows = {"split": lines // 2, "row-burst": lines, "col-burst": 0}[model]
    n_cols = {"split": lines // 2, "row-burst": 0, "col-burst": lines}[model]
    r_rows = np.sort(rng.choice(n, size=n_rows, replace=False))
    c_cols = np.sort(rng.choice(n, size=n_cols, replace=False))
    R = plant.copy()
    if n_rows:
        R[r_rows] = (R[r_rows] + T.C1.encode(_random_nonzero_messages(rng, n_rows, T.C1.dim, q))) % q
    C = plant.copy()
    if n_cols:
        C[:, c_cols] = (C[:, c_cols] + T.C2.encode(_random_nonzero_messages(rng, n_cols, T.C2.dim, q)).T) % q
    F = R.copy()
    F[:, c_cols] = C[:, c_cols]
    noise_seed = int(rng.integers(0, 2**32))
    F, cells = corrupt(F, noise, "uniform-cells", noise_seed, q)
    return PlantedInstance(plant, X, R, C, F, r_rows, c_cols, cells)


# --- config ---------------------------------------------------------------

_CONFIG_KEYS = ("ell", "eps", "noise", "model", "trials", "seed", "mode", "out",
                "sweep.eps", "sweep.n")


@dataclass(frozen=True)
class ExperimentConfig:
    family1: FamilyDescriptor
    family2: FamilyDescriptor
    ell: int
    eps: Fraction
    noise: Fraction = Fraction(0)
    model: str = "split"
    trials: int = 1
    seed: int = 0
    mode: str = "certified"
    out: str = "runs"
    sweep_eps: tuple[Fraction, ...] | None = None
    sweep_n: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.model not in LINE_MODELS:
            raise ValueError(f"model must be one of {LINE_MODELS}")
        if self.mode not in ("certified", "best-effort"):
            raise ValueError("mode must be certified or best-effort")
        if self.trials < 0:
            raise ValueError("trials must be non-negative")

    def to_text(self) -> str:
        items = self.family1.items("family1.") + self.family2.items("family2.")
        items += [("ell", str(self.ell)), ("eps", str(self.eps)), ("noise", str(self.noise)),
                  ("model", self.model), ("trials", str(self.trials)), ("seed", str(self.seed)),
                  ("mode", self.mode), ("out", self.out)]
        if self.sweep_eps is not None:
            items.append(("sweep.eps", ",".join(str(e) for e in self.sweep_eps)))
        if self.sweep_n is not None:
            items.append(("sweep.n", ",".join(str(v) for v in self.sweep_n)))
        return kvtext.dump(items)

    @property
    def digest(self) -> str:
        return kvtext.digest(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        d = kvtext.parse(text)
        known = set(_CONFIG_KEYS) | {k for k in d if k.startswith(("family1.", "family2."))}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        fam1 = FamilyDescriptor.from_mapping(d, "family1.")
        fam2 = FamilyDescriptor.from_mapping(d, "family2.") if "family2.kind" in d else fam1
        split = lambda s: [t.strip() for t in s.split(",") if t.strip()]  # noqa: E731
        return cls(
            fam1, fam2, int(d["ell"]), _parse_fraction(d.get("eps", "0")),
            _parse_fraction(d.get("noise", "0")), d.get("model", "split"),
            int(d.get("trials", "1")), int(d.get("seed", "0")), d.get("mode", "certified"),
            d.get("out", "runs"),
            None if "sweep.eps" not in d else tuple(_parse_fraction(t) for t in split(d["sweep.eps"])),
            None if "sweep.n" not in d else tuple(int(t) for t in split(d["sweep.n"])),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())

    def points(self) -> list["ExperimentConfig"]:
        """One config per sweep point; a present but empty sweep key gives no points."""
        eps_values = (self.eps,) if self.sweep_eps is None else self.sweep_eps
        n_values = (None,) if self.sweep_n is None else self.sweep_n
        out = []
        for n in n_values:
            for eps in eps_values:
                f1, f2 = self.family1, self.family2
                if n is not None:
                    f1, f2 = f1.with_points(f"first:{n}"), f2.with_points(f"first:{n}")
                out.append(replace(self, family1=f1, family2=f2, eps=eps, sweep_eps=None, sweep_n=None))
        return out


def columns() -> list[str]:
    schema = json.loads(resources.files("agtensor").joinpath("trial_schema.json").read_text())
    return [name for name, _ in schema["columns"]]


def _fmt(x: Fraction | None) -> tuple[str, str]:
    if x is None:
        return "", ""
    return f"{x.numerator}/{x.denominator}", f"{float(x):.9g}"


@dataclass
class TrialOutcome:
    record: dict
    trace_json: str | None = None
    failure: str | None = dc_field(default=None)


def run_trial(cfg: ExperimentConfig, index: int, fam1: AGFamily | None = None,
              fam2: AGFamily | None = None, point: str = "", digest: str | None = None) -> TrialOutcome:
    fam1 = fam1 or cfg.family1.build()
    fam2 = fam2 or cfg.family2.build()
    seed = trial_seed(cfg.seed, index)
    n, g = fam1.n, max(fam1.genus, fam2.genus)
    start = time.perf_counter()
    inst = planted_instance(fam1, fam2, cfg.ell, cfg.eps, model=cfg.model, noise=cfg.noise, seed=seed)
    eps_rc = inst.eps_rc
    pre = check_preconditions(n, cfg.ell, g, fam1.q, eps_rc)
    rec = {"config_digest": digest or cfg.digest, "point": point, "trial": index, "seed": seed,
           "mode": cfg.mode, "q": fam1.q, "n": n, "ell": cfg.ell, "g": g,
           "eps_target": str(cfg.eps), "preconditions_ok": pre.ok}
    rec["eps_rc"], rec["eps_rc_decimal"] = _fmt(eps_rc)
    trace_json = failure = None
    try:
        result = decode(inst.R, inst.C, fam1, fam2, cfg.ell, mode=cfg.mode, seed=seed)
    except (DecodeFailure, PreconditionFailure) as exc:
        result, failure = None, str(exc)
    if result is None:
        rec.update(success=False, guarantee_holds=False, certified=False, robust_pass=False,
                   q_equals_plant=False)
        for key in ("a", "b", "delta_FQ", "sum_QR_QC", "ratio"):
            rec[key], rec[key + "_decimal"] = "", ""
    else:
        rep = robust_test(inst.F, fam1, fam2, cfg.ell, reference=(inst.R, inst.C), seed=seed,
                          decoded=result)
        tr = result.trace
        trace_json = tr.to_json()
        rec["a"], rec["a_decimal"] = _fmt(rep.a)
        rec["b"], rec["b_decimal"] = _fmt(rep.b)
        rec["delta_FQ"], rec["delta_FQ_decimal"] = _fmt(rep.delta_FQ)
        rec["sum_QR_QC"], rec["sum_QR_QC_decimal"] = _fmt(tr.sum_fraction)
        rec["ratio"], rec["ratio_decimal"] = _fmt(rep.ratio)
        rec.update(success=tr.guarantee_holds and rep.passed, guarantee_holds=tr.guarantee_holds, certified=tr.certified,
                   robust_pass=rep.passed, q_equals_plant=bool(np.array_equal(result.Q, inst.plant)))
    rec["wall_time"] = f"{time.perf_counter() - start:.3f}"
    rec["trace"] = ""
    return TrialOutcome(rec, trace_json, failure)


def write_csv(path, records: list[dict]) -> None:
    cols = columns()
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({c: rec.get(c, "") for c in cols})
    Path(path).write_text(buf.getvalue())
