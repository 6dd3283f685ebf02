from __future__ import annotations

import csv
from fractions import Fraction

import numpy as np
import pytest

from agtensor import kvtext
from agtensor.experiments import (
    ExperimentConfig, columns, planted_instance, run_trial, trial_seed, write_csv,
)
from agtensor.families import FamilyDescriptor, rs_family
from agtensor.tensor import TensorCode, tensor_contains

SMALL = FamilyDescriptor("rs", 211, points="first:200")


def small_config(**kw) -> ExperimentConfig:
    base = dict(family1=SMALL, family2=SMALL, ell=8, eps=Fraction(1, 50), noise=Fraction(1, 1000),
                trials=2, seed=3, mode="best-effort", out="runs/test")
    base.update(kw)
    return ExperimentConfig(**base)


def test_kvtext_parse_and_dump():
    text = "# comment\na = 1\nb.c = x, y  # trailing\n\n"
    assert kvtext.parse(text) == {"a": "1", "b.c": "x, y"}
    assert kvtext.dump([("a", "1")]) == "a = 1\n"
    for bad in ("a\n", "= 1\n", "a = 1\na = 2\n"):
        with pytest.raises(ValueError):
            kvtext.parse(bad)


def test_trial_seed_is_stable_and_distinct():
    seeds = [trial_seed(3, i) for i in range(50)]
    assert len(set(seeds)) == 50
    assert seeds == [trial_seed(3, i) for i in range(50)]
    assert trial_seed(4, 0) != seeds[0]


@pytest.mark.parametrize("model", ["split", "row-burst", "col-burst"])
def test_planted_instance_structure(model):
    fam = rs_family(211, range(200))
    inst = planted_instance(fam, fam, 8, Fraction(1, 50), model=model, noise=Fraction(1, 1000), seed=1)
    T = TensorCode(fam.member(8), fam.member(8))
    assert tensor_contains(inst.plant, T)
    assert np.all(fam.member(8).contains_rows(inst.R))
    assert np.all(fam.member(8).contains_rows(inst.C.T))
    assert len(inst.r_rows) + len(inst.c_cols) == 4
    changed_rows = np.flatnonzero(np.any(inst.R != inst.plant, axis=1))
    changed_cols = np.flatnonzero(np.any(inst.C != inst.plant, axis=0))
    assert changed_rows.tolist() == inst.r_rows.tolist()
    assert changed_cols.tolist() == inst.c_cols.tolist()
    assert inst.eps_rc <= Fraction(1, 50)
    assert len(inst.noise_cells) == 40
    again = planted_instance(fam, fam, 8, Fraction(1, 50), model=model, noise=Fraction(1, 1000), seed=1)
    assert np.array_equal(again.F, inst.F)


def test_config_roundtrip_and_digest():
    cfg = small_config(sweep_eps=(Fraction(1, 100), Fraction(1, 50)), sweep_n=(150, 200))
    text = cfg.to_text()
    again = ExperimentConfig.from_text(text)
    assert again == cfg and again.digest == cfg.digest
    assert text.splitlines()[0] == "family1.kind = rs"
    assert "eps = 1/50" in text
    assert small_config(seed=4).digest != cfg.digest
    points = cfg.points()
    assert len(points) == 4
    assert [p.family1.points for p in points] == ["first:150", "first:150", "first:200", "first:200"]


def test_config_accepts_decimal_eps_and_missing_family2():
    cfg = ExperimentConfig.from_text("family1.kind = rs\nfamily1.q = 7\nell = 2\neps = 0.005\n")
    assert cfg.eps == Fraction(1, 200) and cfg.family2 == cfg.family1
    assert cfg.mode == "certified"


def test_config_empty_sweep_has_no_points():
    cfg = ExperimentConfig.from_text(small_config().to_text() + "sweep.eps =\n")
    assert cfg.points() == []


@pytest.mark.parametrize("extra", ["colour = red\n", "mode = hopeful\n", "model = diagonal\n"])
def test_config_rejects_bad_keys(extra):
    text = small_config().to_text()
    key = extra.split("=")[0].strip()
    text = "".join(line + "\n" for line in text.splitlines() if not line.startswith(key + " "))
    with pytest.raises(ValueError):
        ExperimentConfig.from_text(text + extra)


def test_run_trial_record_matches_schema():
    cfg = small_config()
    out = run_trial(cfg, 0)
    rec = out.record
    assert set(rec) <= set(columns())
    assert rec["success"] and rec["guarantee_holds"] and rec["robust_pass"] and rec["q_equals_plant"]
    assert not rec["certified"] and not rec["preconditions_ok"]
    assert rec["seed"] == trial_seed(3, 0)
    assert Fraction(rec["sum_QR_QC"]) <= 2 * Fraction(rec["eps_rc"])
    assert out.trace_json is not None and out.failure is None
    assert run_trial(cfg, 0).trace_json == out.trace_json


def test_run_trial_certified_refusal_is_a_failed_row():
    out = run_trial(small_config(mode="certified"), 0)
    assert not out.record["success"] and "preconditions" in out.failure


def test_write_csv(tmp_path):
    write_csv(tmp_path / "x.csv", [{"trial": 0, "q": 7}])
    rows = list(csv.DictReader((tmp_path / "x.csv").open()))
    assert rows[0]["trial"] == "0" and rows[0]["q"] == "7" and rows[0]["ratio"] == ""
    write_csv(tmp_path / "empty.csv", [])
    assert (tmp_path / "empty.csv").read_text().strip().split(",") == columns()
