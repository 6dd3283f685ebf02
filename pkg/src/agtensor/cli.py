"""Command-line front end.

Exit status: 0 success, 1 violation or guarantee failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from .decoder import check_preconditions, derive_constants
from .experiments import ExperimentConfig, run_trial, write_csv
from .families import FamilyDescriptor, find_curve, count_points, verify_family
from .field import is_prime
from .props import product_suite, restriction_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies must not overwrite values given before the subcommand
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="config or family descriptor file", **kw)
    p.add_argument("--seed", type=int, **kw)
    p.add_argument("--out", type=Path, **kw)
    p.add_argument("--mode", choices=("certified", "best-effort"), **kw)
    p.add_argument("--threads", type=int, **({"default": 1} if not suppress else kw))
    return p


def _out_dir(args, default: str) -> Path:
    out = args.out if args.out is not None else Path(default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args) -> ExperimentConfig:
    if args.config is None:
        raise UsageError("--config is required")
    try:
        cfg = ExperimentConfig.load(args.config)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"bad config {args.config}: {exc}") from exc
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.out is not None:
        overrides["out"] = str(args.out)
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    return cfg


def cmd_verify_family(args) -> int:
    if args.config is not None:
        try:
            desc = FamilyDescriptor.from_text(args.config.read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"bad descriptor: {exc}") from exc
    else:
        if args.kind is None or args.q is None:
            raise UsageError("give --config or --kind and --q")
        desc = FamilyDescriptor(args.kind, args.q, args.a, args.b, args.points or "all")
    try:
        fam = desc.build()
    except ValueError as exc:
        raise UsageError(f"bad descriptor: {exc}") from exc
    pairs = None
    if args.max_pairs is not None:
        everything = [(l, m) for l in range(fam.n + 1) for m in range(l, fam.n + 1 - l)]
        rng = np.random.default_rng(args.seed or 0)
        if len(everything) > args.max_pairs:
            pick = np.sort(rng.choice(len(everything), size=args.max_pairs, replace=False))
            pairs = [everything[i] for i in pick]
    report = verify_family(fam, pairs=pairs, distance_mode=args.distance, seed=args.seed or 0)
    out = _out_dir(args, "runs/verify")
    payload = report.to_dict() | {"descriptor": desc.to_text()}
    (out / "verify_report.json").write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    print(f"{desc.kind} q={desc.q} n={fam.n} g={fam.genus}: {len(report.members)} members, "
          f"{len(report.products)} product pairs, {len(report.violations)} violations")
    for v in report.violations[:20]:
        print("  violation:", v)
    return EXIT_OK if report.ok else EXIT_FAIL


def _run_point(cfg: ExperimentConfig, threads: int, point: str, digest: str):
    fam1, fam2 = cfg.family1.build(), cfg.family2.build()
    work = lambda i: run_trial(cfg, i, fam1, fam2, point=point, digest=digest)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, range(cfg.trials)))
    else:
        outcomes = [work(i) for i in range(cfg.trials)]
    if outcomes:
        rate = sum(o.record["success"] for o in outcomes) / len(outcomes)
        for o in outcomes:
            o.record["point_success_rate"] = f"{rate:.6g}"
    return outcomes


def _trial_ok(rec: dict, mode: str) -> bool:
    if mode != "certified":
        return True
    return bool(rec["success"] and rec["certified"] and rec["robust_pass"])


def cmd_decode(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg.out)
    fam1 = cfg.family1.build()
    g = max(fam1.genus, cfg.family2.build().genus)
    if cfg.mode == "certified" and cfg.eps > 0:
        pre = check_preconditions(fam1.n, cfg.ell, g, fam1.q, cfg.eps)
        if not pre.ok:
            print("refusing to decode in certified mode; preconditions at the target eps:")
            print(pre.table())
            (out / "preconditions.json").write_text(json.dumps(pre.to_dict(), indent=1) + "\n")
            return EXIT_FAIL
    (out / "config.txt").write_text(cfg.to_text())
    outcomes = _run_point(cfg, args.threads, f"eps={cfg.eps}", cfg.digest)
    records = []
    for o in outcomes:
        rec = o.record
        if o.trace_json is not None:
            name = f"trace_{rec['trial']:03d}.json"
            (out / name).write_text(o.trace_json)
            rec["trace"] = name
        records.append(rec)
        print(f"trial {rec['trial']}: eps_rc={rec['eps_rc_decimal']} sum={rec['sum_QR_QC_decimal']} "
              f"ratio={rec['ratio_decimal']} certified={rec['certified']} "
              f"robust_pass={rec['robust_pass']} plant={rec['q_equals_plant']}"
              + (f" failure={o.failure}" if o.failure else ""))
    write_csv(out / "records.csv", records)
    ok = all(_trial_ok(r, cfg.mode) for r in records)
    print(f"{sum(_trial_ok(r, 'certified') for r in records)}/{len(records)} trials certified")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg.out)
    records = []
    for point_cfg in cfg.points():
        label = f"eps={point_cfg.eps},n={point_cfg.family1.build().n}"
        for o in _run_point(point_cfg, args.threads, label, cfg.digest):
            records.append(o.record)
            print(f"{label} trial {o.record['trial']}: success={o.record['success']} "
                  f"certified={o.record['certified']} sum={o.record['sum_QR_QC_decimal']}")
    write_csv(out / "sweep.csv", records)
    ok = all(_trial_ok(r, cfg.mode) for r in records)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_find_curve(args) -> int:
    p, threshold = args.p, args.threshold
    if not is_prime(p) or p <= 3:
        raise UsageError(f"p must be a prime > 3, got {p}")
    found = find_curve(p, threshold)
    if found is None:
        print(f"no curve over GF({p}) with >= {threshold} affine points")
        return EXIT_FAIL
    a, b = found
    desc = FamilyDescriptor("elliptic", p, a, b, "all")
    out = _out_dir(args, "runs/curves")
    path = out / f"curve_p{p}.txt"
    path.write_text(desc.to_text())
    print(f"y^2 = x^3 + {a}x + {b} over GF({p}): {count_points(p, a, b)} affine points -> {path}")
    return EXIT_OK


def cmd_check_constants(args) -> int:
    try:
        eps = Fraction(args.eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    k = derive_constants(eps, args.ell, args.g)
    print(f"eps = {k.eps}  gamma^2 = {k.gamma_sq}  gamma'^2 = {k.gamma_prime_sq}  "
          f"L = {k.L}  d = {k.d}  eps0 = {k.eps0}  c0 = {k.c0}  rho = {k.rho}")
    report = check_preconditions(args.n, args.ell, args.g, args.q, eps)
    print(report.table())
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_tensor_props(args) -> int:
    seed = args.seed or 0
    r1 = restriction_suite(args.trials, seed)
    r2 = product_suite(args.trials, seed)
    print(f"restriction/extension span equality: {r1['trials'] - len(r1['failures'])}/{r1['trials']} "
          f"({r1['elapsed']:.2f}s)")
    print(f"dimension and distance products:     {r2['trials'] - len(r2['failures'])}/{r2['trials']} "
          f"({r2['elapsed']:.2f}s)")
    return EXIT_OK if not (r1["failures"] or r2["failures"]) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    parser = argparse.ArgumentParser(prog="agtensor", parents=[_common(suppress=False)],
                                     description="Robust testing of tensor products of AG codes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-family", parents=[common], help="check the AG sequence conditions")
    p.add_argument("--kind", choices=("rs", "elliptic"))
    p.add_argument("--q", type=int)
    p.add_argument("--a", type=int)
    p.add_argument("--b", type=int)
    p.add_argument("--points")
    p.add_argument("--distance", choices=("exact", "sampled"), default="exact")
    p.add_argument("--max-pairs", type=int)
    p.set_defaults(func=cmd_verify_family)

    p = sub.add_parser("decode", parents=[common], help="planted decoding trials")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep to CSV")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("find-curve", parents=[common], help="search for an elliptic curve")
    p.add_argument("p", type=int)
    p.add_argument("threshold", type=int)
    p.set_defaults(func=cmd_find_curve)

    p = sub.add_parser("check-constants", parents=[common], help="evaluate the constant inequalities")
    p.add_argument("--eps", required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--g", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.set_defaults(func=cmd_check_constants)

    p = sub.add_parser("tensor-props", parents=[common], help="tensor restriction/product suites")
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_tensor_props)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"agtensor: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
