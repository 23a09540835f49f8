"""Command-line entry point: ``gefair {audit,train,sweep,validate-bounds,bounds,make-synthetic}``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from .bounds import (BoundInapplicable, entropy_upper_bound, fairness_deviation_bound, psi, psi_corollary,
                     psi_tilde, vc_deviation)
from .datasets import SYNTHETIC_SPEC, DatasetSpec, make_synthetic, preset_spec
from .entropy import BenefitParams, as_order, benefits, decompose
from .experiments import BoundValidationConfig, SweepConfig, run_single, run_sweep, validate_bounds
from .group_fairness import LabeledPredictions, check_predicates, compute_group_rates
from .solver import SolverConfig

log = logging.getLogger("gefair")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if not math.isfinite(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(payload, out_dir, name):
    text = json.dumps(_clean(payload), indent=2) + "\n"
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    sys.stdout.write(text)


def _add_data_args(p, need_label=True):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--preset", choices=("adult", "compas", "law", "dutch", "synthetic"),
                   help="column map for a known dataset; explicit flags override it")
    p.add_argument("--label-col")
    p.add_argument("--group-col")
    p.add_argument("--positive-label")
    p.add_argument("--categorical", action="append", default=None,
                   help="categorical column (repeatable, or comma-separated)")
    p.add_argument("--split", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)


def _add_params(p, repeat_c=False):
    p.add_argument("--a", type=float, default=5.0)
    if repeat_c:
        p.add_argument("--c", type=float, action="append", default=None)
    else:
        p.add_argument("--c", type=float, default=8.0)


def _add_solver_args(p):
    p.add_argument("--lambda-max", type=float, default=20.0)
    p.add_argument("--nu", type=float, default=0.005)
    p.add_argument("--t-max", type=int, default=10_000,
                   help="cap on Hedge rounds; 0 runs the full theoretical horizon")
    p.add_argument("--lambda-mode", choices=("sampled", "expected"), default="sampled")
    p.add_argument("--eval", choices=("exact", "sampled"), default="sampled", dest="eval_mode")
    p.add_argument("--draws", type=int, default=10_000)
    p.add_argument("--l2", type=float, default=0.0)


def _split_list(values):
    out = []
    for v in values or ():
        out.extend(x.strip() for x in v.split(",") if x.strip())
    return out


def _dataset_spec(args) -> DatasetSpec:
    overrides = {"split": args.split, "split_seed": args.seed}
    for attr, key in (("label_col", "label_col"), ("group_col", "group_col"),
                      ("positive_label", "positive_label")):
        if getattr(args, attr) is not None:
            overrides[key] = getattr(args, attr)
    if args.categorical is not None:
        overrides["categorical"] = tuple(_split_list(args.categorical))
    if args.preset == "synthetic":
        kw = dict(SYNTHETIC_SPEC)
        kw.update(overrides)
        return DatasetSpec(path=args.data, **kw)
    if args.preset:
        return preset_spec(args.preset, args.data, **overrides)
    if "label_col" not in overrides or "group_col" not in overrides:
        raise SystemExit("error: --label-col and --group-col are required without --preset")
    return DatasetSpec(path=args.data, **overrides)


def _t_cap(value):
    return None if value == 0 else value


def cmd_audit(args):
    frame = pd.read_csv(args.data, dtype=str, keep_default_na=False, skipinitialspace=True)
    for col in (args.label_col, args.group_col, args.prediction_col):
        if col not in frame.columns:
            raise SystemExit(f"error: column {col!r} not found in {args.data}")
    pos = str(args.positive_label)
    y = (frame[args.label_col].str.strip() == pos).to_numpy(dtype=np.int64)
    h = (frame[args.prediction_col].str.strip() == pos).to_numpy(dtype=np.int64)
    labels = list(dict.fromkeys(frame[args.group_col].str.strip().tolist()))
    g = frame[args.group_col].str.strip().map({v: i for i, v in enumerate(labels)}).to_numpy(dtype=np.int64)
    params = BenefitParams(args.a, args.c)
    order = as_order(args.alpha)
    rates = compute_group_rates(LabeledPredictions(y, h, g), len(labels))
    report = check_predicates(rates, args.tolerance)
    dec = decompose(benefits(h, y, params), g, order, len(labels))
    _emit({"n": int(y.size), "groups": labels, "alpha": order.value, "a": params.a, "c": params.c,
           "error": float(np.mean(h != y)), "decomposition": dec.as_dict(), "rates": rates.as_dict(),
           "predicates": report.as_dict()}, args.out_dir, "audit.json")
    return 0


def _solver_config(args, gamma, alpha, seed):
    return SolverConfig(gamma, as_order(alpha), args.lambda_max, args.nu, _t_cap(args.t_max), seed,
                        args.lambda_mode)


def cmd_train(args):
    spec = _dataset_spec(args)
    params = BenefitParams(args.a, args.c)
    cfg = _solver_config(args, args.gamma, args.alpha, args.seed)
    rec = run_single(spec, cfg, params, args.eval_mode, args.draws, args.out_dir, args.l2)
    sys.stdout.write(rec.to_json() + "\n")
    return 0 if rec.train_entropy_ok else 1


def cmd_sweep(args):
    spec = _dataset_spec(args)
    sweep = SweepConfig(
        gammas=tuple(args.gamma), alphas=tuple(args.alpha or (0.0, 1.0, 2.0)), a=args.a,
        cs=tuple(args.c or (8.0, 9.0, 10.0)), lambda_max=args.lambda_max, nu=args.nu,
        t_cap=_t_cap(args.t_max), lambda_mode=args.lambda_mode,
        seeds=tuple(range(args.seed, args.seed + args.repetitions)), eval_mode=args.eval_mode,
        draws=args.draws, l2=args.l2,
    )
    records = run_sweep(spec, sweep, args.out_dir, args.jobs, write_traces=not args.no_traces)
    failed = [r for r in records if r.status != "ok"]
    log.info("%d cells, %d failed; output in %s", len(records), len(failed), args.out_dir)
    return 1 if failed else 0


def cmd_validate_bounds(args):
    cfg = BoundValidationConfig(support=args.support, n=args.n, resamples=args.resamples, delta=args.delta,
                                alphas=tuple(args.alpha or (0.0, 1.0, 2.0)), a=args.a, c=args.c,
                                seed=args.seed)
    report = validate_bounds(cfg)
    _emit(report, args.out_dir, "bound_validation.json")
    return 0 if report["ok"] else 1


def cmd_bounds(args):
    params = BenefitParams(args.a, args.c)
    order = as_order(args.alpha)
    out = {
        "alpha": order.value, "a": params.a, "c": params.c, "r": params.r, "n": args.n, "delta": args.delta,
        "psi": psi(order, params),
        "psi_worst_case_over_r": psi_corollary(order, params.a),
        "fairness_bound": fairness_deviation_bound(order, params, args.n, args.delta),
        "entropy_upper_bound": entropy_upper_bound(order, params.r),
        "vc_risk_deviation": vc_deviation(args.n, args.d_h, args.delta, 4),
        "eps2": vc_deviation(args.n, args.d_h, args.delta, 8),
    }
    if args.risk is not None:
        try:
            pt = psi_tilde(order, params, args.risk, out["eps2"])
            out["psi_tilde"] = pt
            out["tight_bound"] = pt * out["eps2"]
        except BoundInapplicable as exc:
            out["psi_tilde"] = out["tight_bound"] = None
            out["psi_tilde_note"] = str(exc)
    _emit(out, None, "")
    return 0


def cmd_make_synthetic(args):
    frame = make_synthetic(args.n, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(args.out, index=False, lineterminator="\n")
    log.info("wrote %d rows to %s", len(frame), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gefair", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="fairness metrics of a predictions CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", required=True)
    p.add_argument("--group-col", required=True)
    p.add_argument("--prediction-col", required=True)
    p.add_argument("--positive-label", default="1")
    p.add_argument("--alpha", type=float, default=2.0)
    _add_params(p)
    p.add_argument("--tolerance", type=float, default=0.01)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("train", help="one constrained solve with held-out evaluation")
    _add_data_args(p)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--gamma", type=float, required=True)
    _add_params(p)
    _add_solver_args(p)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="grid over gamma, alpha and c; writes CSV reports")
    _add_data_args(p)
    p.add_argument("--alpha", type=float, action="append")
    p.add_argument("--gamma", type=float, action="append", required=True)
    _add_params(p, repeat_c=True)
    _add_solver_args(p)
    p.add_argument("--repetitions", type=int, default=1, help="seeds seed, seed+1, ...")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-traces", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate-bounds", help="Monte-Carlo check of the deviation bound")
    p.add_argument("--alpha", type=float, action="append")
    p.add_argument("--a", type=float, default=5.0)
    p.add_argument("--c", type=float, default=8.0)
    p.add_argument("--support", type=int, default=20)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--resamples", type=int, default=500)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_validate_bounds)

    p = sub.add_parser("bounds", help="print bound coefficients")
    p.add_argument("--alpha", type=float, default=2.0)
    _add_params(p)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--d-h", type=int, default=1)
    p.add_argument("--risk", type=float, help="empirical risk, enables the accuracy-dependent bound")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("make-synthetic", help="write the two-group synthetic CSV")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_synthetic)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
