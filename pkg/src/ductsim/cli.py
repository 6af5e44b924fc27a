"""Command-line front end: parse a run configuration, drive a power
sweep or an optimizer trace, and emit figure-ready CSV files plus a
JSON manifest that makes the run reproducible.

Exit codes: 0 on success, 2 on configuration problems (the offending
setting is named), 1 on runtime failures (the failing pipeline stage is
named).
"""

import argparse
import csv
import datetime
import re
import json
import math
import sys
import time
from pathlib import Path

from . import __version__, engine
from .backend import backend_name
from .config import ConfigurationError, load_config

_USAGE_METHODS = ",".join(engine.METHODS)


def _parse_methods(text):
    methods = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    if not methods:
        raise argparse.ArgumentTypeError("no methods given")
    for m in methods:
        if m not in engine.METHODS:
            raise argparse.ArgumentTypeError(
                f"unknown method {m!r}; choose from {_USAGE_METHODS}")
    return methods


def _parse_sweep(text):
    """Parse "start:step:stop" in dBm, optional "dBm" suffix."""
    body = text.strip()
    if body.lower().endswith("dbm"):
        body = body[:-3].strip()
    parts = body.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"sweep must be start:step:stop [dBm], got {text!r}")
    try:
        start, step, stop = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"sweep bounds must be numbers, got {text!r}") from None
    if step <= 0:
        raise argparse.ArgumentTypeError("sweep step must be positive")
    if stop < start:
        raise argparse.ArgumentTypeError("sweep stop must be >= start")
    count = math.floor((stop - start) / step + 1e-9) + 1
    return tuple(start + i * step for i in range(count))


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ductsim",
        description="Link-level simulator for cross-system duct "
                    "interference: estimation, angle measurement, "
                    "null and optimized far-system precoding.")
    # argparse reads any dash-led token as an option switch, which would
    # reject sweep grids that start at a negative power ("-10:5:30");
    # widen its negative-number test so those parse as values
    parser._negative_number_matcher = re.compile(r"^-\d*\.?\d+(:|$)")
    parser.add_argument("--config", required=True,
                        help="path to a key = value run configuration")
    parser.add_argument("--methods", type=_parse_methods,
                        default=engine.METHODS,
                        help=f"comma-separated subset of {_USAGE_METHODS}")
    parser.add_argument("--combiner", choices=("mrc", "mmse", "both"),
                        default="mmse", help="receive combiner kind(s)")
    parser.add_argument("--sweep", type=_parse_sweep, default=None,
                        metavar="START:STEP:STOP",
                        help='UL power grid in dBm, e.g. "-10:10:30 dBm"; '
                             "default is the configured power alone")
    parser.add_argument("--trials", type=int, default=None,
                        help="Monte Carlo trials per grid point "
                             "(optimizer runs in fp-trace mode)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured RNG seed")
    parser.add_argument("--out", default="out",
                        help="output directory (created if missing)")
    parser.add_argument("--mode", choices=("sweep", "fp-trace"),
                        default="sweep")
    parser.add_argument("--true-angles", action="store_true",
                        help="bypass angle measurement, use true angles")
    parser.add_argument("--paper-literal-null-scalar", action="store_true",
                        help="use the printed residual-interference scalar "
                             "in the nulled estimation regime")
    parser.add_argument("--single-duct-angle", action="store_true",
                        help="one shared duct angle per BS instead of one "
                             "per cross-system pair")
    return parser


def _fmt(value):
    return format(float(value), ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _sweep_outputs(out_dir, result):
    """Emit nmse.csv, ul_rate.csv, dl_rate.csv; returns name -> file."""
    nmse_rows, ul_rows, dl_rows = [], [], []
    for mth in result.methods:
        for kind in result.combiners:
            for ip, dbm in enumerate(result.p_dbm):
                tail = [str(result.trials)]
                mean, lo, hi = result.mean_ci(result.nmse[(mth, ip)])
                nmse_rows.append([mth, kind, _fmt(dbm), _fmt(mean),
                                  _fmt(lo), _fmt(hi)] + tail)
                mean, lo, hi = result.mean_ci(result.ul[(mth, kind, ip)])
                ul_rows.append([mth, kind, _fmt(dbm), _fmt(mean),
                                _fmt(lo), _fmt(hi)] + tail)
                mean, lo, hi = result.mean_ci(result.dl[(mth, ip)])
                dl_rows.append([mth, kind, _fmt(dbm), _fmt(mean),
                                _fmt(lo), _fmt(hi)] + tail)
    common = ["method", "combiner", "p_ul_dbm"]
    tail = ["ci_low", "ci_high", "trials"]
    _write_csv(out_dir / "nmse.csv", common + ["mean_nmse"] + tail, nmse_rows)
    _write_csv(out_dir / "ul_rate.csv", common + ["mean_ul_rate"] + tail,
               ul_rows)
    _write_csv(out_dir / "dl_rate.csv", common + ["mean_dl_rate"] + tail,
               dl_rows)
    return {"nmse": "nmse.csv", "ul_rate": "ul_rate.csv",
            "dl_rate": "dl_rate.csv"}


def _trace_outputs(out_dir, result):
    rows = [[str(int(it)), _fmt(obj), _fmt(dj), _fmt(dd)]
            for it, obj, dj, dd in zip(result.iterations, result.objective,
                                       result.dl_ar_joint,
                                       result.dl_ar_dlonly)]
    _write_csv(out_dir / "fp_objective.csv",
               ["iteration", "objective", "dl_ar_joint", "dl_ar_dlonly"],
               rows)
    return {"fp_objective": "fp_objective.csv"}


def _manifest(out_dir, args, cfg, combiners, grid, trials, outputs,
              wall_clock, started, extra=None):
    manifest = {
        "tool": "ductsim",
        "version": __version__,
        "backend": backend_name(),
        "mode": args.mode,
        "methods": list(args.methods),
        "combiners": list(combiners),
        "p_ul_dbm": [float(p) for p in grid],
        "trials": trials,
        "seed": cfg.rng_seed,
        "true_angles": bool(args.true_angles),
        "config": cfg.as_dict(),
        "resolved_defaults": {
            "angular_spread_deg": cfg.angular_spread,
            "gp_snapshots": cfg.num_gp_snapshots,
            "duct_loss": cfg.duct_loss,
            "antenna_spacing_ratio": cfg.antenna_spacing_ratio,
            "error_level_convention": "trace(err_cov)/M in every rate "
                                      "expression's error slot",
        },
        "outputs": outputs,
        "started_utc": started,
        "wall_clock_seconds": wall_clock,
    }
    if extra:
        manifest.update(extra)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["rng_seed"] = args.seed
        if args.trials is not None:
            overrides["trials"] = args.trials
        if args.paper_literal_null_scalar:
            overrides["paper_literal_null_scalar"] = True
        if args.single_duct_angle:
            overrides["single_duct_angle"] = True
        if overrides:
            cfg = cfg.replace(**overrides)
    except OSError as exc:
        print(f"configuration error: cannot read {args.config}: {exc}",
              file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    combiners = ("mrc", "mmse") if args.combiner == "both" else (args.combiner,)
    grid = args.sweep if args.sweep is not None \
        else (engine.watts_to_dbm(cfg.ul_power),)
    trials = cfg.trials

    out_dir = Path(args.out)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    t0 = time.monotonic()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.mode == "sweep":
            result = engine.run_sweep(cfg, args.methods, grid, trials,
                                      combiners=combiners,
                                      true_angles=args.true_angles)
            outputs = _sweep_outputs(out_dir, result)
            extra = None
        else:
            result = engine.run_fp_trace(cfg, trials,
                                         true_angles=args.true_angles)
            outputs = _trace_outputs(out_dir, result)
            extra = {
                "fp_runs_converged_joint":
                    int(sum(result.converged_joint)),
                "fp_runs_converged_dlonly":
                    int(sum(result.converged_dlonly)),
                "fp_final_dl_ar_joint_mean":
                    float(result.final_joint.mean()),
                "fp_final_dl_ar_dlonly_mean":
                    float(result.final_dlonly.mean()),
            }
        _manifest(out_dir, args, cfg, combiners, grid, trials, outputs,
                  time.monotonic() - t0, started, extra)
    except engine.EngineError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - contract maps any failure to 1
        print(f"runtime error: stage unknown: {exc!r}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
