"""Command-line interface.

Subcommands:

  simulate <config>        run one scenario; exit 0 iff audits/fits pass
  sweep <config>           run a parameter grid; aggregate CSV + per-cell dirs
  fit <csv> --quantity q   power-law fit of a trajectory CSV column
  verify-lemmas            randomized comparison-bound suites
  constants <config>       theorem constants for a scenario's data

The environment variable KIRCHDECAY_OUTPUT_ROOT overrides the output root
(--output-root wins over it).  Nonzero exit codes: 1 for failed audits, fits,
integrations or bound violations; 2 for configuration and usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .comparison import verify_lemma_suites
from .config import ConfigError, load_config
from .energies import compute_constants
from .rates import DataError, fit_power_law
from .runner import COLUMN_OF_QUANTITY, read_trajectory_csv, run_scenario, sweep_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kirchdecay",
        description=(
            "Spectral-Galerkin runs, decay-rate fits and inequality audits for "
            "degenerate Kirchhoff equations with weak dissipation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario from a config file")
    p_sim.add_argument("config")
    p_sim.add_argument("--output-root", default=None)

    p_sweep = sub.add_parser("sweep", help="run a sweep grid from a config file")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--output-root", default=None)

    p_fit = sub.add_parser("fit", help="fit a power law to a trajectory CSV column")
    p_fit.add_argument("csv")
    p_fit.add_argument(
        "--quantity", required=True, choices=sorted(COLUMN_OF_QUANTITY.keys())
    )
    p_fit.add_argument("--window", nargs=2, type=float, default=None,
                       metavar=("T_LO", "T_HI"))
    p_fit.add_argument("--mode", choices=("point", "envelope"), default="point")

    p_ver = sub.add_parser("verify-lemmas", help="randomized comparison-bound suites")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--count", type=int, required=True)
    p_ver.add_argument("--rel-tol", type=float, default=1e-7)
    p_ver.add_argument("--out", default=None, help="write the JSON report here")

    p_con = sub.add_parser("constants", help="theorem constants for a scenario")
    p_con.add_argument("config")
    return parser


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    result = run_scenario(cfg, args.output_root)
    print(f"wrote {result.out_dir}/manifest.json")
    for kind in ("hyperbolic", "parabolic"):
        info = result.manifest.get(kind)
        if isinstance(info, dict) and "termination" in info:
            term = info["termination"]
            print(f"{kind}: {term['reason']} at t = {term['t']:g}")
        elif isinstance(info, dict) and "error" in info:
            print(f"{kind}: error: {info['error']}")
    for quantity, fit in result.manifest.get("fits", {}).items():
        if "exponent" in fit:
            print(f"fit {quantity}: exponent {fit['exponent']:.4f} "
                  f"(residual {fit['residual']:.2e})")
        else:
            print(f"fit {quantity}: {fit['error']}")
    if "audit" in result.manifest:
        audit = result.manifest["audit"]
        print(f"audit: {audit.get('status', audit.get('error'))}")
    return 0 if result.ok else 1


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    result = sweep_scenario(cfg, args.output_root)
    print(f"wrote {result.out_dir}/sweep_summary.csv ({len(result.rows)} cells)")
    for row in result.rows:
        print(f"  cell {row['cell']}: {row['status']}")
    return 0 if result.ok else 1


def _cmd_fit(args) -> int:
    columns = read_trajectory_csv(args.csv)
    column = COLUMN_OF_QUANTITY[args.quantity]
    window = tuple(args.window) if args.window else None
    try:
        fit = fit_power_law((columns["t"], columns[column]), window=window, mode=args.mode)
    except DataError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(fit.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_verify_lemmas(args) -> int:
    if args.count < 1:
        print("--count must be >= 1", file=sys.stderr)
        return 2
    report = verify_lemma_suites(args.seed, args.count, rel_tol=args.rel_tol)
    payload = report.to_dict()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(
        f"lemma suites: {report.count} instances each, "
        f"{report.n_violations} violations; "
        f"worst margins: lemma1 {report.lemma1_worst_margin:.9f}, "
        f"envelope {max(report.lemma2_worst['z_upper_margin'], report.lemma2_worst['z_lower_margin']):.9f}, "
        f"closed-form err {report.lemma2_worst['closed_rel_err']:.3e}"
    )
    if report.violations:
        print(json.dumps(report.violations[0], indent=2, sort_keys=True), file=sys.stderr)
    return 0 if report.passed else 1


def _cmd_constants(args) -> int:
    cfg = load_config(args.config)
    op = cfg.operator()
    params = cfg.params()
    mode = cfg.resolve_theorem_mode(op)
    consts = compute_constants(
        params, op, cfg.u0.build(op.dim), cfg.u1.build(op.dim), mode
    )
    print(json.dumps(consts.to_dict(), indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "fit": _cmd_fit,
        "verify-lemmas": _cmd_verify_lemmas,
        "constants": _cmd_constants,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"{exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
