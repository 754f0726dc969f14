"""Command line entry point: ``mdauction <command> [options]``.

Commands
  solve <config>       optimal auction for every N in the config
  ebm <config>         best exclusive buyer menu for every N
  compare <config>     both, with the relative revenue gap
  exclusion <config>   exclusion regions across N and the invariance verdict
  validate             benchmark and brute-force oracle suites

``<config>`` is a config file path or the name of a bundled config
(``mdauction list`` shows them).  The exit status is 1 when a solve is not
certified or a validation check fails, and 2 on usage or config errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .harness import ConfigError, ExperimentError, load_config, run_experiment, shipped_configs
from .oracles import run_validation

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="write artifacts under DIR (default: the config's out key, if any)")
    common.add_argument("--tol", type=float, metavar="X", help="violation tolerance for the separation oracles")
    common.add_argument("--seed", type=int, metavar="N", help="random seed (Monte Carlo and validation draws)")
    common.add_argument("--threads", type=int, default=1, metavar="N", help="run different N in parallel")
    common.add_argument("--format", choices=("csv", "pgm", "both"), default="both", help="grid artifact format")
    common.add_argument("-v", "--verbose", action="count", default=0, help="log solver progress (-vv for every round)")

    parser = argparse.ArgumentParser(prog="mdauction", description="Optimal multi-grade auctions by constraint generation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("solve", "solve the optimal auction"),
        ("ebm", "optimize the exclusive buyer mechanism"),
        ("compare", "optimal auction versus the best exclusive buyer mechanism"),
        ("exclusion", "compare exclusion regions across numbers of buyers"),
    ):
        p = sub.add_parser(name, parents=[common], help=text, description=text)
        p.add_argument("config", help="config file or bundled config name")
    p = sub.add_parser("validate", parents=[common], help="run the oracle suites")
    p.add_argument("--trials", type=int, default=1000, help="random trials per separation check")
    p.add_argument("--quick", action="store_true", help="smaller suite for a fast smoke test")
    sub.add_parser("list", help="list bundled configs")
    return parser


def _validate(args) -> int:
    checks = run_validation(seed=0 if args.seed is None else args.seed, trials=args.trials, quick=args.quick)
    for c in checks:
        print(c.line())
    failed = sum(not c.ok for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def _experiment(args) -> int:
    config = load_config(args.config)
    if args.tol is not None:
        config = replace(config, solver=replace(config.solver, violation_tol=args.tol))
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    solve = args.command != "ebm"
    ebm = args.command in ("ebm", "compare")
    report = run_experiment(config, args.out, solve=solve, ebm=ebm, fmt=args.format, threads=args.threads)

    print(f"{config.name}: J={config.J}, T={config.T}, costs={config.costs}")
    for r in report.runs:
        parts = [f"N={r.N}"]
        if r.solution is not None:
            mark = "certified" if r.certified else "NOT CERTIFIED"
            parts.append(f"optimal total revenue {r.total_revenue:.8f} ({mark})")
            if args.command == "exclusion" or config.J == 2:
                parts.append(f"excluded points {int(r.mask.sum())}")
        if r.ebm_menu is not None:
            prices = ", ".join(f"{p:g}" for p in r.ebm_menu.p)
            parts.append(f"EBM ({prices}) revenue {r.ebm_revenue:.8f}")
        if r.gap is not None:
            parts.append(f"gap {100 * r.gap:.3f}%")
        if r.error:
            parts.append(f"error: {r.error}")
        print("  " + "; ".join(parts))
    if report.mask_verdict is not None and len(report.runs) > 1:
        print(f"  exclusion region {report.mask_verdict}")
    out = args.out or config.out
    if out:
        print(f"  artifacts in {out}")
    return 0 if report.ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "verbose", 0):
        level = logging.DEBUG if args.verbose > 1 else logging.INFO
        logging.basicConfig(level=level, format="%(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    if getattr(args, "tol", None) is not None and not args.tol > 0:
        parser.error("--tol must be positive")
    try:
        if args.command == "list":
            print("\n".join(shipped_configs()))
            return 0
        if args.command == "validate":
            return _validate(args)
        return _experiment(args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"mdauction: {e}", file=sys.stderr)
        return 2
    except ExperimentError as e:
        print(f"mdauction: {e}", file=sys.stderr)
        return 1
