"""Command-line front end.

    screlax solve <problem> --variant sr --budget 2e6 --tol 1e-12 [--trace out.csv]
    screlax bench <config> -o results.csv
    screlax profile results.csv --tau-min 1e-16 --tau-max 1 -o profile.csv

Exit codes: 0 success, 2 input parse failure, 3 invalid problem data
(eps <= 0, negative weights, non-unit columns).  Set SCRELAX_WORKERS to
parallelize bench runs over instances.
"""

import argparse
import sys

import numpy as np

from .bench import (
    dolan_more,
    read_config,
    read_results,
    run_experiment,
    write_profile,
    write_results,
)
from .core import ProblemFormatError, read_problem
from .solve import VARIANTS, SolverConfig, solve

__all__ = ["cmd_solve", "cmd_bench", "cmd_profile", "main"]

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID = 3


def _fail(code, message):
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_solve(problem_path, variant="sr", budget=None, tolerance=1e-12,
              trace_path=None):
    """Solve one problem file; print the solution and certified gap.

    Standard output carries two CSV lines: the solution vector to six
    decimals, then ``gap,<value>`` with 17 significant digits.
    """
    try:
        problem = read_problem(problem_path)
    except ProblemFormatError as exc:
        return _fail(EXIT_PARSE, str(exc))
    except OSError as exc:
        return _fail(EXIT_PARSE, str(exc))
    except ValueError as exc:
        return _fail(EXIT_INVALID, str(exc))
    try:
        config = SolverConfig(
            variant=variant,
            flop_budget=None if budget is None else int(budget),
            gap_tolerance=tolerance,
        )
    except ValueError as exc:
        return _fail(EXIT_INVALID, str(exc))
    x, trace = solve(problem, config)
    print(",".join(f"{v:.6f}" for v in x))
    print(f"gap,{trace.final.gap:.17g}")
    if trace_path is not None:
        trace.to_csv(trace_path)
    return EXIT_OK


def cmd_bench(config_path, out_path, workers=None):
    """Run a campaign config and write the results CSV.

    Prints one summary line per variant (median final gap).
    """
    try:
        cfg = read_config(config_path)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_PARSE, str(exc))
    rows = run_experiment(cfg, workers=workers)
    write_results(rows, out_path)
    for variant in VARIANTS:
        gaps = [r.final_gap for r in rows if r.variant == variant]
        if gaps:
            print(f"{variant}: median final gap {np.median(gaps):.17g} "
                  f"({len(gaps)} instances)")
    return EXIT_OK


def cmd_profile(results_path, tau_min=1e-16, tau_max=1.0, tau_points=33,
                out_path="profile.csv"):
    """Compute Dolan-More profiles from a results CSV."""
    try:
        rows = read_results(results_path)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_PARSE, str(exc))
    if not rows:
        return _fail(EXIT_PARSE, f"{results_path}: no result rows")
    if not (0.0 < tau_min <= tau_max):
        return _fail(EXIT_INVALID, "need 0 < tau-min <= tau-max")
    grid = np.logspace(np.log10(tau_min), np.log10(tau_max), int(tau_points))
    write_profile(dolan_more(rows, grid), out_path)
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="screlax",
        description="Nonnegative elastic-net solver with safe screening and relaxing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a single problem file")
    p_solve.add_argument("problem", help="problem file path")
    p_solve.add_argument("--variant", default="sr", choices=VARIANTS)
    p_solve.add_argument("--budget", type=float, default=None,
                         help="FLOP budget (default: unbounded)")
    p_solve.add_argument("--tol", type=float, default=1e-12,
                         help="duality-gap stopping tolerance")
    p_solve.add_argument("--trace", default=None, metavar="CSV",
                         help="write the per-iteration trace here")

    p_bench = sub.add_parser("bench", help="run a benchmark campaign")
    p_bench.add_argument("config", help="campaign config file")
    p_bench.add_argument("-o", "--out", required=True, help="results CSV path")
    p_bench.add_argument("--workers", type=int, default=None,
                         help="process count (default: SCRELAX_WORKERS or 1)")

    p_prof = sub.add_parser("profile", help="profiles from a results CSV")
    p_prof.add_argument("results", help="results CSV path")
    p_prof.add_argument("--tau-min", type=float, default=1e-16)
    p_prof.add_argument("--tau-max", type=float, default=1.0)
    p_prof.add_argument("--tau-points", type=int, default=33)
    p_prof.add_argument("-o", "--out", required=True, help="profile CSV path")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args.problem, variant=args.variant, budget=args.budget,
                         tolerance=args.tol, trace_path=args.trace)
    if args.command == "bench":
        return cmd_bench(args.config, args.out, workers=args.workers)
    return cmd_profile(args.results, tau_min=args.tau_min, tau_max=args.tau_max,
                       tau_points=args.tau_points, out_path=args.out)


if __name__ == "__main__":
    sys.exit(main())
