"""Command-line entry points.

Subcommands: norm, norming-set, construct, verify. Structured results
are canonical JSON (byte-identical for identical inputs and flags);
step metrics of a construction are additionally written as CSV next to
the trace when --out is given.

Exit codes: 0 success, 2 usage or parse error, 3 numeric failure,
4 degenerate norming set, 5 invalid input, 6 budget exhausted.
"""

import argparse
import json
import os
import sys

from . import jsonio
from .core import opnorm_estimate, opnorm_oracle, oracle_resolution
from .errors import (
    DegenerateNormingSet,
    DimensionTooLarge,
    InvalidInput,
    MaxStepsExceeded,
    NumericsError,
    PNormLabError,
)
from .norming import norming_set
from .construction import construct_full_norming_span
from .suites import SUITES, run_suite
from .tolerances import DEFAULT

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_DEGENERATE = 4
EXIT_INVALID = 5
EXIT_BUDGET = 6

_STATUS_EXIT = {
    "success": EXIT_OK,
    "MaxStepsExceeded": EXIT_BUDGET,
    "DegenerateNormingSet": EXIT_DEGENERATE,
    "ColumnBudgetExceeded": EXIT_NUMERIC,
}


def max_threads() -> int:
    """Parallelism cap from LAB_THREADS (default 1, fully serial)."""
    try:
        return max(1, int(os.environ.get("LAB_THREADS", "1")))
    except ValueError:
        return 1


def _tols(args):
    tols = DEFAULT
    if getattr(args, "tol_norm", None) is not None:
        tols = tols.replace(tol_norm=args.tol_norm)
    if getattr(args, "tol_norming", None) is not None:
        tols = tols.replace(tol_norming=args.tol_norming)
    return tols


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args):
    try:
        S = jsonio.load_operator(args.matrix)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot parse matrix file: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    if args.p is not None and args.p != S.p:
        from .core import FiniteOperator

        S = FiniteOperator(rows=S.rows, cols=S.cols, entries=S.entries, p=args.p)
    return S


def cmd_norm(args) -> int:
    S = _load(args)
    tols = _tols(args)
    try:
        est = opnorm_estimate(S, restarts=args.restarts, seed=args.seed, tols=tols)
        payload = jsonio.estimate_to_dict(est)
        if args.oracle:
            try:
                value = opnorm_oracle(S, oracle_resolution(S.cols), seed=args.seed)
                payload["oracle"] = value
                payload["oracle_agreement"] = abs(est.value - value) <= 1e-6 * max(value, 1e-300)
            except DimensionTooLarge as exc:
                payload["oracle"] = None
                payload["oracle_note"] = str(exc)
    except NumericsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(args, jsonio.canonical_dumps(payload))
    return EXIT_OK


def cmd_norming_set(args) -> int:
    S = _load(args)
    tols = _tols(args)
    try:
        ns = norming_set(S, budget=args.budget, seed=args.seed, tols=tols)
    except DegenerateNormingSet as exc:
        _emit(
            args,
            jsonio.canonical_dumps(
                {"error": "DegenerateNormingSet", "detail": str(exc), "clusters": exc.clusters}
            ),
        )
        return EXIT_DEGENERATE
    except NumericsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(args, jsonio.canonical_dumps(jsonio.norming_set_to_dict(ns)))
    return EXIT_OK


def cmd_construct(args) -> int:
    S = _load(args)
    tols = _tols(args)
    try:
        trace = construct_full_norming_span(
            S,
            args.n0,
            args.eps,
            seed=args.seed,
            max_steps=args.max_steps,
            tols=tols,
            allow_non_good_exponent=args.allow_non_good_exponent,
        )
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MaxStepsExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NumericsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(args, jsonio.canonical_dumps(jsonio.trace_to_dict(trace)))
    if args.out:
        csv_path = os.path.splitext(args.out)[0] + ".metrics.csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(jsonio.trace_metrics_csv(trace))
    return _STATUS_EXIT.get(trace.status, EXIT_NUMERIC)


def cmd_verify(args) -> int:
    if args.suite != "all" and args.suite not in SUITES:
        print(f"error: unknown suite '{args.suite}'", file=sys.stderr)
        return EXIT_USAGE
    results = run_suite(args.suite, seed=args.seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pnormlab",
        description="Numerical laboratory for contractions between lp coordinate spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, matrix=True):
        if matrix:
            sp.add_argument("matrix", help="path to a matrix JSON file")
        sp.add_argument("--p", type=float, default=None, help="override the exponent")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--restarts", type=int, default=12)
        sp.add_argument("--tol-norm", dest="tol_norm", type=float, default=None)
        sp.add_argument("--tol-norming", dest="tol_norming", type=float, default=None)
        sp.add_argument("--out", default=None, help="write JSON here instead of stdout")

    sp = sub.add_parser("norm", help="estimate the p->p operator norm")
    common(sp)
    sp.add_argument("--oracle", action="store_true", help="cross-check against the sampling oracle")
    sp.set_defaults(fn=cmd_norm)

    sp = sub.add_parser("norming-set", help="enumerate unit norming directions")
    common(sp)
    sp.add_argument("--budget", type=int, default=256)
    sp.set_defaults(fn=cmd_norming_set)

    sp = sub.add_parser("construct", help="build a contraction with full norming span")
    common(sp)
    sp.add_argument("--n0", type=int, default=0, help="columns to approximate")
    sp.add_argument("--eps", type=float, default=0.1, help="total column budget")
    sp.add_argument("--max-steps", dest="max_steps", type=int, default=None)
    sp.add_argument(
        "--allow-non-good-exponent",
        action="store_true",
        help="permit exponents other than 3 (experimental)",
    )
    sp.set_defaults(fn=cmd_construct)

    sp = sub.add_parser("verify", help="run a seeded verification suite")
    sp.add_argument(
        "--suite",
        default="all",
        help="one of: " + ", ".join(list(SUITES) + ["all"]),
    )
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PNormLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if isinstance(exc, InvalidInput):
            return EXIT_INVALID
        if isinstance(exc, DegenerateNormingSet):
            return EXIT_DEGENERATE
        if isinstance(exc, MaxStepsExceeded):
            return EXIT_BUDGET
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
