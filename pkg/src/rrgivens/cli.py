"""Command-line entry point: ``rrgivens {schedule,verify,bench}``.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import DEFAULT_VARIANTS, PRECISIONS, VARIANTS, plot_records, run_bench, write_csv
from .schedule import ParameterError, build_circle_schedule
from .verify import run_verification

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rrgivens",
        description="Round-robin Givens parametrization of orthogonal and unitary matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="print the circle-method block schedule")
    p.add_argument("--n", type=int, required=True, help="matrix dimension (>= 2)")
    p.add_argument("--m", type=int, default=None, help="restriction bound; inactive pairs get '*'")
    p.add_argument("--seed", type=int, default=None,
                   help="shuffle the initial permutation with this seed (identity if omitted)")

    p = sub.add_parser("verify", help="run the randomized invariant suite")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("real", "unitary", "restricted"), default="real")
    p.add_argument("--workers", type=int, default=None,
                   help="worker count compared against 1 (default: all cores)")

    p = sub.add_parser("bench", help="time sequential and parallel passes, write CSV")
    p.add_argument("--n", type=_int_list, required=True, help="e.g. 256,512,1024")
    p.add_argument("--workers", type=_int_list, default=[1])
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--precision", choices=tuple(PRECISIONS), default="f64")
    p.add_argument("--variants", type=_str_list, default=list(DEFAULT_VARIANTS),
                   help=f"subset of {','.join(VARIANTS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    p.add_argument("--plot", default=None, help="also render timings to this image file")
    return parser


def cmd_schedule(args) -> int:
    n_eff = args.n + (args.n % 2) if args.n >= 2 else args.n
    perm = None
    if args.seed is not None and args.n >= 2:
        perm = np.random.default_rng(args.seed).permutation(n_eff).tolist()
        print(f"# seed={args.seed} initial_permutation={perm}", file=sys.stderr)
    s = build_circle_schedule(args.n, perm, args.m)
    sys.stdout.write(s.to_text())
    return EXIT_OK


def cmd_verify(args) -> int:
    mode = args.mode
    if mode == "real" and args.m is not None and args.m < args.n:
        mode = "restricted"
    print(f"# verify n={args.n} m={args.m if args.m is not None else args.n} "
          f"mode={mode} trials={args.trials} seed={args.seed}")
    results = run_verification(args.n, args.trials, args.seed, mode, args.m, args.workers)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("FAILED: " + ", ".join(failed))
        return EXIT_FAIL
    print("all checks passed")
    return EXIT_OK


def cmd_bench(args) -> int:
    bad = [v for v in args.variants if v not in VARIANTS]
    if bad:
        raise ParameterError(f"unknown variants {bad}")
    if args.reps < 3:
        raise ParameterError("--reps must be >= 3")
    if any(n < 2 for n in args.n):
        raise ParameterError("every --n value must be >= 2")
    # fail on an unwritable path before spending time on measurements
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    print(f"# bench seed={args.seed} precision={args.precision}", file=sys.stderr)
    try:
        records = run_bench(args.n, args.workers, args.reps, args.precision, args.variants,
                            args.seed, progress=lambda r: print(
                                f"# n={r.n} {r.variant} workers={r.workers} "
                                f"{r.mean_ms:.3f} ms", file=sys.stderr))
        write_csv(records, out)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.plot:
        plot_records(records, args.plot)
    return EXIT_OK


COMMANDS = {"schedule": cmd_schedule, "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParameterError as exc:
        parser.print_usage(sys.stderr)
        print(f"rrgivens {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"rrgivens {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
