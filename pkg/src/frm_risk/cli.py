"""Command line interface: frm-risk theory|simulate|sweep|tune|table1.

Exit codes: 0 success, 2 config error, 3 mathematical regime error, 4 I/O error.
"""

import argparse
import sys

from .errors import (
    ConfigError,
    DimensionMismatch,
    FrmRiskError,
    IllConditioned,
    InterpolationSingularity,
    InvalidParameter,
    NoBracket,
    NonSquare,
    NotConverged,
    NotMonotone,
    NotPsd,
    RegimeError,
    SingularResolvent,
)
from . import experiments as ex

_CONFIG_ERRORS = (ConfigError, InvalidParameter, DimensionMismatch, NonSquare, NotPsd)
_MATH_ERRORS = (RegimeError, InterpolationSingularity, NoBracket, NotMonotone,
                SingularResolvent, IllConditioned, NotConverged)


def _build_parser():
    parser = argparse.ArgumentParser(prog="frm-risk",
                                     description="Exact excess-risk predictions and Monte Carlo "
                                                 "verification for correlated factor regression.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="path to a JSON experiment config")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", help="write the structured artifact to this path")

    p = sub.add_parser("theory", help="closed-form predictions at the configured point")
    common(p)

    p = sub.add_parser("simulate", help="theory and Monte Carlo side by side")
    common(p)
    p.add_argument("--trials", type=int, default=ex.DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("sweep", help="double-descent curve over a 1/alpha grid")
    common(p)
    p.add_argument("--grid", help="comma-separated 1/alpha values")
    p.add_argument("--trials", type=int, default=ex.DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--lambda-lo", type=float, default=ex.DEFAULT_LAMBDA_RANGE[0])
    p.add_argument("--lambda-hi", type=float, default=ex.DEFAULT_LAMBDA_RANGE[1])

    p = sub.add_parser("tune", help="ridge risk curve over lambda and the tuned optimum")
    common(p)
    p.add_argument("--lambda-lo", type=float, default=ex.DEFAULT_LAMBDA_RANGE[0])
    p.add_argument("--lambda-hi", type=float, default=ex.DEFAULT_LAMBDA_RANGE[1])

    p = sub.add_parser("table1", help="two-ratio summary grid (hard-wired scaled-unitary config)")
    common(p, config_required=False)
    p.add_argument("--trials", type=int, default=ex.DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _emit(args, csv_text, json_text):
    text = csv_text if args.format == "csv" else json_text
    if args.out:
        ex.write_text_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _print_report(report):
    for name in sorted(report.estimators):
        entry = report.estimators[name]
        theory = entry.get("theory", {})
        line = f"{name}:"
        for key in ("risk", "objective", "norm_sq", "residual_sq"):
            if key in theory:
                line += f" {key}={theory[key]:.6g}"
        if "lambda_star" in entry:
            line += f" lambda_star={entry['lambda_star']:.6g}"
        mc = entry.get("mc")
        if mc:
            line += (f" | mc risk={mc['risk']:.6g} (+/-{mc['risk_stderr']:.2g})"
                     f" gap={entry['risk_gap']:.2%}")
        print(line)
    print(f"wall_clock={report.wall_clock:.2f}s seed={report.seed}")


def _run(args):
    if args.command == "theory":
        parsed = ex.load_config(args.config)
        report = ex.cmd_theory(parsed)
        _print_report(report)
        if args.out:
            ex.write_text_atomic(args.out, report.to_json())
        return 0

    if args.command == "simulate":
        parsed = ex.load_config(args.config)
        report = ex.cmd_simulate(parsed, trials=args.trials, seed=args.seed)
        _print_report(report)
        if args.out:
            ex.write_text_atomic(args.out, report.to_json())
        return 0

    if args.command == "sweep":
        parsed = ex.load_config(args.config)
        grid = ex.DEFAULT_RATIO_GRID
        if args.grid:
            try:
                grid = tuple(float(v) for v in args.grid.split(","))
            except ValueError as exc:
                raise ConfigError(f"bad --grid value: {exc}") from exc
        rows = ex.cmd_sweep(parsed, ratio_grid=grid, trials=args.trials, seed=args.seed,
                            lambda_range=(args.lambda_lo, args.lambda_hi), workers=args.workers)
        _emit(args, ex.sweep_csv(rows), ex.rows_to_json(rows, ex.SWEEP_COLUMNS))
        return 0

    if args.command == "tune":
        parsed = ex.load_config(args.config)
        result, curve = ex.cmd_tune(parsed, lambda_range=(args.lambda_lo, args.lambda_hi))
        for key, val in sorted(result.items()):
            print(f"{key}: {val:.9g}" if isinstance(val, float) else f"{key}: {val}")
        if args.out:
            ex.write_text_atomic(args.out, ex.tune_csv(curve))
        return 0

    if args.command == "table1":
        rows = ex.cmd_table1(seed=args.seed, trials=args.trials)
        print(ex.format_table1(rows))
        if args.out:
            columns = ex.TABLE1_COLUMNS
            _emit(args, ex.table1_csv(rows), ex.rows_to_json(rows, columns))
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except _CONFIG_ERRORS as exc:
        print(f"config error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except _MATH_ERRORS as exc:
        print(f"math error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except FrmRiskError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
