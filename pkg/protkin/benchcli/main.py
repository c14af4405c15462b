import argparse
import os
import sys
from typing import Sequence

import structlog
from pydantic import ValidationError

from protkin import config
from protkin.benchcli import fold, rmsd
from protkin.benchcli.csvio import (
    BENCH_COLUMNS,
    BENCH_HEADER,
    PRECISION_HEADER,
    read_bench_csv,
    write_csv,
)
from protkin.benchcli.gradcheck import run_gradcheck
from protkin.benchcli.models import GradcheckConfig, Model, PrecisionConfig, ScalingConfig
from protkin.benchcli.precision import run_precision_experiment
from protkin.benchcli.scaling import fit_complexity, list_ops, run_scaling_benchmark
from protkin.errors import (
    EXIT_CHECK_FAILED,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    ProtkinError,
    UsageError,
)
from protkin.instrumentation import write_metrics
from protkin.logging import init as init_logging

log = structlog.get_logger(__name__)

PRECISION_COLUMNS = ["atom_index", "mean_error", "ci95_low", "ci95_high"]


def _out(text: str) -> None:
    sys.stdout.write(text + "\n")


def _output_path(path: str | None, default: str) -> str:
    return path or os.path.join(config.OUTPUT_DIR, default)


def gradcheck(args: argparse.Namespace) -> int:
    report = run_gradcheck(
        GradcheckConfig(
            model=args.model, length=args.len, trials=args.trials, seed=args.seed, tol=args.tol
        )
    )
    _out(f"max_relative_error={report.max_error:.3e}")
    for name, error in report.loss_errors.items():
        _out(f"max_relative_error[{name}]={error:.3e}")
    if report.max_gradient_sum is not None:
        _out(f"max_gradient_sum={report.max_gradient_sum:.3e}")
    if report.max_rotation_derivative is not None:
        _out(f"max_rotation_derivative={report.max_rotation_derivative:.3e}")
    if report.passed:
        return EXIT_OK
    w = report.worst
    if w is not None:
        _out(
            f"worst: seed={w.seed} loss={w.loss} index={w.index} "
            f"analytic={w.analytic:.17g} numeric={w.numeric:.17g}"
        )
    return EXIT_CHECK_FAILED


def bench(args: argparse.Namespace) -> int:
    cfg = ScalingConfig(
        op=args.op,
        min_len=args.min_len,
        max_len=args.max_len,
        step=args.step,
        batch=args.batch,
        reps=args.reps,
        threads=args.threads,
        seed=args.seed,
    )
    rows = run_scaling_benchmark(cfg)
    path = _output_path(args.csv, f"bench_{cfg.op}.csv")
    write_csv(path, rows, BENCH_HEADER, BENCH_COLUMNS)
    if args.metrics_out:
        write_metrics(args.metrics_out)
    _out(f"rows={len(rows)} csv={path}")
    return EXIT_OK


def precision(args: argparse.Namespace) -> int:
    cfg = PrecisionConfig(
        max_len=args.max_len,
        reps=args.reps,
        threshold=args.threshold,
        bins=args.bins,
        seed=args.seed,
    )
    report = run_precision_experiment(cfg)
    path = _output_path(args.csv, "precision.csv")
    write_csv(path, report.rows, PRECISION_HEADER, PRECISION_COLUMNS)
    _out(f"max_mean_error={report.max_mean_error:.3e}")
    _out(f"atom_index={report.probe_index} mean_error={report.probe_error:.3e}")
    _out(f"trend_slope={report.trend_slope:.3e}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def fit(args: argparse.Namespace) -> int:
    results = fit_complexity(read_bench_csv(args.csv))
    status = EXIT_OK
    for r in results:
        _out(
            f"op={r.op_name} pass={r.pass_} slope={r.slope:.2f} "
            f"intercept={r.intercept:.4f} lengths={r.lengths}"
        )
        if args.band is not None and not args.band[0] <= r.slope <= args.band[1]:
            status = EXIT_CHECK_FAILED
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=config.APP_NAME, description="differentiable protein geometry"
    )
    parser.add_argument("--version", action="version", version=config.VERSION)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    fold.add_parser(sub)
    rmsd.add_parser(sub)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients")
    p.add_argument("--model", choices=[str(m) for m in Model], required=True)
    p.add_argument("--len", type=int, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(handler=gradcheck)

    p = sub.add_parser("bench", help="time forward and backward passes over sequence lengths")
    p.add_argument("--op", choices=list_ops(), required=True)
    p.add_argument("--min-len", type=int, default=100)
    p.add_argument("--max-len", type=int, default=700)
    p.add_argument("--step", type=int, default=100)
    p.add_argument("--batch", type=int, default=config.DEFAULT_BATCH_SIZE)
    p.add_argument("--reps", type=int, default=config.DEFAULT_REPS)
    p.add_argument("--threads", type=int, default=config.DEFAULT_THREADS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv")
    p.add_argument("--metrics-out", help="write pass-duration histograms in Prometheus format")
    p.set_defaults(handler=bench)

    p = sub.add_parser("precision", help="single-precision drift of the backbone chain")
    p.add_argument("--max-len", type=int, default=config.PRECISION_MAX_LEN)
    p.add_argument("--reps", type=int, default=config.DEFAULT_REPS)
    p.add_argument("--threshold", type=float, default=config.PRECISION_THRESHOLD)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv")
    p.set_defaults(handler=precision)

    p = sub.add_parser("fit", help="log-log complexity fit of a bench CSV")
    p.add_argument("csv")
    p.add_argument("--band", nargs=2, type=float, metavar=("LO", "HI"))
    p.set_defaults(handler=fit)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    init_logging(verbose=args.verbose)
    try:
        if args.command == "fit" and args.band is not None and args.band[0] > args.band[1]:
            raise UsageError(f"--band {args.band[0]} {args.band[1]} is empty")
        return args.handler(args)
    except ValidationError as e:
        log.debug("invalid options", command=args.command, errors=e.error_count())
        sys.stderr.write(f"{args.command}: invalid options: {e}\n")
        return EXIT_USAGE
    except ProtkinError as e:
        log.debug("command failed", command=args.command, error=type(e).__name__)
        sys.stderr.write(f"{args.command}: {e.message}\n")
        return e.exit_code
    except OSError as e:
        sys.stderr.write(f"{args.command}: {e}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
