"""Command-line interface: ``ssfilt {filter,check,bench,fit}``.

Exit codes: 0 success, 1 parse error, 2 dimension error, 3 gradient check
failure, 4 benchmark cross-validation failure, 5 fit divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import bench, io
from .errors import DimensionError
from .fit import DivergenceError, FitConfig, fit
from .model import TransferFunction
from .scan import ScanConfig, Strategy, filter_tf
from .verify import grad_check, random_stable_system, random_stable_tf

EXIT_PARSE = 1
EXIT_DIMENSION = 2
EXIT_CHECK = 3
EXIT_BENCH = 4
EXIT_DIVERGED = 5

PRECISIONS = {"f32": np.float32, "f64": np.float64}


def _err(msg: str) -> None:
    print(f"ssfilt: {msg}", file=sys.stderr)


def _scan_config(args) -> ScanConfig:
    return ScanConfig(Strategy(args.strategy), args.workers, args.block_size)


def _parse_vector(text: str | None):
    if text is None:
        return None
    return np.array([float(t) for t in text.replace(",", " ").split()])


def cmd_filter(args) -> int:
    try:
        tf = io.read_coefficients(args.coefficients)
        x = io.read_signal(args.input)
        v0 = _parse_vector(args.v0)
    except (OSError, ValueError) as exc:
        _err(f"cannot parse input: {exc}")
        return EXIT_PARSE
    try:
        y = filter_tf(tf, x.astype(PRECISIONS[args.precision]), _scan_config(args), v0)
    except DimensionError as exc:
        _err(str(exc))
        return EXIT_DIMENSION
    io.write_signal(args.output, y)
    return 0


def cmd_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    sys_ = random_stable_system(args.order, 0.9, args.seed)
    v0 = rng.standard_normal(args.order)
    x = rng.standard_normal(args.length)
    dy = rng.standard_normal(args.length)
    report = grad_check(
        sys_, v0, x, dy, _scan_config(args), precision=PRECISIONS[args.precision], corrupt=args.corrupt
    )
    print(f"gradient check: M={args.order} N={args.length} seed={args.seed} precision={args.precision}")
    print(report.format())
    if not report.passed:
        worst = report.worst()
        _err(f"gradient check failed; worst offender {worst.name} (rel {worst.max_rel:.3e}, abs {worst.max_abs:.3e})")
        return EXIT_CHECK
    return 0


def cmd_bench(args) -> int:
    try:
        records = bench.run_benchmark(
            M=args.order,
            lengths=args.length,
            implementations=args.strategy,
            workers_list=args.workers,
            precision=args.precision,
            seed=args.seed,
            block_size=args.block_size,
        )
    except bench.CrossValidationError as exc:
        _err(f"refusing to time a wrong answer: {exc}")
        return EXIT_BENCH
    if "rtf" in args.strategy:
        print("note: rtf backward unavailable (forward only)", file=sys.stderr)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            bench.write_csv(fh, records)
    else:
        bench.write_csv(sys.stdout, records)
    return 0


def cmd_fit(args) -> int:
    try:
        if args.init:
            init = io.read_coefficients(args.init)
        else:
            init = TransferFunction(np.zeros(args.order + 1), np.eye(1, args.order + 1)[0])
        M = init.order
        if args.target_output:
            if not args.input:
                _err("--target-output needs --input")
                return EXIT_PARSE
            x = io.read_signal(args.input)
            target = io.read_signal(args.target_output)
        else:
            target_tf = io.read_coefficients(args.target) if args.target else random_stable_tf(M, 0.9, args.seed)
            if target_tf.order != M:
                _err(f"target order {target_tf.order} differs from initial order {M}")
                return EXIT_DIMENSION
            x = io.read_signal(args.input) if args.input else np.random.default_rng(args.seed).standard_normal(args.length)
            target = filter_tf(target_tf, x)
        config = FitConfig(learning_rate=args.lr, iterations=args.iterations, optimizer=args.optimizer, seed=args.seed)
    except (OSError, ValueError) as exc:
        _err(f"cannot parse input: {exc}")
        return EXIT_PARSE
    if target.shape != x.shape:
        _err(f"target has {target.size} samples, input has {x.size}")
        return EXIT_DIMENSION
    if M < 1:
        _err("fitting needs order >= 1")
        return EXIT_DIMENSION
    try:
        result = fit(x, target, init, config, _scan_config(args))
    except DivergenceError as exc:
        _err(f"diverged: {exc}; last coefficients b={exc.coefficients.b.tolist()} a={exc.coefficients.a.tolist()}")
        return EXIT_DIVERGED
    print(f"iterations: {result.iterations}")
    print(f"final loss: {result.loss:.6e}")
    print("b: " + " ".join(f"{c:.12g}" for c in result.tf.b))
    print("a: " + " ".join(f"{c:.12g}" for c in result.tf.a))
    if args.output:
        io.write_coefficients(args.output, result.tf)
    return 0


def _add_scan_flags(p):
    p.add_argument("--strategy", default="sequential", choices=[s.value for s in Strategy])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--block-size", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssfilt", description="Differentiable state-space IIR filtering.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="filter a signal file")
    p.add_argument("coefficients")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--v0", help="initial state, comma or space separated")
    p.add_argument("--precision", choices=PRECISIONS, default="f64")
    _add_scan_flags(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("check", help="compare analytic gradients with finite differences")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--length", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", choices=PRECISIONS, default="f64")
    p.add_argument("--corrupt", choices=["dA", "dB", "dC", "dD", "dv0", "dx"], help=argparse.SUPPRESS)
    _add_scan_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="time forward and backward passes, CSV output")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--length", type=int, nargs="+", default=list(bench.DEFAULT_LENGTHS))
    p.add_argument("--strategy", nargs="+", default=list(bench.IMPLEMENTATIONS), choices=bench.IMPLEMENTATIONS)
    p.add_argument("--workers", type=int, nargs="+", default=[1, 4])
    p.add_argument("--precision", choices=PRECISIONS, default="f32")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--csv", help="output path (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fit", help="fit coefficients to a target response by gradient descent")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--length", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", help="target coefficient file (default: random stable filter)")
    p.add_argument("--target-output", help="target output signal file (needs --input)")
    p.add_argument("--input", help="input signal file (default: seeded white noise)")
    p.add_argument("--init", help="initial coefficient file (default: zeros)")
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--optimizer", choices=["adam", "gd"], default="adam")
    p.add_argument("--output", help="write fitted coefficients here")
    _add_scan_flags(p)
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    for name in ("workers", "block_size"):
        value = getattr(args, name, None)
        values = value if isinstance(value, list) else [value]
        if any(v is not None and v < 1 for v in values):
            _err(f"--{name.replace('_', '-')} must be positive")
            return EXIT_PARSE
    if args.command in ("check", "bench") and (args.order < 1 or min(np.atleast_1d(args.length)) < 1):
        _err("--order and --length must be positive")
        return EXIT_PARSE
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
