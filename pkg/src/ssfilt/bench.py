"""Timing harness for forward and backward evaluation across implementations.

Every implementation is cross-checked against the sequential kernel on the
same data before it is timed. Backward timings start from a prebuilt tape
and exclude the forward pass.
"""

from __future__ import annotations

import csv
import datetime as _dt
import logging
import statistics
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .baselines import (
    RtfConfig,
    dispatch_backward,
    dispatch_filter,
    rtf_forward,
    unrolled_backward,
    unrolled_filter,
)
from .errors import NotDiagonalizableError
from .grad import filter_backward
from .scan import ScanConfig, Strategy, filter_forward
from .model import tf_to_ss
from .verify import random_stable_tf, relative_error

log = logging.getLogger(__name__)

IMPLEMENTATIONS = (
    "sequential",
    "sequential-dispatch",
    "blocked-scan",
    "diagonal-scan",
    "unrolled",
    "rtf",
)
PARALLEL_IMPLEMENTATIONS = ("blocked-scan", "diagonal-scan")
DEFAULT_LENGTHS = tuple(2**k for k in range(14, 21))
CSV_COLUMNS = ("implementation", "direction", "M", "N", "workers", "precision", "median_seconds", "iterations")
PRECISIONS = {"f32": np.float32, "f64": np.float64}
MIN_WARMUP = 2
MIN_RUNS = 5

# relative tolerance against the sequential kernel, by precision
TOLERANCES = {
    "f64": {"default": 1e-9, "diagonal-scan": 1e-6, "rtf": 1e-6},
    "f32": {"default": 1e-4, "diagonal-scan": 1e-3, "rtf": 1e-3},
}


class CrossValidationError(RuntimeError):
    pass


@dataclass(frozen=True)
class BenchRecord:
    implementation: str
    direction: str
    M: int
    N: int
    workers: int
    precision: str
    median_seconds: float
    iterations: int
    timestamp: str | None = None

    def __post_init__(self):
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"direction must be forward or backward, got {self.direction!r}")
        if not self.median_seconds > 0:
            raise ValueError("median_seconds must be positive")
        if self.iterations < MIN_RUNS:
            raise ValueError(f"a median needs at least {MIN_RUNS} timed runs")

    def row(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}

    @classmethod
    def from_row(cls, row: dict) -> BenchRecord:
        return cls(
            implementation=row["implementation"],
            direction=row["direction"],
            M=int(row["M"]),
            N=int(row["N"]),
            workers=int(row["workers"]),
            precision=row["precision"],
            median_seconds=float(row["median_seconds"]),
            iterations=int(row["iterations"]),
        )


def write_csv(stream, records) -> None:
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec.row())


def read_csv(stream) -> list[BenchRecord]:
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [BenchRecord.from_row(row) for row in reader]


def median_time(fn: Callable[[], object], warmup: int = 2, runs: int = 5) -> float:
    """Median wall time of ``runs`` calls after ``warmup`` untimed calls."""
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return max(statistics.median(times), 1e-9)


def _forward_backward(impl: str, sys, tf, x, cfg: ScanConfig):
    """Callables ``forward() -> (y, tape)`` and ``backward(tape, dy)`` or ``None``."""
    if impl in ("sequential", "blocked-scan", "diagonal-scan"):
        return (lambda: filter_forward(sys, None, x, cfg)), (lambda t, dy: filter_backward(t, dy, cfg))
    if impl == "sequential-dispatch":
        return (lambda: dispatch_filter(sys, None, x)), dispatch_backward
    if impl == "unrolled":
        return (lambda: unrolled_filter(sys, None, x)), unrolled_backward
    if impl == "rtf":
        rcfg = RtfConfig.for_length(x.size)
        return (lambda: (rtf_forward(tf, x, rcfg), None)), None
    raise ValueError(f"unknown implementation {impl!r}")


def _config_for(impl: str, workers: int, block_size: int | None) -> ScanConfig:
    strategy = {"blocked-scan": Strategy.BLOCKED, "diagonal-scan": Strategy.DIAGONAL}.get(impl, Strategy.SEQUENTIAL)
    return ScanConfig(strategy, workers if impl in PARALLEL_IMPLEMENTATIONS else 1, block_size)


def run_benchmark(
    M: int = 2,
    lengths=DEFAULT_LENGTHS,
    implementations=IMPLEMENTATIONS,
    workers_list=(1, 4),
    precision: str = "f32",
    seed: int = 0,
    block_size: int | None = None,
    warmup: int = MIN_WARMUP,
    runs: int = MIN_RUNS,
    radius: float = 0.9,
) -> list[BenchRecord]:
    """Cross-validate then time each implementation on every length.

    Raises ``CrossValidationError`` if an implementation disagrees with the
    sequential kernel beyond ``TOLERANCES``.
    """
    if warmup < MIN_WARMUP or runs < MIN_RUNS:
        raise ValueError(f"need at least {MIN_WARMUP} warm-up and {MIN_RUNS} timed runs")
    dtype = PRECISIONS[precision]
    tf = random_stable_tf(M, radius, seed)
    sys = tf_to_ss(tf).astype(dtype)
    rng = np.random.default_rng(seed)
    records = []
    for N in lengths:
        x = rng.standard_normal(N).astype(dtype)
        dy = rng.standard_normal(N).astype(dtype)
        ref_y, ref_tape = filter_forward(sys, None, x)
        ref_grad = filter_backward(ref_tape, dy)
        for impl in implementations:
            tol = TOLERANCES[precision].get(impl, TOLERANCES[precision]["default"])
            worker_counts = workers_list if impl in PARALLEL_IMPLEMENTATIONS else (1,)
            for p in worker_counts:
                cfg = _config_for(impl, p, block_size)
                fwd, bwd = _forward_backward(impl, sys, tf, x, cfg)
                try:
                    y, tape = fwd()
                except NotDiagonalizableError as exc:
                    log.warning("%s skipped at N=%d: %s", impl, N, exc)
                    continue
                err = relative_error(y, ref_y)
                if not err <= tol:
                    raise CrossValidationError(f"{impl} forward (N={N}, p={p}) off by {err:.3g} > {tol:g}")
                if bwd is not None:
                    grad = bwd(tape, dy)
                    for name, ref in ref_grad.items():
                        err = relative_error(getattr(grad, name), ref)
                        if not err <= tol:
                            raise CrossValidationError(
                                f"{impl} backward {name} (N={N}, p={p}) off by {err:.3g} > {tol:g}"
                            )
                stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
                common = dict(M=M, N=N, workers=p, precision=precision, iterations=runs, timestamp=stamp)
                records.append(BenchRecord(impl, "forward", median_seconds=median_time(fwd, warmup, runs), **common))
                if bwd is None:
                    log.info("%s backward: unavailable", impl)
                    continue
                records.append(
                    BenchRecord(
                        impl, "backward", median_seconds=median_time(lambda: bwd(tape, dy), warmup, runs), **common
                    )
                )
                log.info("N=%d %s p=%d done", N, impl, p)
    return records
