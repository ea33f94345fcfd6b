"""Time every implementation over the default grid and summarize speedups.

    python3 scripts/run_benchmark.py --csv bench.csv
"""

import argparse
import logging
import sys

from ssfilt import bench


def summarize(records):
    forward = {(r.implementation, r.N, r.workers): r.median_seconds for r in records if r.direction == "forward"}
    lengths = sorted({r.N for r in records})
    impls = [i for i in bench.IMPLEMENTATIONS if any(k[0] == i for k in forward)]
    print(f"{'N':>9}" + "".join(f"{i:>22}" for i in impls))
    for N in lengths:
        base = forward.get(("sequential", N, 1))
        cells = []
        for impl in impls:
            t = min((v for (i, n, _), v in forward.items() if i == impl and n == N), default=None)
            cells.append("-" if t is None or base is None else f"{t * 1e3:8.2f}ms ({t / base:5.1f}x)")
        print(f"{N:>9}" + "".join(f"{c:>22}" for c in cells))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--precision", default="f32", choices=["f32", "f64"])
    p.add_argument("--max-log2", type=int, default=20)
    p.add_argument("--workers", type=int, nargs="+", default=[1, 4])
    p.add_argument("--csv")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    lengths = [2**k for k in range(14, args.max_log2 + 1)]
    records = bench.run_benchmark(M=args.order, lengths=lengths, workers_list=args.workers, precision=args.precision)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            bench.write_csv(fh, records)
    else:
        bench.write_csv(sys.stdout, records)
    summarize(records)


if __name__ == "__main__":
    main()
