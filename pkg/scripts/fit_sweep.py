"""Fit hidden stable biquads from white-noise responses over many seeds.

Reports how many seeds reach a coefficient error below the threshold and
the iteration counts needed.
"""

import argparse
import time

import numpy as np

from ssfilt import TransferFunction, filter_tf
from ssfilt.fit import DivergenceError, FitConfig, fit
from ssfilt.verify import random_stable_tf


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--length", type=int, default=4096)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--threshold", type=float, default=1e-3)
    args = p.parse_args()

    M = args.order
    init = TransferFunction(np.zeros(M + 1), np.eye(1, M + 1)[0])
    config = FitConfig(learning_rate=args.lr, iterations=args.iterations)
    ok, iters = 0, []
    t0 = time.perf_counter()
    for seed in range(args.seeds):
        truth = random_stable_tf(M, 0.9, seed)
        x = np.random.default_rng(seed).standard_normal(args.length)
        try:
            res = fit(x, filter_tf(truth, x), init, config)
        except DivergenceError as exc:
            print(f"seed {seed:3d}: diverged at iteration {exc.iteration}")
            continue
        err = max(np.max(np.abs(res.tf.b - truth.b)), np.max(np.abs(res.tf.a - truth.a)))
        ok += err < args.threshold
        iters.append(res.iterations)
        print(f"seed {seed:3d}: {res.iterations:5d} iterations, loss {res.loss:.2e}, coef err {err:.2e}")
    print(f"{ok}/{args.seeds} below {args.threshold:g}; median iterations {np.median(iters):.0f}; "
          f"{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
