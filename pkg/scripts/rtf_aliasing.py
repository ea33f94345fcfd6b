"""Truncation error of the FFT approximation as a function of response length.

A pole close to the unit circle needs a long impulse response; the error
against the exact recursion is printed for a range of lengths K.
"""

import argparse

import numpy as np

from ssfilt import TransferFunction, filter_tf
from ssfilt.baselines import RtfConfig, rtf_forward


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--pole", type=float, default=0.999)
    p.add_argument("--length", type=int, default=4096)
    p.add_argument("--input", choices=["step", "noise"], default="step")
    args = p.parse_args()

    tf = TransferFunction([1.0, 0.0], [1.0, -args.pole])
    if args.input == "step":
        x = np.ones(args.length)
    else:
        x = np.random.default_rng(0).standard_normal(args.length)
    exact = filter_tf(tf, x)
    print(f"pole {args.pole}, N={args.length}, {args.input} input")
    print(f"{'K':>6} {'max abs err':>14} {'rel err':>10} {'tail bound':>12}")
    for K in (16, 64, 256, 1024, 4096):
        if K > args.length:
            break
        y = rtf_forward(tf, x, RtfConfig.for_length(args.length, K))
        err = np.max(np.abs(y - exact))
        # discarded impulse tail weight, sum_{k>=K} |p|^k
        bound = abs(args.pole) ** K / (1 - abs(args.pole)) * np.max(np.abs(x))
        print(f"{K:>6} {err:>14.4e} {err / np.max(np.abs(exact)):>10.2e} {bound:>12.4e}")


if __name__ == "__main__":
    main()
