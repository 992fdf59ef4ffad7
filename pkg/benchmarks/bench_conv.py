#!/usr/bin/env python3
"""Time the convolution kernel backends against each other.

Usage: python benchmarks/bench_conv.py [--reps 20]

Shapes cover the residual-block convolutions at experiment scale plus the
thin configurations the test suite uses.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from freqlens import kernels

SHAPES = [
    # (batch, c_in, c_out, k, length)
    (16, 1, 64, 8, 128),
    (16, 64, 128, 8, 128),
    (16, 128, 128, 5, 128),
    (16, 128, 128, 3, 128),
    (16, 64, 128, 1, 128),
    (8, 4, 6, 5, 32),
]


def bench(fn, reps, *args) -> float:
    fn(*args)  # warm up
    start = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - start) / reps


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--reps", type=int, default=20)
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    if "compiled" not in backends:
        print("compiled extension not built; benchmarking numpy only")

    rng = np.random.default_rng(0)
    header = f"{'shape (N,Cin,Cout,k,H)':>26} {'pass':>8}"
    for name in backends:
        header += f" {name + ' ms':>12}"
    if len(backends) == 2:
        header += f" {'speedup':>8}"
    print(header)

    for shape in SHAPES:
        n, cin, cout, k, h = shape
        x = rng.normal(size=(n, cin, h))
        w = rng.normal(size=(cin, cout, k))
        b = rng.normal(size=cout)
        gy = rng.normal(size=(n, cout, h))
        flops_fwd = 2 * n * cin * cout * k * h

        for label, call in (
            ("forward", lambda mod: bench(mod.conv1d_forward, args.reps, x, w, b)),
            ("backward", lambda mod: bench(mod.conv1d_backward, args.reps, x, w, gy)),
        ):
            times = {name: call(kernels.get_backend(name)) for name in backends}
            row = f"{str(shape):>26} {label:>8}"
            for name in backends:
                row += f" {times[name] * 1e3:>12.3f}"
            if len(backends) == 2:
                row += f" {times['numpy'] / times['compiled']:>7.2f}x"
            if label == "forward":
                best = min(times.values())
                row += f"   ({flops_fwd / best / 1e9:.1f} GFLOP/s best)"
            print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
