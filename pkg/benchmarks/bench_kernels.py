"""Jitted vs numpy fill of the welding log-ratio grid, plus the full table.

Usage: python benchmarks/bench_kernels.py [--grid 4096] [--order 64] [--repeat 3]
"""
import argparse
import time

import numpy as np

from weldnrg import kernels
from weldnrg.harmonic import grunsky_table, log_ratio_grid
from weldnrg.homeo import parse_homeo


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=4096)
    ap.add_argument("--order", type=int, default=64)
    ap.add_argument("--block", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--homeo", default="trig:j2=0.15@0.4,j3=0.05")
    args = ap.parse_args()

    grid = log_ratio_grid(parse_homeo(args.homeo), args.grid)
    m, b = args.grid, min(args.block, args.grid)
    out_jit = np.empty((b, m))
    out_np = np.empty((b, m))

    # compile outside the timing
    kernels.fill_log_ratio_rows(grid.theta, grid.diag, grid.logsin, 0, out_jit, use_jit=True)

    def sweep(use_jit, out):
        for i0 in range(0, m, b):
            kernels.fill_log_ratio_rows(grid.theta, grid.diag, grid.logsin, i0,
                                        out[: min(b, m - i0)], use_jit=use_jit)

    t_jit = best_of(lambda: sweep(True, out_jit), args.repeat)
    t_np = best_of(lambda: sweep(False, out_np), args.repeat)

    # same rows from both paths
    kernels.fill_log_ratio_rows(grid.theta, grid.diag, grid.logsin, 0, out_jit, use_jit=True)
    kernels.fill_log_ratio_rows(grid.theta, grid.diag, grid.logsin, 0, out_np, use_jit=False)
    diff = float(np.max(np.abs(out_jit - out_np)))

    t_table = best_of(lambda: grunsky_table(grid, args.order, block_rows=b), args.repeat)

    print(f"grid M={m}, block={b}, homeo={args.homeo}")
    print(f"  grid fill  numba : {t_jit:8.3f} s")
    print(f"  grid fill  numpy : {t_np:8.3f} s   speedup x{t_np / t_jit:.1f}")
    print(f"  max |jit - numpy|: {diff:.2e}")
    print(f"  full table N={args.order} (default backend): {t_table:.3f} s")


if __name__ == "__main__":
    main()
