"""Scaling benchmark for the two hot kernels.

* slice convolution: FFT moment path vs the O(n^2) per-point path;
* causal Duhamel march: per-diagonal accumulator (O(1) per node) vs the
  direct nested quadrature (O(n_t) per node).

Run:  PYTHONPATH=src python benchmarks/bench_cone.py
"""

import time

import numpy as np

from conewave.grid import Grid, RadialProfile
from conewave.potential import ConvolutionKernel, convolve_profile_direct
from conewave.waveops import ConeAccumulator, duhamel_direct


def bench_convolution(gamma=1.0):
    print(f"slice convolution, gamma={gamma}")
    print(f"{'n_r':>7} {'fft_ms':>9} {'direct_ms':>10} {'speedup':>8}")
    for n in (129, 257, 513, 1025, 2049):
        grid = Grid(h=4.0 / (n - 1), n_r=n, n_t=1)
        rng = np.random.default_rng(n)
        s = np.convolve(rng.normal(size=n), np.ones(5) / 5, "same")
        s[-n // 8 :] = 0.0
        w = RadialProfile(grid, s, support_radius=(n - n // 8 - 1) * grid.h)
        kern = ConvolutionKernel(gamma, grid)
        kern.apply(w)  # warm the kernel-transform cache
        t0 = time.perf_counter()
        reps = 20
        for _ in range(reps):
            kern.apply(w)
        fft_ms = (time.perf_counter() - t0) / reps * 1e3
        t0 = time.perf_counter()
        convolve_profile_direct(w, gamma)
        direct_ms = (time.perf_counter() - t0) * 1e3
        print(f"{n:>7} {fft_ms:>9.2f} {direct_ms:>10.1f} {direct_ms/fft_ms:>8.1f}x")


def bench_march():
    print("\ncausal march (full Duhamel table)")
    print(f"{'n_t':>7} {'accum_s':>9} {'direct_s':>10} {'speedup':>8}")
    for n_t in (65, 129, 257, 513):
        h = 8.0 / (n_t - 1)
        jr = max(1, int(round(1.0 / h)))
        grid = Grid(h=h, n_r=n_t + jr, n_t=n_t)
        rng = np.random.default_rng(n_t)
        r = grid.radii()
        gt = np.zeros((n_t, grid.n_r))
        for m in range(n_t):
            row = np.convolve(rng.normal(size=grid.n_r), np.ones(5) / 5, "same")
            row[r > m * h + 1.0 + 1e-12] = 0.0
            gt[m] = row

        t0 = time.perf_counter()
        acc = ConeAccumulator(grid, jr)
        for n in range(n_t):
            if n >= 1:
                acc.eval_slice(n, gt[n], min(n + jr, grid.n_r - 1))
            acc.push_slice(gt[n])
        accum_s = time.perf_counter() - t0

        t0 = time.perf_counter()
        budget = 2.0
        done = 0
        for n in range(1, n_t):
            for k in range(0, min(n + jr, grid.n_r - 1) + 1):
                if (k + n) * h <= grid.r_max + 1e-12:
                    duhamel_direct(gt, grid, k * h, n * h)
                done += 1
            if time.perf_counter() - t0 > budget:
                break
        frac = done / max(1, sum(min(n + jr, grid.n_r - 1) + 1 for n in range(1, n_t)))
        direct_s = (time.perf_counter() - t0) / max(frac, 1e-9)
        print(f"{n_t:>7} {accum_s:>9.3f} {direct_s:>10.1f} {direct_s/accum_s:>8.0f}x")


if __name__ == "__main__":
    bench_convolution()
    bench_march()
