"""Independent oracles used by the tests.

These deliberately avoid the package's quadrature machinery: the Monte
Carlo convolution samples the 3D integral directly, the brute-force
exponent scan re-derives the Kato parameter inequality, and the slow cone
integral nests scipy quadratures.
"""

from __future__ import annotations

import math

import numpy as np

from conewave.grid import RadialProfile


def profile_value(w: RadialProfile, x: np.ndarray) -> np.ndarray:
    """Piecewise-linear + truncation evaluation, vectorized (test-side
    re-implementation, independent of conewave.grid.interp)."""
    r = w.grid.radii()
    vals = np.interp(np.minimum(x, w.grid.r_max), r, w.samples)
    vals = np.where(x > w.support_radius, 0.0, vals)
    return vals


def mc_convolution(
    w: RadialProfile, gamma: float, r0: float, n_samples: int, rng: np.random.Generator
):
    """Monte Carlo estimate of int |x-y|^-gamma w(|y|) dy at |x| = r0.

    Samples the offset radius z = |x-y| from the density proportional to
    z^(2-gamma) on (0, z_max) (finite variance for every gamma < 3) and the
    offset direction uniformly; returns (estimate, standard_error).
    """
    z_max = r0 + w.support_radius
    if z_max <= 0.0:
        return 0.0, 0.0
    p = 3.0 - gamma
    u = rng.random(n_samples)
    z = z_max * u ** (1.0 / p)
    ct = rng.uniform(-1.0, 1.0, n_samples)
    y = np.sqrt(np.maximum(r0 * r0 + z * z + 2.0 * r0 * z * ct, 0.0))
    vals = profile_value(w, y)
    c_norm = 4.0 * math.pi * z_max**p / p
    est = c_norm * float(np.mean(vals))
    err = c_norm * float(np.std(vals, ddof=1)) / math.sqrt(n_samples)
    return est, err


def random_profile(grid, rng: np.random.Generator, nonneg: bool = False) -> RadialProfile:
    """Smooth-ish compactly supported random profile on the grid."""
    n_sup = int(rng.integers(max(4, grid.n_r // 8), grid.n_r - 1))
    s = rng.normal(size=grid.n_r)
    if nonneg:
        s = np.abs(s)
    k = np.ones(7) / 7.0
    s = np.convolve(s, k, mode="same")
    s = np.convolve(s, k, mode="same")
    s[n_sup:] = 0.0
    return RadialProfile(grid, s, support_radius=n_sup * grid.h)


def kato_exponent_scan(gamma: float, delta: float, j_max: int = 2000):
    """Smallest j with 2(j+1)/(gamma (j+1) + 3) > 2/gamma - delta, by direct
    scan over j with a positive comparison exponent (M > 0)."""
    j_min_pos = None
    first_ok = None
    for j in range(j_max):
        M = -(gamma * (j + 1) + 3.0) / 2.0
        if M <= 0.0:
            continue
        if j_min_pos is None:
            j_min_pos = j
        expo = 2.0 * (j + 1) / (gamma * (j + 1) + 3.0)
        if expo > 2.0 / gamma - delta and first_ok is None:
            first_ok = j
            break
    return j_min_pos, first_ok


def slow_cone_integral(g_func, r0: float, t0: float, n_s: int = 400, n_lam: int = 400):
    """Nested Gauss quadrature of the damped cone integral of a continuum
    source g_func(lam, s) (independent of the package's prefix sums)."""
    xs, wxs = np.polynomial.legendre.leggauss(32)

    def inner(s):
        lo, hi = abs(r0 - (t0 - s)), r0 + (t0 - s)
        if hi <= lo:
            return 0.0
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        lam = mid + half * xs
        return float(np.sum(wxs * lam * g_func(lam, s))) * half / (2.0 * r0)

    total = 0.0
    edges = np.linspace(0.0, t0, n_s + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        svals = mid + half * xs
        total += float(np.sum(wxs * [inner(s) / (1.0 + s) ** 2 for s in svals])) * half
    return total
