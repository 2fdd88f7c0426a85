"""Causal solvers for the damped cubic-convolution wave equation in radial
symmetry, plus the run diagnostics built on top of them.

The unknown is the transformed field u (original field times 1+t), which
satisfies the integral equation

    u = u0 + L[(V_gamma * u^2) u],

with u0 the free field of data (v0, v0+v1).  Two independent backends are
provided:

* ``solve_march``   -- discretizes the integral equation itself: at each
  slice the Duhamel term comes from the cone accumulator, and the newest
  cell is closed by a short fixed-point sweep in the current source slice;
* ``solve_dalembert`` -- rewrites r*u as a 1+1-dimensional wave equation
  with source r*(V*u^2)u/(1+t)^2 and marches it with the exact
  characteristic stencil (dt = dr).

Both record the same per-slice series (weighted norm, dissipation weight,
mass functional, sup) and the same threshold-crossing bookkeeping, so they
can be cross-validated slice by slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, RadialProfile
from .norms import NormSeries, WeightParams, weight_row, x_norm
from .potential import ConvolutionKernel
from .waveops import ConeAccumulator, FreeField, TimeWeights, lam_prefix

__all__ = [
    "NumericalAbort",
    "Params",
    "BlowupReport",
    "SolutionHistory",
    "make_data",
    "solve_march",
    "solve_dalembert",
    "PicardResult",
    "picard_window",
    "picard_local",
    "liouville",
    "scattering_check",
    "dissipation_monitor",
    "scale_symmetry_check",
]

_MAX_SLICE_SWEEPS = 4


class NumericalAbort(RuntimeError):
    """Non-finite value during a march; carries the offending slice index."""

    def __init__(self, slice_index: int, backend: str):
        super().__init__(f"non-finite value in backend {backend} at slice {slice_index}")
        self.slice_index = slice_index
        self.backend = backend


@dataclass(frozen=True)
class Params:
    """One run of the damped Hartree wave problem."""

    gamma: float
    R: float
    epsilon: float
    grid: Grid
    blowup_threshold: float = 1e6
    picard_max_iter: int = 25
    picard_tol: float = 1e-11

    def __post_init__(self):
        if not (-0.5 < self.gamma < 3.0):
            raise ValueError(f"gamma must lie in (-1/2, 3), got {self.gamma}")
        if self.R < 1.0:
            raise ValueError(f"R must be >= 1, got {self.R}")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")
        if self.blowup_threshold <= 0.0:
            raise ValueError("blowup_threshold must be positive")
        jr = self.R / self.grid.h
        if abs(jr - round(jr)) > 1e-9:
            raise ValueError("R must be an integer number of grid cells")

    @property
    def support_cells(self) -> int:
        return int(round(self.R / self.grid.h))

    def weights(self) -> WeightParams:
        return WeightParams(self.gamma, self.R)


@dataclass
class BlowupReport:
    blew_up: bool
    t_numeric: float | None
    threshold: float
    crossings: dict = field(default_factory=dict)  # threshold -> first crossing time
    refinement_levels: list = field(default_factory=list)  # (h, t_numeric) pairs


@dataclass
class SolutionHistory:
    """March output: solution table (optional), source table (optional),
    per-slice series, and blow-up bookkeeping."""

    params: Params
    grid: Grid
    n_used: int
    series: NormSeries
    blowup: BlowupReport
    u: np.ndarray | None = None
    g: np.ndarray | None = None
    backend: str = "march"
    kind: str = "u"

    def finite_propagation_violations(self) -> int:
        if self.u is None:
            raise ValueError("run stored no history")
        r = self.grid.radii()
        bad = 0
        for n in range(self.n_used):
            if np.any(self.u[n][r > n * self.grid.h + self.params.R + 1e-12] != 0.0):
                bad += 1
        return bad

    def min_value(self) -> float:
        if self.u is None:
            raise ValueError("run stored no history")
        return float(np.min(self.u[: self.n_used]))


def make_data(family: str, epsilon: float, R: float, grid: Grid):
    """Compactly supported C^2 data families scaled by epsilon.

    ``bump_v1_only``: v0 = 0, v1 = eps (1-(r/R)^2)^3 on r <= R;
    ``bump_both``: the same bump in both components.
    """
    r = grid.radii()
    x = np.minimum(r / R, 1.0)
    bump = np.where(r <= R, (1.0 - x * x) ** 3, 0.0)
    zero = RadialProfile(grid, np.zeros(grid.n_r), support_radius=R)
    if family == "bump_v1_only":
        return zero, RadialProfile(grid, epsilon * bump, support_radius=R)
    if family == "bump_both":
        b = RadialProfile(grid, epsilon * bump, support_radius=R)
        return b, b
    raise ValueError(f"unknown data family {family!r}")


class _MassWeights:
    """Vectorized exact integral of r^2 * PL(u) over the grid cells."""

    def __init__(self, grid: Grid):
        h = grid.h
        x0 = np.arange(grid.n_r - 1) * h
        x1 = x0 + h
        self.m2 = (x1**3 - x0**3) / 3.0
        self.m3 = (x1**4 - x0**4) / 4.0
        self.x0 = x0
        self.h = h

    def mass(self, row: np.ndarray) -> float:
        c1 = (row[1:] - row[:-1]) / self.h
        c0 = row[:-1] - c1 * self.x0
        return 4.0 * math.pi * float(np.sum(c0 * self.m2 + c1 * self.m3))


class _Recorder:
    def __init__(self, params: Params, thresholds):
        grid = params.grid
        self.r = grid.radii()
        self.wp = params.weights()
        self.h = grid.h
        self.R = params.R
        self.mw = _MassWeights(grid)
        n_t = grid.n_t
        self.x_slice = np.zeros(n_t)
        self.x_run = np.zeros(n_t)
        self.dissip = np.zeros(n_t)
        self.mass = np.zeros(n_t)
        self.sup_u = np.zeros(n_t)
        self.thresholds = sorted(set(thresholds) | {params.blowup_threshold})
        self.crossings: dict = {}
        self.stop_threshold = params.blowup_threshold

    def record(self, n: int, row: np.ndarray) -> bool:
        """Store slice diagnostics; True when the stop threshold is crossed."""
        t = n * self.h
        sup = float(np.max(np.abs(row)))
        self.sup_u[n] = sup
        mask = self.r <= t + self.R + 1e-12
        w = weight_row(self.wp, self.r[mask], t)
        xs = float(np.max(w * np.abs(row[mask])))
        self.x_slice[n] = xs
        self.x_run[n] = max(xs, self.x_run[n - 1] if n else 0.0)
        self.dissip[n] = float(np.max((1.0 + t + self.r) * np.abs(row))) / (1.0 + t)
        self.mass[n] = self.mw.mass(row)
        for thr in self.thresholds:
            if thr not in self.crossings and sup > thr:
                self.crossings[thr] = t
        return sup > self.stop_threshold

    def series(self, n_used: int) -> NormSeries:
        sl = slice(0, n_used)
        return NormSeries(
            t=np.arange(n_used) * self.h,
            x_norm_running=self.x_run[sl].copy(),
            dissipation=self.dissip[sl].copy(),
            mass=self.mass[sl].copy(),
            sup_u=self.sup_u[sl].copy(),
        )

    def blowup_report(self, blew_up: bool) -> BlowupReport:
        t_num = self.crossings.get(self.stop_threshold)
        return BlowupReport(
            blew_up=blew_up,
            t_numeric=t_num if blew_up else None,
            threshold=self.stop_threshold,
            crossings=dict(sorted(self.crossings.items())),
        )


def _source_row(kern: ConvolutionKernel, u_row: np.ndarray, support_radius: float) -> np.ndarray:
    """G = (V_gamma * u^2) u for one slice (undamped: no 1/(1+t)^2 here)."""
    sq = RadialProfile(kern.grid, u_row * u_row, support_radius=support_radius)
    return kern.apply(sq) * u_row


def solve_march(
    params: Params,
    data,
    nonlinear: bool = True,
    store_history: bool = True,
    thresholds=(1e4, 1e6),
) -> SolutionHistory:
    """March the integral equation causally on the characteristic grid.

    Each slice is free field + accumulated Duhamel history; the current
    slice enters only through the newest-cell closure and is resolved by a
    few fixed-point sweeps (tolerance ``params.picard_tol``).  Marching
    stops early once sup|u| exceeds ``params.blowup_threshold``.
    """
    v0, v1 = data
    grid = params.grid
    jr = params.support_cells
    if grid.n_r - 1 < grid.n_t - 1 + jr:
        raise ValueError("grid must satisfy r_max >= t_max + R for the causal march")
    kern = ConvolutionKernel(params.gamma, grid) if nonlinear else None
    free = FreeField(v0, v1, grid)
    acc = ConeAccumulator(grid, jr)
    rec = _Recorder(params, thresholds)
    n_r, n_t = grid.n_r, grid.n_t
    u_tab = np.zeros((n_t, n_r)) if store_history else None
    g_tab = np.zeros((n_t, n_r)) if store_history else None

    g_prev = np.zeros(n_r)
    n_used = 0
    blew = False
    for n in range(n_t):
        kmax = min(n + jr, n_r - 1)
        support = (n + jr) * grid.h
        base = free.slice(n)
        if n == 0 or not nonlinear:
            u_row = base
            g_row = _source_row(kern, u_row, support) if nonlinear else np.zeros(n_r)
        else:
            g_cur = g_prev
            u_row = np.zeros(n_r)
            prev_delta = math.inf
            for sweep in range(_MAX_SLICE_SWEEPS):
                dh = acc.eval_slice(n, g_cur, kmax)
                new_row = np.zeros(n_r)
                new_row[: kmax + 1] = base[: kmax + 1] + dh
                g_new = _source_row(kern, new_row, support)
                delta = float(np.max(np.abs(g_new - g_cur)))
                scale = 1.0 + float(np.max(np.abs(g_new)))
                u_row = new_row
                g_cur = g_new
                if delta <= params.picard_tol * scale:
                    break
                if delta > prev_delta and sweep >= 1:
                    break  # closure no longer contracting (late blow-up stage)
                prev_delta = delta
            g_row = g_cur
        if not np.all(np.isfinite(u_row)):
            raise NumericalAbort(n, "march")
        if store_history:
            u_tab[n] = u_row
            g_tab[n] = g_row
        crossed = rec.record(n, u_row)
        acc.push_slice(g_row)
        g_prev = g_row
        n_used = n + 1
        if crossed:
            blew = True
            break

    return SolutionHistory(
        params=params,
        grid=grid,
        n_used=n_used,
        series=rec.series(n_used),
        blowup=rec.blowup_report(blew),
        u=u_tab[:n_used] if store_history else None,
        g=g_tab[:n_used] if store_history else None,
        backend="march",
    )


def solve_dalembert(
    params: Params,
    data,
    nonlinear: bool = True,
    store_history: bool = True,
    thresholds=(1e4, 1e6),
) -> SolutionHistory:
    """Independent backend: U = r u solves U_tt - U_rr = r G/(1+t)^2 with
    odd reflection at the axis; exact characteristic stencil at dt = dr."""
    v0, v1 = data
    grid = params.grid
    jr = params.support_cells
    kern = ConvolutionKernel(params.gamma, grid) if nonlinear else None
    rec = _Recorder(params, thresholds)
    n_r, n_t = grid.n_r, grid.n_t
    h = grid.h
    r = grid.radii()
    u_tab = np.zeros((n_t, n_r)) if store_history else None
    g_tab = np.zeros((n_t, n_r)) if store_history else None

    def axis_fix(u_row):
        u_row[0] = (4.0 * u_row[1] - u_row[2]) / 3.0

    def source(u_row, n):
        if not nonlinear:
            return np.zeros(n_r)
        return _source_row(kern, u_row, (n + jr) * h)

    def record_and_check(n, u_row, g_row):
        if not np.all(np.isfinite(u_row)):
            raise NumericalAbort(n, "dalembert")
        if store_history:
            u_tab[n] = u_row
            g_tab[n] = g_row
        return rec.record(n, u_row)

    damp = 1.0 / (1.0 + np.arange(n_t) * h) ** 2

    u_prev = v0.samples.copy()
    g_prev = source(u_prev, 0)
    U_prev = r * u_prev
    blew = record_and_check(0, u_prev, g_prev)
    n_used = 1

    if n_t > 1 and not blew:
        psi = lam_prefix((v0 + v1).samples, h)
        S0 = r * g_prev * damp[0]
        U_cur = np.zeros(n_r)
        U_cur[1:-1] = (
            0.5 * (U_prev[2:] + U_prev[:-2])
            + 0.5 * (psi[2:] - psi[:-2])
            + 0.5 * h * h * S0[1:-1]
        )
        kmax = min(1 + jr, n_r - 1)
        U_cur[kmax + 1 :] = 0.0
        u_cur = np.zeros(n_r)
        u_cur[1:] = U_cur[1:] / r[1:]
        axis_fix(u_cur)
        u_cur[kmax + 1 :] = 0.0
        g_cur = source(u_cur, 1)
        blew = record_and_check(1, u_cur, g_cur)
        n_used = 2

        for n in range(1, n_t - 1):
            if blew:
                break
            S = r * g_cur * damp[n]
            U_next = np.zeros(n_r)
            U_next[1:-1] = U_cur[2:] + U_cur[:-2] - U_prev[1:-1] + h * h * S[1:-1]
            kmax = min(n + 1 + jr, n_r - 1)
            U_next[kmax + 1 :] = 0.0
            u_next = np.zeros(n_r)
            u_next[1:] = U_next[1:] / r[1:]
            axis_fix(u_next)
            u_next[kmax + 1 :] = 0.0
            g_next = source(u_next, n + 1)
            blew = record_and_check(n + 1, u_next, g_next)
            n_used = n + 2
            U_prev, U_cur = U_cur, U_next
            u_cur, g_cur = u_next, g_next

    return SolutionHistory(
        params=params,
        grid=grid,
        n_used=n_used,
        series=rec.series(n_used),
        blowup=rec.blowup_report(blew),
        u=u_tab[:n_used] if store_history else None,
        g=g_tab[:n_used] if store_history else None,
        backend="dalembert",
    )


# ---------------------------------------------------------------------------
# Picard iteration on a short window
# ---------------------------------------------------------------------------


@dataclass
class PicardResult:
    u: np.ndarray
    ratios: list
    norms: list
    iterations: int
    converged: bool
    diagnosis: str = ""


def picard_window(params: Params, data, c1: float) -> tuple[float, float]:
    """A (T, M) pair satisfying the smallness condition
    T <= sqrt(2 pi / (3 M^2 C1 R^(3-gamma))) with M sized from the free
    field's weighted norm."""
    grid = params.grid
    v0, v1 = data
    free = FreeField(v0, v1, grid)
    n_R = min(grid.n_t - 1, int(round(params.R / grid.h)))
    tab = free.table(n_R + 1)
    b = x_norm(tab, params.weights(), grid)
    M = max(2.2 * b, 1e-12)
    t_bound = math.sqrt(2.0 * math.pi / (3.0 * M * M * c1 * params.R ** (3.0 - params.gamma)))
    T = min(0.95 * t_bound, params.R - grid.h)
    T = max(grid.h, math.floor(T / grid.h) * grid.h)
    return T, M


def picard_local(params: Params, data, T: float, M: float, c1: float) -> PicardResult:
    """Iterate u -> u0 + L[(V*u^2)u] on [0, T] from u_0 = u0.

    Validates the smallness condition, tracks the weighted norms of the
    successive differences, and reports their ratios (the contraction
    factors).  A ratio above 0.6 marks the run as a failed precondition.
    """
    grid = params.grid
    n_T = grid.index_of_time(T)
    if n_T < 1:
        raise ValueError("T must span at least one slice")
    if T >= params.R:
        raise ValueError("smallness requires T < R")
    t_bound = math.sqrt(2.0 * math.pi / (3.0 * M * M * c1 * params.R ** (3.0 - params.gamma)))
    if T > t_bound * (1.0 + 1e-12):
        raise ValueError(f"T={T} violates the smallness bound {t_bound}")
    v0, v1 = data
    jr = params.support_cells
    kern = ConvolutionKernel(params.gamma, grid)
    free_tab = FreeField(v0, v1, grid).table(n_T + 1)
    wp = params.weights()
    u0_norm = x_norm(free_tab, wp, grid)
    if u0_norm > 0.5 * M * (1.0 + 1e-9):
        raise ValueError(f"free-field norm {u0_norm} exceeds M/2 = {0.5 * M}")

    u_old = free_tab.copy()
    ratios: list[float] = []
    norms: list[float] = []
    converged = False
    iterations = 0
    for it in range(params.picard_max_iter):
        g_tab = np.zeros_like(u_old)
        for m in range(n_T + 1):
            g_tab[m] = _source_row(kern, u_old[m], (m + jr) * grid.h)
        acc = ConeAccumulator(grid, jr)
        u_new = free_tab.copy()
        for n in range(n_T + 1):
            if n >= 1:
                kmax = min(n + jr, grid.n_r - 1)
                u_new[n, : kmax + 1] += acc.eval_slice(n, g_tab[n], kmax)
            acc.push_slice(g_tab[n])
        d = x_norm(u_new - u_old, wp, grid)
        norms.append(d)
        if len(norms) >= 2 and norms[-2] > 0.0:
            ratios.append(norms[-1] / norms[-2])
        u_old = u_new
        iterations = it + 1
        if d <= params.picard_tol * max(1.0, x_norm(u_new, wp, grid)):
            converged = True
            break
    diagnosis = ""
    if any(rho > 0.6 for rho in ratios):
        diagnosis = "non-contraction: a successive-difference ratio exceeded 0.6"
    return PicardResult(
        u=u_old, ratios=ratios, norms=norms, iterations=iterations,
        converged=converged, diagnosis=diagnosis,
    )


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------


def liouville(hist: SolutionHistory) -> SolutionHistory:
    """v = u/(1+t): invert the damping substitution slice by slice."""
    if hist.u is None:
        raise ValueError("run stored no history")
    t = np.arange(hist.n_used) * hist.grid.h
    v = hist.u / (1.0 + t)[:, None]
    return SolutionHistory(
        params=hist.params,
        grid=hist.grid,
        n_used=hist.n_used,
        series=hist.series,
        blowup=hist.blowup,
        u=v,
        g=None,
        backend=hist.backend,
        kind="v",
    )


def dissipation_monitor(v_hist: SolutionHistory) -> tuple[np.ndarray, np.ndarray]:
    """Series t -> (1+t) sup_r (1+t+r)|v| for a Liouville-transformed run."""
    if v_hist.kind != "v":
        raise ValueError("dissipation_monitor expects the output of liouville()")
    grid = v_hist.grid
    r = grid.radii()
    t = np.arange(v_hist.n_used) * grid.h
    vals = np.empty(v_hist.n_used)
    for n in range(v_hist.n_used):
        vals[n] = (1.0 + t[n]) * float(np.max((1.0 + t[n] + r) * np.abs(v_hist.u[n])))
    return t, vals


def scattering_check(hist: SolutionHistory, t_star: float, keep_fields: bool = False):
    """Weighted distance to the outgoing free wave.

    Builds u_plus by subtracting the remaining Duhamel tail (truncated at
    the end of the run) and returns (t, sup_r (1+t+r)|u - u_plus|) for
    t >= t_star, plus an estimate of the neglected tail.  Refuses blown-up
    runs.  With ``keep_fields`` the pointwise tail slices are returned as a
    fourth element (slice index -> array), for cross-validation.
    """
    if hist.blowup.blew_up:
        raise ValueError("scattering_check refuses runs that blew up")
    if hist.g is None:
        raise ValueError("run must store source history")
    if hist.params.gamma <= 0.0:
        raise ValueError("scattering diagnostics need gamma > 0")
    grid = hist.grid
    h = grid.h
    n_star = grid.index_of_time(t_star)
    M = hist.n_used - 1
    if n_star >= M:
        raise ValueError("t_star must leave room before the end of the run")
    jr = hist.params.support_cells
    n_r = grid.n_r
    tw = TimeWeights(grid.n_t, h)
    r = grid.radii()

    Arev = np.zeros(grid.n_t + n_r + 2)
    boff = grid.n_t
    Brev = np.zeros(grid.n_t + n_r + 2)
    Bx = np.zeros(grid.n_t + n_r + 2)
    wts = np.zeros(grid.n_t + 2)  # wts[m] = sum_{m' >= m} w T, built downward

    phi_cache: dict[int, np.ndarray] = {}

    def push(m: int, first_push: bool):
        L = min(m + jr + 1, n_r - 1)
        phi = lam_prefix(hist.g[m][: L + 1], h)
        w = tw.wr[m - 1] if first_push else tw.w_slice[m]
        Arev[m : m + L + 1] += w * phi
        Brev[boff - m : boff - m + L + 1] += w * phi
        lam = np.arange(L + 1) * h
        Bx[boff - m : boff - m + L + 1] += w * lam * hist.g[m][: L + 1]
        wts[m] = wts[m + 1] + w * phi[L]
        phi_cache[m] = phi

    out_t = []
    out_val = []
    fields: dict[int, np.ndarray] = {}
    # accumulate slices from the top down; after slice n+1 is in, emit t_n
    for m in range(M, n_star, -1):
        push(m, first_push=(m == M))
        n = m - 1
        k = np.arange(1, n_r)
        first = Brev[boff + k - n]
        over = k - n > jr + 1
        if np.any(over):
            first[over] = wts[n + 1]
        # antidiagonal part (slices n+1..k+n); those with the cone edge past
        # their support fold into the running total sum
        second = Arev[n + k].copy()
        mceil = np.maximum((k + n - jr) // 2, n + 1)
        second += wts[n + 1] - wts[np.minimum(mceil, M + 1)]
        # slices m > k+n contribute Phi_m(m-(k+n)) via the negative diagonal
        neg_ok = n + k <= M
        neg_idx = np.where(neg_ok, boff - np.minimum(n + k, boff), 0)
        second += np.where(neg_ok, Brev[neg_idx], 0.0)

        phi_np1 = phi_cache[n + 1]
        Lp = phi_np1.shape[0] - 1
        i_np1 = phi_np1[np.minimum(k + 1, Lp)] - phi_np1[np.minimum(np.abs(k - 1), Lp)]
        # bottom cell [t_n, t_{n+1}] replaced by the closure
        A1 = 1.0 + n * h
        B1 = A1 + h
        lg = math.log1p(h / A1)
        J1r = 1.0 - (2.0 * A1 / h) * lg + A1 / B1
        K1r = lg - h / B1
        J2r = K1r - J1r
        gp1 = hist.g[n + 1]
        gn = hist.g[n]
        tail = np.zeros(n_r)
        tail[1:] = (first - second - tw.wr[n] * i_np1) / (2.0 * k * h)
        tail[1:] += J1r * gp1[1:] + J2r * gn[1:]
        ax = Bx[boff - n] - tw.wr[n] * h * gp1[1]
        tail[0] = ax + J1r * gp1[0] + J2r * gn[0]
        t = n * h
        out_t.append(t)
        out_val.append(float(np.max((1.0 + t + r) * np.abs(tail))))
        if keep_fields:
            fields[n] = tail.copy()

    out_t.reverse()
    out_val.reverse()
    # crude estimate of the neglected tail beyond the run, assuming the
    # source keeps its (1+s)^-(gamma+1) envelope
    supg = float(np.max(np.abs(hist.g[M])))
    q = 3.0 + hist.params.gamma
    U = 1.0 + M * h
    rem = supg * U ** (hist.params.gamma + 1.0) * (
        U ** (2.0 - q) / (q - 2.0) - (1.0 + t_star) * U ** (1.0 - q) / (q - 1.0)
    ) / 2.0
    if keep_fields:
        return np.array(out_t), np.array(out_val), rem, fields
    return np.array(out_t), np.array(out_val), rem


def _build_scaled_data(hist: SolutionHistory, s: float):
    """Data of the s-scaled companion run, read off the base run at the
    slice t = s - 1 (s >= 1): u_scaled(r, 0) = s^e u(s r, s-1) with
    e = (3-gamma)/2, and the matching time derivative by centered
    differences."""
    grid = hist.grid
    h = grid.h
    gamma = hist.params.gamma
    n1 = grid.index_of_time(s - 1.0)
    if n1 + 1 >= hist.n_used:
        raise ValueError("base run too short to read scaled data")
    e = 0.5 * (3.0 - gamma)
    r = grid.radii()
    rs = s * r
    if rs[-1] > grid.r_max + 1e-9:
        pass  # values beyond the base grid are outside the data support anyway
    u_here = np.interp(np.minimum(rs, grid.r_max), r, hist.u[n1])
    if n1 >= 1:
        ut_here = np.interp(
            np.minimum(rs, grid.r_max), r, (hist.u[n1 + 1] - hist.u[n1 - 1]) / (2.0 * h)
        )
    else:
        ut_here = np.interp(np.minimum(rs, grid.r_max), r, (hist.u[1] - hist.u[0]) / h)
    sup = ((s - 1.0) + hist.params.R) / s
    u0 = s**e * u_here
    ut0 = s ** (e + 1.0) * ut_here
    u0[r > sup + 1e-12] = 0.0
    ut0[r > sup + 1e-12] = 0.0
    v0 = RadialProfile(grid, u0, support_radius=min(sup, grid.r_max))
    v1 = RadialProfile(grid, ut0 - u0, support_radius=min(sup, grid.r_max))
    return v0, v1


def scale_symmetry_check(params: Params, data, sigma: float, t_check: float | None = None) -> float:
    """Equivariance of the original field under the scaling symmetry.

    For sigma >= 1 the companion run starts from the scaled state of the
    base run; for sigma < 1 the roles invert (the map at 1/sigma is applied
    to the companion and compared against the base).  Returns the sup
    mismatch of v over the aligned grid points; 0 for sigma = 1 by
    determinism.
    """
    if not (0.5 - 1e-12 <= sigma <= 2.0 + 1e-12):
        raise ValueError("sigma must lie in [1/2, 2]")
    grid = params.grid
    h = grid.h
    if abs(round(1.0 / h) - 1.0 / h) > 1e-9:
        raise ValueError("scale check needs 1/h integer so shifted times stay on the grid")
    s = sigma if sigma >= 1.0 else 1.0 / sigma
    gamma = params.gamma
    e = 0.5 * (3.0 - gamma)

    t_b = t_check if t_check is not None else (grid.t_max - (s - 1.0)) / s - 2 * h
    base = solve_march(params, data)
    if base.blowup.blew_up:
        raise ValueError("scale check needs a run without blow-up")
    if s == 1.0:
        comp = solve_march(params, data)  # identical inputs, deterministic
    else:
        comp = solve_march(params, _build_scaled_data(base, s))

    mism = 0.0
    off = round((s - 1.0) / h)
    n = 1
    while True:
        tn = n * h
        npr = round(s * n) + off  # base-run slice at time s(1+t_n) - 1
        if npr >= base.n_used or n >= comp.n_used or tn > t_b:
            break
        kk = np.arange(comp.grid.n_r)
        ks = s * kk
        k_int = np.abs(ks - np.round(ks)) < 1e-9
        ks_idx = np.round(ks[k_int]).astype(int)
        valid = ks_idx <= base.grid.n_r - 1
        comp_u = comp.u[n][k_int][valid]
        base_u = base.u[npr][ks_idx[valid]]
        if sigma >= 1.0:
            # v_comp(y, t) vs s^(5-g)/2 v_base(s y, s(1+t)-1)
            mism = max(mism, float(np.max(np.abs(comp_u - s**e * base_u))) / (1.0 + tn))
        else:
            # inverse reading: v_base at the pulled-back point vs
            # sigma^(5-g)/2 v_comp
            tb = npr * h
            lhs_v = base_u / (1.0 + tb)
            rhs_v = sigma ** (0.5 * (5.0 - gamma)) * comp_u / (1.0 + tn)
            mism = max(mism, float(np.max(np.abs(lhs_v - rhs_v))))
        n += 1
    return mism
