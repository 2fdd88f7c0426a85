"""Lifespan sweeps: measure threshold blow-up times across epsilon and fit
the log-log scaling law against the theoretical exponent 2/gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .solver import Params, make_data, solve_march

__all__ = ["LifespanPoint", "LifespanFit", "lifespan_measure", "fit_slope", "sweep"]


@dataclass
class LifespanPoint:
    epsilon: float
    t_numeric: float | None  # Richardson-extrapolated; None when censored
    censored: bool
    levels: list = field(default_factory=list)  # (h, t_at_stop_threshold)
    threshold_gap: float = math.nan  # |t(1e4) - t(1e6)| at the finest grid
    richardson_increment: float = math.nan


@dataclass
class LifespanFit:
    gamma: float
    epsilons: list
    t_numerics: list
    slope: float
    slope_stderr: float
    theoretical: float
    passed: bool
    delta: float = 0.5
    points: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "epsilons": list(self.epsilons),
            "t_numerics": list(self.t_numerics),
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "theoretical": self.theoretical,
            "theoretical_upper": self.theoretical - self.delta,
            "passed": bool(self.passed),
        }


def _one_run(gamma, R, epsilon, h, t_max, family, thresholds):
    grid = Grid.for_domain(h, t_max + R, t_max)
    params = Params(
        gamma=gamma, R=R, epsilon=epsilon, grid=grid, blowup_threshold=max(thresholds)
    )
    data = make_data(family, epsilon, R, grid)
    return solve_march(params, data, store_history=False, thresholds=thresholds)


def lifespan_measure(
    gamma: float,
    R: float,
    epsilon: float,
    h: float,
    t_max: float,
    family: str = "bump_v1_only",
    thresholds=(1e4, 1e6),
    refine: int = 1,
) -> LifespanPoint:
    """Threshold blow-up time with grid-refinement acceptance.

    Runs at h, h/2, ... (``refine``+1 levels), records the stop-threshold
    crossing per level, Richardson-extrapolates the two finest levels
    assuming second order, and reports the coarse/fine threshold agreement.
    Censored when no crossing occurs before t_max at the finest level.
    """
    if gamma >= 0.0:
        raise ValueError("lifespan_measure expects the blow-up regime gamma < 0")
    levels = []
    hist = None
    for lev in range(refine + 1):
        hh = h / 2**lev
        hist = _one_run(gamma, R, epsilon, hh, t_max, family, thresholds)
        levels.append((hh, hist.blowup.t_numeric))
    stop_thr = max(thresholds)
    low_thr = min(thresholds)
    if hist.blowup.t_numeric is None:
        return LifespanPoint(epsilon=epsilon, t_numeric=None, censored=True, levels=levels)
    gap = abs(
        hist.blowup.crossings.get(stop_thr, math.nan)
        - hist.blowup.crossings.get(low_thr, math.nan)
    )
    if len(levels) >= 2 and levels[-2][1] is not None:
        t_f = levels[-1][1]
        t_c = levels[-2][1]
        extrap = t_f + (t_f - t_c) / 3.0
        inc = abs(t_f - t_c)
    else:
        extrap = levels[-1][1]
        inc = math.nan
    return LifespanPoint(
        epsilon=epsilon,
        t_numeric=extrap,
        censored=False,
        levels=levels,
        threshold_gap=gap,
        richardson_increment=inc,
    )


def fit_slope(pairs, gamma: float, delta: float = 0.5) -> LifespanFit:
    """Least-squares slope of log T against log eps with its standard error;
    passes when the slope is within 25 percent of 2/gamma."""
    pairs = [(e, t) for e, t in pairs if t is not None and t > 0.0]
    if len(pairs) < 4:
        raise ValueError("need at least 4 uncensored (eps, T) pairs")
    x = np.log([e for e, _ in pairs])
    y = np.log([t for _, t in pairs])
    n = len(x)
    xbar = x.mean()
    ybar = y.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - ybar)) / sxx)
    resid = y - (ybar + slope * (x - xbar))
    stderr = math.sqrt(float(np.sum(resid**2)) / max(n - 2, 1) / sxx)
    theo = 2.0 / gamma
    passed = abs(slope - theo) <= 0.25 * abs(theo)
    return LifespanFit(
        gamma=gamma,
        epsilons=[e for e, _ in pairs],
        t_numerics=[t for _, t in pairs],
        slope=slope,
        slope_stderr=stderr,
        theoretical=theo,
        passed=passed,
        delta=delta,
    )


def sweep(
    gamma: float,
    R: float,
    epsilons,
    h: float,
    t_max: float,
    family: str = "bump_v1_only",
    thresholds=(1e4, 1e6),
    refine: int = 1,
    delta: float = 0.5,
) -> LifespanFit:
    """Measure each sweep point (independent runs) and fit the scaling law.

    Censored points never enter the fit; epsilons must be strictly
    increasing so the monotonicity check is meaningful.
    """
    eps = list(epsilons)
    if any(b <= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly increasing")
    points = [
        lifespan_measure(gamma, R, e, h, t_max, family, thresholds, refine) for e in eps
    ]
    fit = fit_slope(
        [(p.epsilon, p.t_numeric) for p in points if not p.censored], gamma, delta
    )
    fit.points = points
    return fit
