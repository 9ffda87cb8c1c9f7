"""Entropy series containers, growth-law fits, and cross-picture metrics.

The asymptotic entropy production of both pictures follows S = A + B ln n.
fit_growth recovers (A, B) by least squares against ln n over a window
that discards the short transient (default from kick 10 on).  For the
bath-dominated regime the intercept has the closed form
A = 1/2 + ln(sqrt(pi)/hbar) + ln K, so A is linear in ln K and, at large
kick strength, linear in the Lyapunov exponent ln(K/2).  Entropies are in
nats throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import FitWindowError

DEFAULT_WINDOW_START = 10
_MIN_WINDOW_POINTS = 10


@dataclass
class EntropySeries:
    """Per-kick entropy and energy record of one run.

    kicks is strictly increasing (kick 0 is the initial state); extras
    holds per-kick diagnostics such as trace or mass drift.
    """

    kicks: np.ndarray
    entropy: np.ndarray
    energy: np.ndarray
    label: str = ""
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kicks = np.asarray(self.kicks)
        self.entropy = np.asarray(self.entropy, dtype=float)
        self.energy = np.asarray(self.energy, dtype=float)
        if not (len(self.kicks) == len(self.entropy) == len(self.energy)):
            raise ValueError("kicks, entropy and energy must have equal length")
        if np.any(np.diff(self.kicks) <= 0):
            raise ValueError("kicks must be strictly increasing")


@dataclass(frozen=True)
class GrowthFit:
    """Least-squares coefficients of S = A + B ln n over a kick window."""

    A: float
    B: float
    window: tuple[int, int]
    residual_rms: float


def fit_growth(series: EntropySeries,
               window: Optional[tuple[int, int]] = None) -> GrowthFit:
    """Fit S = A + B ln n over the given window (default [10, n_max])."""
    n_max = int(series.kicks.max())
    if window is None:
        window = (DEFAULT_WINDOW_START, n_max)
    lo, hi = int(window[0]), int(window[1])
    if lo < 1:
        raise FitWindowError("window must start at kick >= 1 (ln n fit)")
    mask = (series.kicks >= lo) & (series.kicks <= hi)
    if mask.sum() < _MIN_WINDOW_POINTS:
        raise FitWindowError(
            f"window too small: {int(mask.sum())} points in [{lo}, {hi}], "
            f"need {_MIN_WINDOW_POINTS}")
    x = np.log(series.kicks[mask].astype(float))
    y = series.entropy[mask]
    design = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return GrowthFit(A=float(coef[0]), B=float(coef[1]),
                     window=(lo, hi), residual_rms=rms)


def fit_energy_slope(series: EntropySeries,
                     window: Optional[tuple[int, int]] = None) -> float:
    """Least-squares slope of <E> vs n over the window (default [10, n_max])."""
    n_max = int(series.kicks.max())
    if window is None:
        window = (DEFAULT_WINDOW_START, n_max)
    mask = (series.kicks >= window[0]) & (series.kicks <= window[1])
    if mask.sum() < 2:
        raise FitWindowError("window too small for an energy slope")
    x = series.kicks[mask].astype(float)
    design = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(design, series.energy[mask], rcond=None)
    return float(coef[1])


def predict_A(K: float, hbar: float) -> float:
    """Closed-form intercept 1/2 + ln(sqrt(pi)/hbar) + ln K of the growth law."""
    if K <= 0 or hbar <= 0:
        raise ValueError("K and hbar must be positive")
    return 0.5 + float(np.log(np.sqrt(np.pi) / hbar)) + float(np.log(K))


def regress_A_vs_lnK(k_values: Sequence[float],
                     fits: Sequence[GrowthFit]) -> tuple[float, float, float]:
    """OLS of fitted intercepts A against ln K -> (slope, intercept, r^2).

    The bath-dominated prediction corresponds to slope 1.
    """
    if len(k_values) != len(fits):
        raise ValueError("k_values and fits must have equal length")
    if len(k_values) < 4:
        raise ValueError("need at least 4 kick strengths for the regression")
    x = np.log(np.asarray(k_values, dtype=float))
    y = np.array([f.A for f in fits])
    design = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ coef
    ss_res = float(((y - fitted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[1]), float(coef[0]), r2


def convergence_metric(q_series: EntropySeries, c_series: EntropySeries,
                       window: Optional[tuple[int, int]] = None) -> float:
    """Max |S(n) - S_H(n)| between matched runs over the window."""
    if (len(q_series.kicks) != len(c_series.kicks)
            or np.any(q_series.kicks != c_series.kicks)):
        raise ValueError("kick grids do not match")
    if window is None:
        window = (DEFAULT_WINDOW_START, int(q_series.kicks.max()))
    mask = (q_series.kicks >= window[0]) & (q_series.kicks <= window[1])
    if not mask.any():
        raise ValueError("window contains no recorded kicks")
    return float(np.abs(q_series.entropy[mask] - c_series.entropy[mask]).max())
