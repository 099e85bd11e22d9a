"""Log-log power-law fitting for the scaling studies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ScalingFit", "fit_power_law"]


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    r_squared: float
    window: tuple
    offset: float = 0.0

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "prefactor": self.prefactor,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "offset": self.offset,
        }


def _loglog_fit(x, y):
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return slope, np.exp(intercept), r2


def fit_power_law(
    x,
    y,
    offset: float | None = 0.0,
    min_points: int = 8,
    min_decades: float = 1.5,
) -> ScalingFit:
    """Least-squares slope of log(y - offset) vs log(x).

    offset=None co-fits the additive offset by golden-section search on the
    value that maximizes r^2.  Raises on fewer than `min_points` samples,
    under `min_decades` of x coverage, or non-positive residuals after the
    offset subtraction.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("x and y must have equal length")
    if x.size < min_points:
        raise ValueError(f"need at least {min_points} points, got {x.size}")
    if np.any(x <= 0):
        raise ValueError("x must be positive")
    decades = np.log10(x.max() / x.min())
    if decades < min_decades - 1e-9:
        raise ValueError(f"x spans {decades:.2f} decades; need >= {min_decades}")

    if offset is not None:
        resid = y - offset
        if np.any(resid <= 0):
            resid = -resid
            if np.any(resid <= 0):
                raise ValueError("non-positive residuals after offset subtraction")
            slope, pref, r2 = _loglog_fit(x, resid)
            return ScalingFit(slope, -pref, r2, (x.min(), x.max()), offset)
        slope, pref, r2 = _loglog_fit(x, resid)
        return ScalingFit(slope, pref, r2, (x.min(), x.max()), offset)

    # co-fit the offset: maximize r^2 over offsets below min(y) (assumes the
    # power-law part is positive and decaying toward the offset)
    sign = 1.0
    yy = y
    if np.all(np.diff(yy[np.argsort(x)]) >= 0) and yy.min() < yy.max():
        pass
    lo_gap = np.ptp(yy)
    hi = yy.min() - 1e-12 * max(1.0, abs(yy.min()))
    lo = yy.min() - 10.0 * lo_gap

    def neg_r2(c):
        resid = yy - c
        if np.any(resid <= 0):
            return 1.0
        _, _, r2 = _loglog_fit(x, resid)
        return -r2

    # golden-section search
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - phi * (b - a)
    c2 = a + phi * (b - a)
    f1, f2 = neg_r2(c1), neg_r2(c2)
    for _ in range(200):
        if f1 < f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - phi * (b - a)
            f1 = neg_r2(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + phi * (b - a)
            f2 = neg_r2(c2)
        if abs(b - a) < 1e-12 * max(1.0, abs(b)):
            break
    best = 0.5 * (a + b)
    resid = yy - best
    if np.any(resid <= 0):
        raise ValueError("offset co-fit failed to keep residuals positive")
    slope, pref, r2 = _loglog_fit(x, resid)
    return ScalingFit(slope, sign * pref, r2, (x.min(), x.max()), best)
