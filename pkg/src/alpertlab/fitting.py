"""Log-log slope fits used by every scaling check."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["SlopeFit", "fit_slope"]


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float
    n_used: int

    def to_dict(self) -> dict:
        return asdict(self)


def fit_slope(x, y, *, log_base: float = 10.0, trim: int = 2) -> SlopeFit:
    """Least-squares slope of log|y| against log x.

    The ``trim`` most extreme points (by x, alternating from each end) are
    discarded before fitting, so the default drops the smallest and the
    largest abscissa.  Residual is the RMS misfit in log units.
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y))
    order = np.argsort(x)
    x, y = x[order], y[order]
    lo, hi = (trim + 1) // 2, trim // 2
    if x.size - trim >= 2:
        x, y = x[lo : x.size - hi], y[lo : y.size - hi]
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        raise ValueError("need at least two positive points to fit a slope")
    lx = np.log(x[keep]) / np.log(log_base)
    ly = np.log(y[keep]) / np.log(log_base)
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
    return SlopeFit(float(coef[0]), float(coef[1]), resid, int(keep.sum()))
