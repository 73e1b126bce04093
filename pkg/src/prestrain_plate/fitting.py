"""Least-squares slope fits on log-log data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    stderr: float


# Below this, sweep quantities are roundoff of an exactly-zero computation
# (identity lifts evaluate around 1e-30) and a slope would be meaningless;
# genuine energies and misfits in the supported regime sit far above it.
DEGENERATE_FLOOR = 1e-16


def fit_loglog_slope(h: np.ndarray, values: np.ndarray) -> SlopeFit:
    """Fit log(values) = slope * log(h) + intercept by least squares.

    Needs at least 3 strictly positive points; raises ValueError otherwise so
    callers can report degenerate sweeps (all-zero energies) explicitly.
    """
    h = np.asarray(h, dtype=float)
    values = np.asarray(values, dtype=float)
    if h.shape != values.shape or h.ndim != 1:
        raise ValueError("need matching one-dimensional arrays")
    if h.size < 3:
        raise ValueError(f"need at least 3 points for a slope fit, got {h.size}")
    if np.any(h <= 0.0) or np.any(values <= 0.0):
        raise ValueError("log-log fit needs strictly positive data")
    x = np.log(h)
    y = np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    dof = h.size - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = np.sqrt(ss_res / dof / sxx) if dof > 0 else 0.0
    return SlopeFit(slope=float(slope), intercept=float(intercept),
                    r2=float(r2), stderr=float(stderr))
