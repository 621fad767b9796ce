"""Summary statistics over Monte Carlo trials."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

__all__ = ["Z95", "ZeroVarianceError", "pearson", "fisher_ci", "scalar_summary"]

Z95 = 1.959963984540054


class ZeroVarianceError(ValueError):
    """Correlation requested for a constant sample."""


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-d sequences of equal length")
    if x.size < 3:
        raise ValueError("at least three observations are required")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVarianceError("zero variance")
    if np.array_equal(dx, dy):
        return 1.0
    if np.array_equal(dx, -dy):
        return -1.0
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def fisher_ci(r: float, n: int, z: float = Z95) -> tuple[float, float]:
    """Confidence interval for a correlation via the Fisher z-transform."""
    if n <= 3:
        return -1.0, 1.0
    if abs(r) >= 1.0:
        return r, r
    centre = math.atanh(r)
    half = z / math.sqrt(n - 3)
    return math.tanh(centre - half), math.tanh(centre + half)


def scalar_summary(values: Sequence[float]) -> dict:
    """Count, mean, sample variance and normal 95% CI half-width."""
    v = np.asarray(values, dtype=float)
    count = int(v.size)
    mean = float(v.mean()) if count else math.nan
    var = float(v.var(ddof=1)) if count > 1 else math.nan
    half = Z95 * math.sqrt(var / count) if count > 1 else math.nan
    return {"count": count, "mean": mean, "variance": var, "ci95_half_width": half}
