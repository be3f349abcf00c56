"""Shared grid numerics: Simpson quadrature and finite differences.

Conventions used throughout the package:

* all continuous quadrature is composite Simpson on a uniform grid,
  2049 nodes unless a caller overrides;
* first derivatives on uniform grids are 4th-order central in the
  interior with one-sided 2nd-order stencils at the two endpoints
  (derivative noise dominates Fisher-information error, hence the
  higher order);
* second derivatives are 2nd-order central with one-sided ends.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson

DEFAULT_QUAD_NODES = 2049


def uniform_grid(lo: float, hi: float, n: int = DEFAULT_QUAD_NODES) -> np.ndarray:
    if not lo < hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if n < 5:
        raise ValueError("grids need at least 5 nodes")
    return np.linspace(lo, hi, n)


def grid_step(grid: np.ndarray) -> float:
    """Step of a uniform grid; raises if spacing is not uniform."""
    steps = np.diff(grid)
    h = steps[0]
    if not np.allclose(steps, h, rtol=1e-9, atol=1e-12 * max(1.0, abs(h))):
        raise ValueError("grid is not uniformly spaced")
    return float(h)


def simpson_uniform(values: np.ndarray, h: float) -> float:
    """Composite Simpson integral of samples on a uniform grid."""
    return float(simpson(values, dx=h))


def quadrature(f, lo: float, hi: float, n: int = DEFAULT_QUAD_NODES) -> float:
    grid = uniform_grid(lo, hi, n)
    return simpson_uniform(f(grid), grid[1] - grid[0])


def derivative(values: np.ndarray, h: float) -> np.ndarray:
    """First derivative: 4th-order central interior, 2nd-order ends."""
    v = np.asarray(values, dtype=float)
    if v.size < 5:
        raise ValueError("need at least 5 samples")
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    # 2nd-order one-sided / near-boundary stencils
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    d[1] = (v[2] - v[0]) / (2.0 * h)
    d[-2] = (v[-1] - v[-3]) / (2.0 * h)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return d


def second_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Second derivative: 4th-order central interior, 2nd-order ends."""
    v = np.asarray(values, dtype=float)
    if v.size < 7:
        raise ValueError("need at least 7 samples")
    d = np.empty_like(v)
    d[2:-2] = (-v[:-4] + 16.0 * v[1:-3] - 30.0 * v[2:-2]
               + 16.0 * v[3:-1] - v[4:]) / (12.0 * h * h)
    d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h)
    d[1] = (v[0] - 2.0 * v[1] + v[2]) / (h * h)
    d[-2] = (v[-3] - 2.0 * v[-2] + v[-1]) / (h * h)
    d[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / (h * h)
    return d


def cumulative_integral(values: np.ndarray, h: float) -> np.ndarray:
    """Cumulative trapezoid with a leading zero, same length as input."""
    return cumulative_trapezoid(values, dx=h, initial=0.0)
