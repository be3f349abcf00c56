"""Quantizer representations and their induced response curves.

A binary quantizer is a stochastic response function gamma(y) in [0, 1]:
the probability of emitting symbol 1 given observation y.  This covers
deterministic threshold rules (indicator of y >= T) and dithering rules
alike.  A multi-level quantizer is an ordered partition of the real line.

The response curve g(theta) = P(U = 1 | theta) is the convolution of the
response function with the noise density; for threshold rules it reduces
to the closed form 1 - F_W(T - theta).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .errors import InputError, QuadratureDivergence
from .numerics import derivative, grid_step, simpson_uniform, uniform_grid
from .probmodel import Interval, NoiseModel, _read_two_column_csv
from .streams import as_generator


@dataclass(frozen=True)
class BinaryQuantizer:
    """Stochastic binary response function.

    kinds: ``threshold`` (indicator of y >= T), ``sine`` (the smooth
    0-to-1 arch on its domain), ``tabulated`` (interpolated samples,
    clamped to the endpoint values outside the domain).
    """

    kind: str
    threshold_value: float = 0.0
    domain: Interval = Interval(-1.0, 1.0)
    grid: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    @staticmethod
    def threshold(t: float) -> "BinaryQuantizer":
        return BinaryQuantizer("threshold", threshold_value=float(t),
                               domain=Interval(-np.inf, np.inf))

    @staticmethod
    def sine(lo: float = -1.0, hi: float = 1.0) -> "BinaryQuantizer":
        return BinaryQuantizer("sine", domain=Interval(float(lo), float(hi)))

    @staticmethod
    def tabulated(grid, values) -> "BinaryQuantizer":
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1:
            raise InputError("tabulated quantizer needs matching 1-d arrays")
        if np.any(np.diff(grid) <= 0):
            raise InputError("tabulated quantizer grid must be strictly increasing")
        if np.any(values < -1e-12) or np.any(values > 1.0 + 1e-12):
            raise InputError("response values must lie in [0, 1]")
        return BinaryQuantizer("tabulated", domain=Interval(float(grid[0]), float(grid[-1])),
                               grid=grid, values=np.clip(values, 0.0, 1.0))

    @staticmethod
    def from_csv(path) -> "BinaryQuantizer":
        return BinaryQuantizer.tabulated(*_read_two_column_csv(Path(path)))

    def to_csv(self, path, n: int = 2049) -> None:
        if self.kind == "tabulated":
            grid, vals = self.grid, self.values
        else:
            lo, hi = self.domain.lo, self.domain.hi
            if not self.domain.bounded:
                lo, hi = self.threshold_value - 1.0, self.threshold_value + 1.0
            grid = uniform_grid(lo, hi, n)
            vals = self.response(grid)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y", "response"])
            for y, v in zip(grid, vals):
                w.writerow([f"{y:.17g}", f"{v:.17g}"])

    def response(self, y):
        """P(U = 1 | Y = y), vectorized."""
        y = np.asarray(y, dtype=float)
        if self.kind == "threshold":
            return (y >= self.threshold_value).astype(float)
        if self.kind == "sine":
            lo, hi = self.domain.lo, self.domain.hi
            z = np.clip((y - lo) / (hi - lo), 0.0, 1.0)
            return 0.5 * (1.0 + np.sin(np.pi * (z - 0.5)))
        return np.interp(y, self.grid, self.values)


def apply_binary(q: BinaryQuantizer, y, seed=0):
    """Draw the emitted bit: Bernoulli(response(y)).  Threshold rules are
    deterministic and consume no randomness."""
    y = np.asarray(y, dtype=float)
    if q.kind == "threshold":
        out = (y >= q.threshold_value).astype(int)
        return int(out) if out.ndim == 0 else out
    rng = as_generator(seed)
    p = q.response(y)
    out = (rng.random(p.shape) < p).astype(int)
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MultiLevelQuantizer:
    """Deterministic D-level partition with strictly increasing breakpoints.

    Output alphabet is {1, ..., D}; a tie at a breakpoint goes to the
    upper cell (generalizing the y >= T convention of the binary rule).
    """

    breakpoints: tuple[float, ...]

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        if b.size < 1:
            raise InputError("need at least one breakpoint")
        if np.any(np.diff(b) <= 0):
            raise InputError("breakpoints must be strictly increasing")

    @property
    def levels(self) -> int:
        return len(self.breakpoints) + 1


def apply_multilevel(q: MultiLevelQuantizer, y):
    """Symbol in {1, ..., D}: 1 + number of breakpoints <= y."""
    y = np.asarray(y, dtype=float)
    out = 1 + np.searchsorted(np.asarray(q.breakpoints), y, side="right")
    return int(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Response curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResponseCurve:
    """g(theta) = P(U = 1 | theta) tabulated on a uniform grid, with the
    derivative cached (4th-order finite differences unless the factory
    knows the calculus and supplies exact values)."""

    grid: np.ndarray
    values: np.ndarray
    derivative_values: np.ndarray

    def __post_init__(self):
        if not (self.grid.shape == self.values.shape == self.derivative_values.shape):
            raise InputError("curve arrays must share one shape")
        if np.any(self.values < -1e-12) or np.any(self.values > 1.0 + 1e-12):
            raise InputError("response-curve values must lie in [0, 1]")
        grid_step(self.grid)  # raises on nonuniform grids

    @staticmethod
    def from_values(grid, values, derivative_values=None) -> "ResponseCurve":
        grid = np.asarray(grid, dtype=float)
        values = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
        if derivative_values is None:
            derivative_values = derivative(values, grid_step(grid))
        return ResponseCurve(grid, values, np.asarray(derivative_values, dtype=float))

    @property
    def step(self) -> float:
        return grid_step(self.grid)

    @property
    def support(self) -> Interval:
        return Interval(float(self.grid[0]), float(self.grid[-1]))

    def value_at(self, theta):
        return np.interp(theta, self.grid, self.values)

    def derivative_at(self, theta):
        return np.interp(theta, self.grid, self.derivative_values)

    def derivative_consistency(self) -> float:
        """Max deviation between the cached derivative and a fresh
        finite-difference recomputation (storage self-check)."""
        fresh = derivative(self.values, self.step)
        return float(np.max(np.abs(fresh - self.derivative_values)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "g", "g_prime"])
            for t, v, d in zip(self.grid, self.values, self.derivative_values):
                w.writerow([f"{t:.17g}", f"{v:.17g}", f"{d:.17g}"])


REFINE_REL_TOL = 1e-6


def response_curve(q: BinaryQuantizer, noise: NoiseModel,
                   lo: float, hi: float, n: int = 2049) -> ResponseCurve:
    """Tabulate g(theta) = integral gamma(y) p_W(y - theta) dy on
    [lo, hi] with n nodes.

    Delta noise short-circuits to g = gamma.  Threshold rules use the
    closed form 1 - F_W(T - theta).  Everything else is Simpson
    quadrature over the noise support, with one grid-doubling refinement
    check (relative change > 1e-6 raises QuadratureDivergence).
    """
    grid = uniform_grid(lo, hi, n)
    if noise.kind == "delta":
        if q.kind == "sine":
            a, b = q.domain.lo, q.domain.hi
            width = b - a
            vals = q.response(grid)
            dv = np.where((grid >= a) & (grid <= b),
                          (np.pi / (2.0 * width)) * np.cos(np.pi * ((grid - a) / width - 0.5)),
                          0.0)
            return ResponseCurve.from_values(grid, vals, dv)
        return ResponseCurve.from_values(grid, q.response(grid))
    if q.kind == "threshold":
        if noise.kind == "gaussian":
            # norm.sf keeps both tails accurate where 1 - cdf would cancel
            z = (q.threshold_value - grid) / noise.sigma
            vals = norm.sf(z)
            dv = np.exp(-0.5 * z * z) / (noise.sigma * np.sqrt(2.0 * np.pi))
            return ResponseCurve.from_values(grid, vals, dv)
        vals = 1.0 - noise.cdf(q.threshold_value - grid)
        if noise.kind == "raised_cosine":
            z = q.threshold_value - grid - noise.center
            dv = np.where(np.abs(z) <= 1.0,
                          (np.pi / 4.0) * np.cos((np.pi / 2.0) * z), 0.0)
            return ResponseCurve.from_values(grid, vals, dv)
        return ResponseCurve.from_values(grid, vals)

    def tabulate(m: int) -> np.ndarray:
        w = uniform_grid(noise.support.lo, noise.support.hi, m)
        dens = noise.density(w)
        hw = w[1] - w[0]
        # g(theta_j) = int gamma(theta_j + w) p_W(w) dw
        resp = q.response(grid[:, None] + w[None, :])
        return np.array([simpson_uniform(r * dens, hw) for r in resp])

    coarse = tabulate(n)
    fine = tabulate(2 * n - 1)
    change = np.max(np.abs(fine - coarse)) / max(1e-12, np.max(np.abs(fine)))
    if change > REFINE_REL_TOL:
        raise QuadratureDivergence(
            f"response-curve quadrature changed by {change:.2e} after grid doubling")
    return ResponseCurve.from_values(grid, np.clip(fine, 0.0, 1.0))
