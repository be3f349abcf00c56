"""Probability primitives: parameter priors, additive noise laws, and
finite-grid latent-variable (hierarchical conditional independence) models.

Priors and noise laws are immutable value objects exposing density / cdf /
inverse-cdf access.  Sampling is always inverse-cdf driven so a draw is a
pure function of the supplied random state.  Unbounded (Gaussian) laws are
integrated over mean +/- 8 sigma; the discarded tail mass is checked
against 1e-10 before any quadrature trusts the truncation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson, trapezoid
from scipy.stats import norm

from .errors import (
    InputError,
    QuadratureDivergence,
    UnboundedCurvature,
)
from .numerics import second_derivative, simpson_uniform, uniform_grid
from .streams import as_generator

TAIL_SIGMAS = 8.0
TAIL_MASS_TOL = 1e-10


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise InputError(f"interval [{self.lo}, {self.hi}] is empty")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, x, slack: float = 0.0) -> bool:
        return bool(np.all((x >= self.lo - slack) & (x <= self.hi + slack)))

    def covers(self, other: "Interval", slack: float = 1e-12) -> bool:
        return self.lo <= other.lo + slack and self.hi >= other.hi - slack


def _read_two_column_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column numeric CSV, optional single header row."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                x, y = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if xs:
                    raise InputError(f"{path}: malformed row {row!r}")
                continue  # header
            xs.append(x)
            ys.append(y)
    if len(xs) < 5:
        raise InputError(f"{path}: need at least 5 tabulated points")
    x = np.asarray(xs)
    if np.any(np.diff(x) <= 0):
        raise InputError(f"{path}: first column must be strictly increasing")
    return x, np.asarray(ys)


def _tabulated_cdf(grid: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Monotone high-order cumulative integral of a sampled density,
    normalized to end at exactly 1."""
    cdf = cumulative_simpson(values, x=grid, initial=0.0)
    cdf = np.maximum.accumulate(np.clip(cdf, 0.0, None))
    if cdf[-1] <= 0:
        raise InputError("tabulated density has zero mass")
    return cdf / cdf[-1]


def _inverse_cdf(u, grid: np.ndarray, cdf: np.ndarray):
    """Invert a tabulated nondecreasing cdf (flat stretches map to their
    left edge)."""
    u = np.asarray(u, dtype=float)
    idx = np.searchsorted(cdf, u, side="left")
    idx = np.clip(idx, 1, len(grid) - 1)
    c0, c1 = cdf[idx - 1], cdf[idx]
    span = np.where(c1 > c0, c1 - c0, 1.0)
    frac = np.clip((u - c0) / span, 0.0, 1.0)
    out = grid[idx - 1] + frac * (grid[idx] - grid[idx - 1])
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Parameter prior
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamPrior:
    """Prior law of the scalar parameter under estimation.

    kind is one of ``uniform``, ``gaussian``, ``tabulated``.  Tabulated
    densities are linearly interpolated and renormalized at construction.
    """

    kind: str
    support: Interval
    mean: float
    variance: float
    grid: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)
    _cdf: np.ndarray | None = field(default=None, repr=False)
    _dvalues: np.ndarray | None = field(default=None, repr=False)

    # -- constructors -------------------------------------------------

    @staticmethod
    def uniform(lo: float, hi: float) -> "ParamPrior":
        iv = Interval(float(lo), float(hi))
        if not iv.bounded or iv.width <= 0:
            raise InputError("uniform prior needs a bounded non-empty interval")
        return ParamPrior("uniform", iv, 0.5 * (iv.lo + iv.hi), iv.width ** 2 / 12.0)

    @staticmethod
    def gaussian(mean: float, variance: float) -> "ParamPrior":
        if variance <= 0:
            raise InputError("gaussian prior needs variance > 0")
        return ParamPrior("gaussian", Interval(-math.inf, math.inf),
                          float(mean), float(variance))

    @staticmethod
    def tabulated(grid, values) -> "ParamPrior":
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1:
            raise InputError("tabulated prior needs matching 1-d arrays")
        if np.any(values < 0):
            raise InputError("tabulated prior density must be nonnegative")
        if np.any(np.diff(grid) <= 0):
            raise InputError("tabulated prior grid must be strictly increasing")
        mass = trapezoid(values, grid)
        if mass <= 0:
            raise InputError("tabulated prior has zero mass")
        values = values / mass
        cdf = _tabulated_cdf(grid, values)
        mean = trapezoid(grid * values, grid)
        var = trapezoid((grid - mean) ** 2 * values, grid)
        return ParamPrior("tabulated", Interval(float(grid[0]), float(grid[-1])),
                          float(mean), float(var), grid=grid, values=values, _cdf=cdf,
                          _dvalues=np.gradient(values, grid))

    @staticmethod
    def from_csv(path) -> "ParamPrior":
        return ParamPrior.tabulated(*_read_two_column_csv(Path(path)))

    # -- law access ----------------------------------------------------

    def density(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "uniform":
            inside = (theta >= self.support.lo) & (theta <= self.support.hi)
            return np.where(inside, 1.0 / self.support.width, 0.0)
        if self.kind == "gaussian":
            return norm.pdf(theta, self.mean, math.sqrt(self.variance))
        return np.interp(theta, self.grid, self.values, left=0.0, right=0.0)

    def density_derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "uniform":
            return np.zeros_like(theta)
        if self.kind == "gaussian":
            return -(theta - self.mean) / self.variance * self.density(theta)
        return np.interp(theta, self.grid, self._dvalues, left=0.0, right=0.0)

    def log_curvature(self, theta):
        """Second derivative of ln p(theta); boundary nodes excluded for
        bounded supports (interior convention)."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "uniform":
            return np.zeros_like(theta)
        if self.kind == "gaussian":
            return np.full_like(theta, -1.0 / self.variance)
        logs = np.full_like(self.values, -np.inf)
        pos = self.values > 0
        logs[pos] = np.log(self.values[pos])
        h = np.diff(self.grid)
        if not np.allclose(h, h[0], rtol=1e-8):
            raise InputError("log_curvature needs a uniform tabulated grid")
        curv = second_derivative(logs, float(h[0]))
        interior = curv[1:-1]
        if not np.all(np.isfinite(interior)):
            raise UnboundedCurvature(
                "log-density second difference diverges on the grid interior")
        return np.interp(theta, self.grid, curv)

    def cdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "uniform":
            return np.clip((theta - self.support.lo) / self.support.width, 0.0, 1.0)
        if self.kind == "gaussian":
            return norm.cdf(theta, self.mean, math.sqrt(self.variance))
        return np.interp(theta, self.grid, self._cdf)

    def ppf(self, u):
        if self.kind == "uniform":
            return self.support.lo + np.asarray(u, dtype=float) * self.support.width
        if self.kind == "gaussian":
            return norm.ppf(u, self.mean, math.sqrt(self.variance))
        return _inverse_cdf(u, self.grid, self._cdf)

    def quad_interval(self) -> Interval:
        """Integration interval: the support, or the 8-sigma truncation for
        unbounded laws (discarded mass verified < 1e-10)."""
        if self.support.bounded:
            return self.support
        sd = math.sqrt(self.variance)
        lo, hi = self.mean - TAIL_SIGMAS * sd, self.mean + TAIL_SIGMAS * sd
        discarded = self.cdf(lo) + (1.0 - self.cdf(hi))
        if discarded > TAIL_MASS_TOL:
            raise QuadratureDivergence(
                f"prior tail mass {discarded:.2e} beyond truncation exceeds {TAIL_MASS_TOL}")
        return Interval(lo, hi)


def sample_theta(prior: ParamPrior, seed, size: int | None = None):
    """Inverse-cdf draw(s) from the prior; deterministic given the state."""
    rng = as_generator(seed)
    u = rng.random() if size is None else rng.random(size)
    out = prior.ppf(u)
    return float(out) if size is None else out


def prior_fisher(prior: ParamPrior) -> float:
    """Prior contribution to posterior Fisher information:
    -E[d^2 ln p / dtheta^2], by Simpson quadrature over the (truncated)
    support interior."""
    iv = prior.quad_interval()
    grid = uniform_grid(iv.lo, iv.hi)
    integrand = -prior.log_curvature(grid) * prior.density(grid)
    val = simpson_uniform(integrand, grid[1] - grid[0])
    return float(val)


# ---------------------------------------------------------------------------
# Noise model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    """Additive observation-noise law.

    kind is one of ``delta``, ``gaussian``, ``raised_cosine``, ``tabulated``.
    ``delta`` is the noiseless point mass at zero and has no density
    function; consumers special-case it.  ``raised_cosine`` centered at T
    has density (pi/4) cos(pi (w - T) / 2) on [T - 1, T + 1].
    """

    kind: str
    support: Interval
    sigma: float = 0.0
    center: float = 0.0
    grid: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)
    _cdf: np.ndarray | None = field(default=None, repr=False)

    @staticmethod
    def delta() -> "NoiseModel":
        return NoiseModel("delta", Interval(0.0, 0.0))

    @staticmethod
    def gaussian(sigma: float) -> "NoiseModel":
        if sigma <= 0:
            raise InputError("gaussian noise needs sigma > 0")
        s = float(sigma)
        return NoiseModel("gaussian", Interval(-TAIL_SIGMAS * s, TAIL_SIGMAS * s), sigma=s)

    @staticmethod
    def raised_cosine(center: float = 0.0) -> "NoiseModel":
        c = float(center)
        return NoiseModel("raised_cosine", Interval(c - 1.0, c + 1.0), center=c)

    @staticmethod
    def tabulated(grid, values) -> "NoiseModel":
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1:
            raise InputError("tabulated noise needs matching 1-d arrays")
        if np.any(values < 0):
            raise InputError("tabulated noise density must be nonnegative")
        if np.any(np.diff(grid) <= 0):
            raise InputError("tabulated noise grid must be strictly increasing")
        mass = trapezoid(values, grid)
        if mass <= 0:
            raise InputError("tabulated noise has zero mass")
        values = values / mass
        cdf = _tabulated_cdf(grid, values)
        return NoiseModel("tabulated", Interval(float(grid[0]), float(grid[-1])),
                          grid=grid, values=values, _cdf=cdf)

    @staticmethod
    def from_csv(path) -> "NoiseModel":
        return NoiseModel.tabulated(*_read_two_column_csv(Path(path)))

    # -- law access ----------------------------------------------------

    def density(self, w):
        if self.kind == "delta":
            raise InputError("delta noise has no density function")
        w = np.asarray(w, dtype=float)
        if self.kind == "gaussian":
            return norm.pdf(w, 0.0, self.sigma)
        if self.kind == "raised_cosine":
            out = np.zeros_like(w)
            m = np.abs(w - self.center) <= 1.0
            out[m] = (np.pi / 4.0) * np.cos((np.pi / 2.0) * (w[m] - self.center))
            return out
        return np.interp(w, self.grid, self.values, left=0.0, right=0.0)

    def cdf(self, w):
        w = np.asarray(w, dtype=float)
        if self.kind == "delta":
            return (w >= 0.0).astype(float)
        if self.kind == "gaussian":
            return norm.cdf(w, 0.0, self.sigma)
        if self.kind == "raised_cosine":
            z = np.clip(w - self.center, -1.0, 1.0)
            return 0.5 * (1.0 + np.sin((np.pi / 2.0) * z))
        return np.interp(w, self.grid, self._cdf, left=0.0, right=1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "delta":
            out = np.zeros_like(u)
            return out if out.ndim else 0.0
        if self.kind == "gaussian":
            return norm.ppf(u, 0.0, self.sigma)
        if self.kind == "raised_cosine":
            return self.center + (2.0 / np.pi) * np.arcsin(2.0 * u - 1.0)
        return _inverse_cdf(u, self.grid, self._cdf)

    def spectrum(self, f):
        """Characteristic-function access: continuous Fourier transform of
        the density under the exp(-i 2 pi f w) convention."""
        f = np.asarray(f, dtype=float)
        if self.kind == "delta":
            return np.ones_like(f, dtype=complex)
        if self.kind == "gaussian":
            return np.exp(-2.0 * np.pi ** 2 * f ** 2 * self.sigma ** 2).astype(complex)
        if self.kind == "raised_cosine":
            a = np.pi / 2.0
            b = 2.0 * np.pi * f
            base = (np.pi / 4.0) * (np.sinc((a - b) / np.pi) + np.sinc((a + b) / np.pi))
            return base * np.exp(-1j * b * self.center)
        phases = np.exp(-1j * 2.0 * np.pi * np.outer(f, self.grid))
        return trapezoid(phases * self.values[None, :], self.grid, axis=1)


def sample_noise(noise: NoiseModel, seed, size: int | None = None):
    """Inverse-cdf noise draw(s); deterministic given the state."""
    rng = as_generator(seed)
    u = rng.random() if size is None else rng.random(size)
    out = noise.ppf(u)
    return float(out) if size is None else np.asarray(out)


# ---------------------------------------------------------------------------
# Hierarchical conditional independence (latent-variable) model
# ---------------------------------------------------------------------------

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class HciModel:
    """Finite-grid latent-variable model theta -> lambda -> (Y_1..Y_N).

    Sensors are conditionally independent given the latent value by
    construction: only per-sensor tables p(y_i | lambda) are stored.
    """

    theta: np.ndarray
    p_theta: np.ndarray
    lam: np.ndarray
    p_lam_given_theta: np.ndarray          # (n_theta, n_lam)
    obs: tuple[np.ndarray, ...]            # each (n_lam, m_i)

    def __post_init__(self):
        nt, nl = len(self.theta), len(self.lam)
        if self.p_lam_given_theta.shape != (nt, nl):
            raise InputError("p(lambda|theta) table has wrong shape")
        if abs(self.p_theta.sum() - 1.0) > ROW_SUM_TOL:
            raise InputError("prior weights must sum to 1")
        _check_rows(self.p_lam_given_theta, "p(lambda|theta)")
        for i, t in enumerate(self.obs):
            if t.shape[0] != nl:
                raise InputError(f"obs table {i} has wrong lambda dimension")
            _check_rows(t, f"p(y_{i}|lambda)")

    @property
    def n_sensors(self) -> int:
        return len(self.obs)

    def marginal_obs_given_theta(self, i: int) -> np.ndarray:
        """p(y_i | theta) with the latent variable summed out."""
        return self.p_lam_given_theta @ self.obs[i]

    def joint_marginal_given_theta(self, i: int, j: int) -> np.ndarray:
        """p(y_i, y_j | theta) as an (n_theta, m_i, m_j) table."""
        return np.einsum("tl,li,lj->tij", self.p_lam_given_theta,
                         self.obs[i], self.obs[j])


def _check_rows(table: np.ndarray, name: str) -> None:
    if np.any(table < -ROW_SUM_TOL):
        raise InputError(f"{name} has negative entries")
    sums = table.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > ROW_SUM_TOL:
        raise InputError(f"{name} rows must sum to 1 within {ROW_SUM_TOL}")
