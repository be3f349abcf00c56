"""Fisher-information computations for quantized sensor networks.

The posterior Fisher information splits into three nonnegative pieces:
the quantized-data contribution F_D (additive over conditionally
independent sensors), the fusion-center observation contribution F_0, and
the prior contribution F_P.  Its reciprocal is the posterior Cramer-Rao
lower bound on the MSE of any efficient, conditionally unbiased estimator.

For a binary quantizer with response curve g, the pointwise information is

    I(theta) = g'(theta)^2 / (g(theta) (1 - g(theta))),

undefined where g hits 0 or 1; curves that saturate exactly at the support
endpoints (the smooth arch solution does) are integrated over the open
interior with the endpoint cells taking the nearest interior value, which
equals the analytic limit for the constant-information arch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import (
    DegenerateResponse,
    InputError,
    SingularCovariance,
    SupportMismatch,
)
from .numerics import simpson_uniform, uniform_grid
from .probmodel import ParamPrior, prior_fisher
from .quantizers import ResponseCurve

RESPONSE_EPS = 1e-12
DATA_PROCESSING_SLACK = 1e-6


@dataclass(frozen=True)
class FisherReport:
    """Posterior Fisher information decomposition and the implied bound."""

    f_data: float
    f_fc: float
    f_prior: float
    per_sensor: tuple[float, ...]

    def __post_init__(self):
        if min(self.f_data, self.f_fc, self.f_prior) < 0:
            raise InputError("information contributions must be nonnegative")
        gap = abs(self.f_data - sum(self.per_sensor))
        if gap > 1e-12 * max(1.0, self.f_data):
            raise InputError("per-sensor contributions must sum to f_data")

    @property
    def f_total(self) -> float:
        return self.f_data + self.f_fc + self.f_prior

    @property
    def pcrlb(self) -> float:
        return 1.0 / self.f_total if self.f_total > 0 else math.inf

    def csv_row(self) -> list[str]:
        head = [self.f_data, self.f_fc, self.f_prior, self.f_total, self.pcrlb]
        return [f"{x:.17g}" for x in [*head, *self.per_sensor]]

    @staticmethod
    def csv_header(n_sensors: int) -> list[str]:
        return ["f_data", "f_fc", "f_prior", "f_total", "pcrlb",
                *[f"f_sensor_{i + 1}" for i in range(n_sensors)]]


def fi_pointwise(g: float, gprime: float) -> float:
    """I = g'^2 / (g (1 - g)) for a single response value."""
    if not (RESPONSE_EPS < g < 1.0 - RESPONSE_EPS):
        raise DegenerateResponse(
            f"response {g} is outside ({RESPONSE_EPS}, 1 - {RESPONSE_EPS}); "
            "information is undefined or unbounded here")
    return gprime * gprime / (g * (1.0 - g))


def _fi_profile(curve: ResponseCurve, lo_idx: int, hi_idx: int) -> np.ndarray:
    """I(theta) on curve nodes [lo_idx, hi_idx]; endpoint saturation is
    replaced by the nearest interior value, interior saturation raises."""
    g = curve.values[lo_idx:hi_idx + 1]
    gp = curve.derivative_values[lo_idx:hi_idx + 1]
    ok = (g > RESPONSE_EPS) & (g < 1.0 - RESPONSE_EPS)
    if not np.any(ok):
        raise DegenerateResponse("response curve is saturated everywhere on the range")
    bad_interior = ~ok
    bad_interior[0] = bad_interior[-1] = False
    if np.any(bad_interior):
        theta_bad = curve.grid[lo_idx:hi_idx + 1][bad_interior][0]
        raise DegenerateResponse(
            f"response saturates at interior node theta={theta_bad:.6g}")
    fi = np.zeros_like(g)
    fi[ok] = gp[ok] ** 2 / (g[ok] * (1.0 - g[ok]))
    if not ok[0]:
        fi[0] = fi[np.argmax(ok)]
    if not ok[-1]:
        fi[-1] = fi[len(ok) - 1 - np.argmax(ok[::-1])]
    return fi


def posterior_fisher(curve: ResponseCurve, prior: ParamPrior, n_sensors: int,
                     fc_info: float = 0.0) -> FisherReport:
    """F = N E_theta[I(theta)] + F_0 + F_P by Simpson quadrature of I
    against the prior on the curve's own nodes."""
    if n_sensors < 0:
        raise InputError("sensor count must be nonnegative")
    if fc_info < 0:
        raise InputError("fusion-center information must be nonnegative")
    iv = prior.quad_interval()
    if not curve.support.covers(iv, slack=1e-9):
        raise SupportMismatch(
            f"curve support [{curve.support.lo}, {curve.support.hi}] does not "
            f"cover the prior's integration interval [{iv.lo}, {iv.hi}]")
    h = curve.step
    lo_idx = int(np.argmin(np.abs(curve.grid - iv.lo)))
    hi_idx = int(np.argmin(np.abs(curve.grid - iv.hi)))
    if prior.support.bounded:
        # a bounded prior's density jumps at its endpoints; require nodes there
        if (abs(curve.grid[lo_idx] - iv.lo) > 1e-9 * max(1.0, h)
                or abs(curve.grid[hi_idx] - iv.hi) > 1e-9 * max(1.0, h)):
            raise SupportMismatch(
                "bounded prior endpoints must coincide with curve grid nodes")
    if hi_idx - lo_idx < 8:
        raise SupportMismatch("prior support covers too few curve nodes")
    fi = _fi_profile(curve, lo_idx, hi_idx)
    weights = prior.density(curve.grid[lo_idx:hi_idx + 1])
    f_sensor = simpson_uniform(fi * weights, h)
    per = (float(f_sensor),) * n_sensors
    return FisherReport(f_data=float(n_sensors) * float(f_sensor), f_fc=float(fc_info),
                        f_prior=prior_fisher(prior), per_sensor=per)


def gaussian_single_obs_fisher(noise_var: float) -> float:
    """Information in one unquantized Gaussian observation: 1 / sigma^2."""
    if noise_var <= 0:
        raise InputError("noise variance must be positive")
    return 1.0 / noise_var


def gaussian_binary_threshold_fisher(prior: ParamPrior, noise_var: float) -> float:
    """Per-sensor information of the threshold-at-prior-mean binary rule
    under Gaussian observation noise.

    Closed-form integrand (with x = (theta - mu) / sigma):

        I(theta) = exp(-x^2) / (2 pi sigma^2 Q(x) Q(-x)),

    averaged over the prior by Simpson quadrature.  The response enters as
    g(theta) = Q((mu - theta) / sigma); only g'^2 matters, so the value is
    insensitive to the direction convention.
    """
    if noise_var <= 0:
        raise InputError("noise variance must be positive")
    if not math.isfinite(prior.mean):
        raise InputError("prior must have a finite mean")
    iv = prior.quad_interval()
    grid = uniform_grid(iv.lo, iv.hi)
    sigma = math.sqrt(noise_var)
    x = (grid - prior.mean) / sigma
    fi = np.exp(-x * x) / (2.0 * np.pi * noise_var * norm.sf(x) * norm.cdf(x))
    val = simpson_uniform(fi * prior.density(grid), grid[1] - grid[0])
    return float(val)


def equicorrelated_fisher(n_sensors: int, noise_var: float, rho: float) -> float:
    """1^T Sigma^-1 1 for the equicorrelated Gaussian covariance, via the
    closed form N / (sigma^2 (1 + (N - 1) rho))."""
    if n_sensors < 1:
        raise InputError("need at least one sensor")
    if noise_var <= 0:
        raise InputError("noise variance must be positive")
    lo = -1.0 / (n_sensors - 1) if n_sensors > 1 else -math.inf
    denom = 1.0 + (n_sensors - 1) * rho
    if rho >= 1.0 or rho <= lo or denom <= 1e-300:
        raise SingularCovariance(
            f"rho={rho} leaves ({lo}, 1) where the covariance is positive definite")
    return n_sensors / (noise_var * denom)


@dataclass(frozen=True)
class DataProcessingReport:
    """Quantized-sensor information against the raw-observation ceiling."""

    sensor_info: float
    single_obs_info: float | None
    holds: bool | None

    @property
    def applicable(self) -> bool:
        return self.single_obs_info is not None


def data_processing_check(curve: ResponseCurve, prior: ParamPrior,
                          noise_var: float | None) -> DataProcessingReport:
    """Check F_i <= I* (quantization cannot create information).

    ``noise_var`` of None (or 0) marks the noiseless case, where the
    raw-observation information is unbounded and the check reports
    not-applicable instead of a verdict.
    """
    report = posterior_fisher(curve, prior, n_sensors=1)
    f_i = report.per_sensor[0]
    if not noise_var:
        return DataProcessingReport(f_i, None, None)
    i_star = gaussian_single_obs_fisher(noise_var)
    return DataProcessingReport(f_i, i_star, bool(f_i <= i_star + DATA_PROCESSING_SLACK))
