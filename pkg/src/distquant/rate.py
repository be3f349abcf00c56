"""Rate-constrained quantizer allocation.

A multiple-access channel carrying R bits per unit time admits an
allocation of D_i-level sensors iff sum ceil(log2 D_i) <= R.  Under a
conditionally unbiased efficient fusion rule, the per-sensor information
of a binary rule against half the raw-observation information decides
whether spending the budget on many one-bit sensors is optimal; for
Gaussian observations that condition is implied by the low-SNR inequality
sigma_theta^2 / sigma^2 <= 2 ln(4 / pi).

Multi-level candidates are scored with breakpoint-optimized threshold
partitions (coordinate descent on a fine grid): the binary-vs-multibit
comparison needs the strongest multi-level adversary available, since the
low-SNR condition is sufficient but not necessary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import InfeasibleCandidate, InputError, InvalidLevels
from .fisher import FisherReport, gaussian_binary_threshold_fisher
from .numerics import simpson_uniform, uniform_grid
from .probmodel import ParamPrior, prior_fisher

LOW_SNR_THRESHOLD = 2.0 * math.log(4.0 / math.pi)
BINARY_CONDITION_SLACK = 1e-9


@dataclass(frozen=True)
class RateBudget:
    total_bits: int
    levels: tuple[int, ...]

    @property
    def bits_used(self) -> int:
        if any(d < 2 for d in self.levels):
            raise InvalidLevels("every sensor needs at least 2 levels")
        return sum(math.ceil(math.log2(d)) for d in self.levels)

    @property
    def feasible(self) -> bool:
        return self.bits_used <= self.total_bits


def check_feasible(budget: RateBudget) -> bool:
    """Integer-exact evaluation of sum ceil(log2 D_i) <= R."""
    return budget.feasible


def binary_optimality_condition(f_binary: float, single_obs_info: float) -> bool:
    """Sufficient condition for an all-binary allocation: the candidate
    binary rule retains at least half the raw information (boundary
    inclusive)."""
    if f_binary < 0 or single_obs_info < 0:
        raise InputError("information values must be nonnegative")
    return f_binary >= 0.5 * single_obs_info - BINARY_CONDITION_SLACK


@dataclass(frozen=True)
class LowSnrReport:
    ratio: float
    threshold: float
    holds: bool


def gaussian_low_snr_test(prior_var: float, noise_var: float) -> LowSnrReport:
    if prior_var <= 0 or noise_var <= 0:
        raise InputError("variances must be positive")
    ratio = prior_var / noise_var
    return LowSnrReport(ratio=ratio, threshold=LOW_SNR_THRESHOLD,
                        holds=bool(ratio <= LOW_SNR_THRESHOLD))


# ---------------------------------------------------------------------------
# Multi-level threshold information and candidate ranking
# ---------------------------------------------------------------------------

def multilevel_threshold_fisher(breakpoints: np.ndarray, prior: ParamPrior,
                                noise_var: float) -> float:
    """E_theta of the information in a D-level threshold partition of a
    Gaussian observation: sum_d (d/dtheta P_d)^2 / P_d averaged over the
    prior."""
    if noise_var <= 0:
        raise InputError("noise variance must be positive")
    b = np.asarray(breakpoints, dtype=float)
    if b.size and np.any(np.diff(b) <= 0):
        raise InputError("breakpoints must be strictly increasing")
    sigma = math.sqrt(noise_var)
    iv = prior.quad_interval()
    grid = uniform_grid(iv.lo, iv.hi)
    z = (b[None, :] - grid[:, None]) / sigma          # (n_grid, D-1)
    cdf = np.concatenate([np.zeros((len(grid), 1)), norm.cdf(z),
                          np.ones((len(grid), 1))], axis=1)
    pdf = np.concatenate([np.zeros((len(grid), 1)), norm.pdf(z),
                          np.zeros((len(grid), 1))], axis=1)
    cell = np.diff(cdf, axis=1)                       # P_d(theta)
    dcell = (pdf[:, :-1] - pdf[:, 1:]) / sigma        # d/dtheta P_d
    ok = cell > 1e-300
    fi = np.zeros(len(grid))
    for d in range(cell.shape[1]):
        m = ok[:, d]
        fi[m] += dcell[m, d] ** 2 / cell[m, d]
    return float(simpson_uniform(fi * prior.density(grid), grid[1] - grid[0]))


def optimize_breakpoints(levels: int, prior: ParamPrior, noise_var: float,
                         sweeps: int = 6, grid_points: int = 97) -> tuple[np.ndarray, float]:
    """Coordinate descent on breakpoints over a fine grid; deterministic.

    Starts from equal-probability quantiles of the marginal observation
    law and sweeps one breakpoint at a time, keeping the order strict.
    """
    if levels < 2:
        raise InvalidLevels("need at least 2 levels")
    sigma_y = math.sqrt(prior.variance + noise_var)
    qs = np.arange(1, levels) / levels
    b = prior.mean + sigma_y * norm.ppf(qs)
    if levels == 2:
        b = np.array([prior.mean])
    span = 4.0 * sigma_y
    best = multilevel_threshold_fisher(b, prior, noise_var)
    for _ in range(sweeps):
        improved = False
        for j in range(len(b)):
            lo = b[j - 1] if j > 0 else prior.mean - span
            hi = b[j + 1] if j + 1 < len(b) else prior.mean + span
            candidates = np.linspace(lo, hi, grid_points)[1:-1]
            for c in candidates:
                trial = b.copy()
                trial[j] = c
                f = multilevel_threshold_fisher(trial, prior, noise_var)
                if f > best + 1e-12:
                    b, best = trial, f
                    improved = True
        if not improved:
            break
    return b, best


@dataclass(frozen=True)
class CandidateReport:
    levels: int
    count: int
    bits_used: int
    per_sensor_info: float
    report: FisherReport
    rank: int = 0


def compare_rate_strategies(total_bits: int, candidates, prior: ParamPrior,
                            noise_var: float) -> list[CandidateReport]:
    """Rank homogeneous (levels, count) allocations by their data
    information under Gaussian observation noise.

    Binary sensors are scored with the threshold-at-prior-mean closed
    form; multi-level sensors with the breakpoint-optimized partition.
    Raises InfeasibleCandidate if any candidate exceeds the budget.
    """
    rows = []
    f_p = prior_fisher(prior)
    for levels, count in candidates:
        levels, count = int(levels), int(count)
        if count < 1:
            raise InputError("candidate sensor count must be >= 1")
        budget = RateBudget(total_bits, (levels,) * count)
        if not budget.feasible:
            raise InfeasibleCandidate(
                f"{count} sensors at {levels} levels need {budget.bits_used} bits "
                f"> budget {total_bits}")
        if levels == 2:
            per = gaussian_binary_threshold_fisher(prior, noise_var)
        else:
            _, per = optimize_breakpoints(levels, prior, noise_var)
        report = FisherReport(f_data=count * per, f_fc=0.0, f_prior=f_p,
                              per_sensor=(per,) * count)
        rows.append(CandidateReport(levels=levels, count=count,
                                    bits_used=budget.bits_used,
                                    per_sensor_info=per, report=report))
    rows.sort(key=lambda r: -r.report.f_data)
    return [CandidateReport(levels=r.levels, count=r.count, bits_used=r.bits_used,
                            per_sensor_info=r.per_sensor_info, report=r.report,
                            rank=i + 1)
            for i, r in enumerate(rows)]
