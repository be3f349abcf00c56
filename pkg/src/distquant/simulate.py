"""Monte Carlo experiments: end-to-end MSE of the arcsine fusion rule
against the performance limit, and the equicorrelated-information curve.

Runs are mutually independent tasks.  Every run draws from its own
counter-based substream keyed by (master seed, sensor count, run index)
and lands in a slot of a result array indexed by run, so the outputs are
bit-identical whatever the execution order or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigDomainMismatch, InputError
from .fisher import equicorrelated_fisher
from .probmodel import NoiseModel, ParamPrior
from .quantizers import BinaryQuantizer
from .streams import substream

DEFAULT_LADDER = tuple(2 ** k for k in range(4, 15))


def mle_estimate(ones_count: int, n_sensors: int) -> float:
    """Invert the mean response through the arch: (2/pi) asin(2 k/N - 1).
    The arcsine argument is in [-1, 1] by construction, so the estimate
    lives in [-1, 1]."""
    if not 0 <= ones_count <= n_sensors or n_sensors < 1:
        raise InputError("need 0 <= ones_count <= n_sensors, n_sensors >= 1")
    return (2.0 / math.pi) * math.asin(2.0 * ones_count / n_sensors - 1.0)


@dataclass(frozen=True)
class SimConfig:
    prior: ParamPrior
    noise: NoiseModel
    quantizer: BinaryQuantizer
    sensor_counts: tuple[int, ...] = DEFAULT_LADDER
    n_runs: int = 5000
    master_seed: int = 0

    def __post_init__(self):
        if min(self.sensor_counts) < 1 or self.n_runs < 1:
            raise InputError("need at least one sensor and one run")


@dataclass(frozen=True)
class SimRow:
    n_sensors: int
    mse: float
    stderr: float

    @property
    def pcrlb_limit(self) -> float:
        return 4.0 / (self.n_sensors * math.pi ** 2)

    def csv_row(self) -> list[str]:
        return [str(self.n_sensors), f"{self.mse:.17g}", f"{self.stderr:.17g}",
                f"{self.pcrlb_limit:.17g}"]

    CSV_HEADER = ["n_sensors", "mse", "stderr", "pcrlb_limit"]


@dataclass(frozen=True)
class SimResult:
    rows: tuple[SimRow, ...]


def _check_domains(cfg: SimConfig) -> None:
    q = cfg.quantizer
    if q.kind in ("sine", "tabulated") and q.domain.bounded:
        sup = cfg.prior.quad_interval()
        if not (q.domain.lo <= sup.lo and q.domain.hi >= sup.hi):
            raise ConfigDomainMismatch(
                f"prior support [{sup.lo}, {sup.hi}] exceeds the quantizer domain "
                f"[{q.domain.lo}, {q.domain.hi}]")


def _squared_error(cfg: SimConfig, n: int, run: int) -> float:
    rng = substream(cfg.master_seed, n, run)
    theta = float(cfg.prior.ppf(rng.random()))
    if cfg.noise.kind == "delta":
        y = np.full(n, theta)
    else:
        y = theta + np.asarray(cfg.noise.ppf(rng.random(n)))
    if cfg.quantizer.kind == "threshold":
        ones = int(np.count_nonzero(y >= cfg.quantizer.threshold_value))
    else:
        ones = int(np.count_nonzero(rng.random(n) < cfg.quantizer.response(y)))
    theta_hat = mle_estimate(ones, n)
    return (theta_hat - theta) ** 2


def run_mse_experiment(cfg: SimConfig, threads: int = 1) -> SimResult:
    """Per sensor count: draw theta, corrupt, quantize, fuse with the
    arcsine rule, and average the squared error over the runs.  Results
    are reproducible from the master seed alone."""
    _check_domains(cfg)
    rows = []
    for n in cfg.sensor_counts:
        errors = np.empty(cfg.n_runs)

        def fill(block) -> None:
            lo, hi = block
            for r in range(lo, hi):
                errors[r] = _squared_error(cfg, n, r)

        if threads <= 1:
            fill((0, cfg.n_runs))
        else:
            step = max(1, math.ceil(cfg.n_runs / (4 * threads)))
            blocks = [(lo, min(lo + step, cfg.n_runs))
                      for lo in range(0, cfg.n_runs, step)]
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(fill, blocks))
        mse = float(errors.mean())
        stderr = float(errors.std(ddof=1) / math.sqrt(cfg.n_runs)) if cfg.n_runs > 1 else 0.0
        rows.append(SimRow(n_sensors=n, mse=mse, stderr=stderr))
    return SimResult(rows=tuple(rows))


def equicorrelated_curve(n_sensors: int, noise_var: float, rho_grid) -> np.ndarray:
    """Rows (rho, information) for the equicorrelated Gaussian family."""
    rhos = np.asarray(rho_grid, dtype=float)
    values = np.array([equicorrelated_fisher(n_sensors, noise_var, r) for r in rhos])
    return np.column_stack([rhos, values])
