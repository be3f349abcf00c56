"""Optimal binary quantizer synthesis.

Three routes produce the optimal response curve g* and, given a noise law,
the quantizer gamma realizing it:

* closed form: on a bounded interval the minimax (constant-information)
  response is the smooth arch g*(t) = (1 + sin(pi ((t-a)/(b-a) - 1/2))) / 2;
* variational: for a strictly positive prior on [a, b] the stationarity
  condition of the information functional L(g) = E[g'^2 / (g(1-g))] is the
  second-order ODE  p g'^2 (1-2g) = 2 g (1-g) (g'' p + g' p'),  solved by
  shooting on g'(a) with bisection on the terminal value (collocation
  fallback);
* spectral: gamma is recovered from g* and the noise by Fourier
  deconvolution of the derivative signal (compactly supported, so
  zero-padding is exact), Tikhonov-regularized and polished by a
  nonnegativity-projected least-squares refinement, since a monotone
  gamma means gamma' >= 0.

A cautionary note on the variational route: with pinned boundary values
the stationary point is the global *minimum* of L over feasible monotone
curves (substituting g = sin^2 phi turns L into the weighted Dirichlet
energy 4 int phi'^2 p, minimized by phi' proportional to 1/p, which is
exactly the ODE's first integral I p^2 = const).  The solver therefore
verifies minimality of L and, for the uniform prior where the solution is
also the equalizer rule, maximin optimality of the worst-case information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_bvp, solve_ivp

from .errors import InputError, NoConvergence, NotAMaximum, SpectrumUnderflow
from .numerics import (
    cumulative_integral,
    derivative,
    second_derivative,
    simpson_uniform,
    uniform_grid,
)
from .probmodel import NoiseModel, ParamPrior
from .quantizers import BinaryQuantizer, ResponseCurve

BOUNDARY_INSET = 1e-6          # g(a), 1 - g(b) at the solver boundaries
TIKHONOV_ALPHA_REL = 1e-10
CLIP_TOL = 1e-3
DEAD_BIN_REL = 1e-12
SIGNIFICANT_BIN_REL = 1e-6
DEAD_ENERGY_FRACTION = 0.9
RAW_ATTEMPT_BAND = 0.25        # polish only if the raw inverse is this close to [0, 1]


@dataclass(frozen=True)
class FailureRecord:
    """Diagnostics for a quantizer recovery that produced no valid gamma."""

    reason: str
    raw_min: float
    raw_max: float
    forward_residual: float


@dataclass(frozen=True)
class ExtremumReport:
    """Perturbation audit of a variational solution.

    ``l_value`` is the information functional at the solution;
    ``is_minimum`` records whether no feasible perturbation went below it;
    ``is_maximin`` (uniform priors only, else None) records whether no
    perturbation improved the worst-case pointwise information.
    """

    l_value: float
    min_fi: float
    n_perturbations: int
    l_below_fraction: float
    is_minimum: bool
    is_maximin: bool | None


@dataclass(frozen=True)
class DesignSolution:
    gstar: ResponseCurve
    method: str                                  # closed_form | bvp | deconvolution
    ode_residual: float | None = None
    gamma: "BinaryQuantizer | FailureRecord | None" = None
    extremum: ExtremumReport | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# Closed form
# ---------------------------------------------------------------------------

def least_favorable_gstar(theta_min: float, theta_max: float, n: int = 2049) -> ResponseCurve:
    """Constant-information arch on [theta_min, theta_max] with exact
    boundary values 0 and 1 and the analytic derivative cached."""
    if not theta_min < theta_max:
        raise InputError("need theta_min < theta_max")
    grid = uniform_grid(theta_min, theta_max, n)
    width = theta_max - theta_min
    phase = np.pi * ((grid - theta_min) / width - 0.5)
    values = 0.5 * (1.0 + np.sin(phase))
    deriv = (np.pi / (2.0 * width)) * np.cos(phase)
    return ResponseCurve(grid, values, deriv)


def threshold_optimal_noise(t: float = 0.0) -> NoiseModel:
    """The noise law under which the threshold-at-t rule attains the
    constant-information arch: raised cosine centered at t."""
    return NoiseModel.raised_cosine(t)


# ---------------------------------------------------------------------------
# Variational solution
# ---------------------------------------------------------------------------

def stationarity_residual(grid: np.ndarray, g: np.ndarray, prior: ParamPrior,
                          gp: np.ndarray | None = None,
                          gpp: np.ndarray | None = None) -> np.ndarray:
    """Pointwise LHS - RHS of  p g'^2 (1-2g) = 2 g (1-g) (g'' p + g' p').

    Derivatives are taken by finite differences when not supplied, so this
    is an independent check applicable to any tabulated curve.
    """
    h = grid[1] - grid[0]
    if gp is None:
        gp = derivative(g, h)
    if gpp is None:
        gpp = second_derivative(g, h)
    p = prior.density(grid)
    pp = prior.density_derivative(grid)
    return p * gp ** 2 * (1.0 - 2.0 * g) - 2.0 * g * (1.0 - g) * (gpp * p + gp * pp)


def information_functional(curve: ResponseCurve, prior: ParamPrior) -> float:
    """L(g) = E_theta[g'^2 / (g (1-g))] over the prior support."""
    g = np.clip(curve.values, 1e-15, 1.0 - 1e-15)
    fi = curve.derivative_values ** 2 / (g * (1.0 - g))
    return simpson_uniform(fi * prior.density(curve.grid), curve.step)


def _scalar_law(prior: ParamPrior):
    """Fast scalar density / derivative closures for the ODE right side."""
    if prior.kind == "uniform":
        inv_width = 1.0 / prior.support.width
        return (lambda t: inv_width), (lambda t: 0.0)
    if prior.kind == "gaussian":
        mean, var = prior.mean, prior.variance
        norm_const = 1.0 / math.sqrt(2.0 * math.pi * var)
        def dens(t):
            return norm_const * math.exp(-0.5 * (t - mean) ** 2 / var)
        return dens, (lambda t: -(t - mean) / var * dens(t))
    grid, vals, dvals = prior.grid, prior.values, prior._dvalues
    return (lambda t: float(np.interp(t, grid, vals)),
            lambda t: float(np.interp(t, grid, dvals)))


def _ode(prior: ParamPrior):
    dens, ddens = _scalar_law(prior)

    def rhs(t, z):
        g, gp = z
        gg = g * (1.0 - g)
        p = dens(t)
        return [gp, (p * gp * gp * (1.0 - 2.0 * g) - 2.0 * gg * gp * ddens(t))
                / (2.0 * gg * p)]
    return rhs


def _shoot(prior: ParamPrior, a: float, b: float, rtol: float = 1e-11):
    rhs = _ode(prior)
    target = 1.0 - BOUNDARY_INSET

    def saturating(t, z):
        return z[0] - (1.0 - 0.5 * BOUNDARY_INSET)
    saturating.terminal = True

    def integrate(slope):
        return solve_ivp(rhs, (a, b), [BOUNDARY_INSET, slope], method="DOP853",
                         rtol=rtol, atol=rtol * 1e-2, dense_output=True, events=saturating)

    def miss(sol):
        if sol.t_events[0].size:
            return 1.0  # saturated before reaching b: overshoot
        return sol.y[0, -1] - target

    s_lo, s_hi = 1e-12, 1e-4
    sol_hi = integrate(s_hi)
    tries = 0
    while miss(sol_hi) < 0:
        s_hi *= 4.0
        tries += 1
        if tries > 40:
            raise NoConvergence("shooting bracket not found")
        sol_hi = integrate(s_hi)
    best = None
    for _ in range(60):
        mid = 0.5 * (s_lo + s_hi)
        sol = integrate(mid)
        m = miss(sol)
        if m >= 0:
            s_hi, best = mid, sol
        else:
            s_lo = mid
        if abs(m) < 1e-13 or (s_hi - s_lo) < 1e-18 * max(1.0, s_hi):
            break
    if best is None or best.t_events[0].size:
        best = integrate(s_hi)
        if best.t_events[0].size:
            raise NoConvergence("bisection kept saturating before the far boundary")
    return best


def _collocate(prior: ParamPrior, a: float, b: float, n: int):
    def fun(t, z):
        g, gp = z
        gg = np.clip(g * (1.0 - g), 1e-14, None)
        p = prior.density(t)
        pp = prior.density_derivative(t)
        return np.vstack([gp, (p * gp ** 2 * (1.0 - 2.0 * g) - 2.0 * gg * gp * pp)
                          / (2.0 * gg * p)])

    def bc(za, zb):
        return np.array([za[0] - BOUNDARY_INSET, zb[0] - (1.0 - BOUNDARY_INSET)])

    mesh = uniform_grid(a, b, 201)
    ramp = BOUNDARY_INSET + (1.0 - 2.0 * BOUNDARY_INSET) * (mesh - a) / (b - a)
    init = np.vstack([ramp, np.full_like(mesh, 1.0 / (b - a))])
    sol = solve_bvp(fun, bc, mesh, init, tol=1e-10, max_nodes=200000)
    if not sol.success:
        raise NoConvergence(f"collocation fallback failed: {sol.message}")
    return sol


def solve_euler_lagrange(prior: ParamPrior, n: int = 2049,
                         verify: bool = True, n_perturbations: int = 200,
                         perturb_seed: int = 20240601,
                         rtol: float = 1e-11) -> DesignSolution:
    """Solve the stationarity ODE on the prior's support with boundary
    values inset by 1e-6 (the equation divides by g (1-g)).

    Retry ladder: shooting with bisection on the initial slope, then
    damped-Newton collocation; NoConvergence if both fail.  When
    ``verify`` is set the solution is audited against monotone-projected
    random perturbations; NotAMaximum propagates if the audit finds a
    feasible curve with a smaller information functional, since the
    solution is characterized as the constrained minimizer (see module
    docstring).
    """
    if not prior.support.bounded:
        raise InputError("variational design needs a bounded prior support")
    a, b = prior.support.lo, prior.support.hi
    interior = uniform_grid(a, b, 513)[1:-1]
    if np.min(prior.density(interior)) <= 0:
        raise InputError("prior density must be strictly positive on the interior")
    grid = uniform_grid(a, b, n)
    try:
        sol = _shoot(prior, a, b, rtol=rtol)
        values = sol.sol(grid)[0]
        method = "bvp"
    except NoConvergence:
        sol = _collocate(prior, a, b, n)
        values = sol.sol(grid)[0]
        method = "bvp"
    values = np.clip(values, 0.5 * BOUNDARY_INSET, 1.0 - 0.5 * BOUNDARY_INSET)
    curve = ResponseCurve.from_values(grid, values)
    res = stationarity_residual(grid, curve.values, prior)
    ode_residual = float(np.max(np.abs(res[3:-3])))
    extremum = None
    if verify:
        extremum = _verify_extremum(curve, prior, n_perturbations, perturb_seed)
    return DesignSolution(gstar=curve, method=method, ode_residual=ode_residual,
                          extremum=extremum)


def _verify_extremum(curve: ResponseCurve, prior: ParamPrior,
                     n_perturbations: int, seed: int) -> ExtremumReport:
    rng = np.random.default_rng(seed)
    grid, g = curve.grid, curve.values
    a, b = grid[0], grid[-1]
    z = (grid - a) / (b - a)
    l0 = information_functional(curve, prior)
    fi0 = curve.derivative_values ** 2 / np.clip(g * (1.0 - g), 1e-15, None)
    min_fi0 = float(np.min(fi0[1:-1]))
    l_below = 0
    maximin_ok = True
    uniform_prior = prior.kind == "uniform"
    margin = np.minimum(g, 1.0 - g)
    for _ in range(n_perturbations):
        k = rng.integers(1, 7)
        amp = 0.01 * rng.uniform(0.2, 1.0)
        bump = np.sin(np.pi * k * z) * rng.choice([-1.0, 1.0])
        cand = g + amp * margin * bump
        cand = np.maximum.accumulate(cand)            # monotone projection
        cand = np.clip(cand, g[0], g[-1])             # keep pinned boundaries
        pert = ResponseCurve.from_values(grid, cand)
        l_pert = information_functional(pert, prior)
        if l_pert < l0 - 1e-9 * max(1.0, abs(l0)):
            l_below += 1
        if uniform_prior:
            gg = np.clip(pert.values * (1.0 - pert.values), 1e-15, None)
            fi = pert.derivative_values ** 2 / gg
            if np.min(fi[1:-1]) > min_fi0 + 1e-9 * max(1.0, min_fi0):
                maximin_ok = False
    is_min = l_below == 0
    report = ExtremumReport(l_value=l0, min_fi=min_fi0,
                            n_perturbations=n_perturbations,
                            l_below_fraction=l_below / max(1, n_perturbations),
                            is_minimum=is_min,
                            is_maximin=maximin_ok if uniform_prior else None)
    if not is_min:
        raise NotAMaximum(
            f"{l_below} of {n_perturbations} perturbations went below the "
            "stationary value of the information functional")
    if uniform_prior and not maximin_ok:
        raise NotAMaximum("a perturbation improved the worst-case information")
    return report


# ---------------------------------------------------------------------------
# Spectral recovery of gamma
# ---------------------------------------------------------------------------

def deconvolve_quantizer(gstar: ResponseCurve, noise: NoiseModel,
                         alpha_rel: float = TIKHONOV_ALPHA_REL,
                         tol_clip: float = CLIP_TOL,
                         polish_iters: int = 1500,
                         refine_rounds: int = 3,
                         cg_iters: int = 400) -> "BinaryQuantizer | FailureRecord":
    """Recover gamma with g* = gamma conv noise, if a valid gamma exists.

    Works in the derivative domain (g*' is compactly supported, so the
    4x zero-padded circular model is the exact linear convolution):
    Tikhonov-regularized spectral division seeds a projected-gradient
    polish under gamma' >= 0, followed by least-squares refinement on the
    detected support.  The integrated response is returned as a tabulated
    quantizer only if it stays inside [-tol_clip, 1 + tol_clip]; otherwise
    a FailureRecord with diagnostics is returned rather than a silently
    clipped rule.  SpectrumUnderflow is raised when the noise spectrum is
    dead on bins carrying essentially all of the target's content.
    """
    h = gstar.step
    n = len(gstar.grid)
    sup = noise.support
    n_lo = int(round(sup.lo / h))
    n_hi = int(round(sup.hi / h))
    ny = (n - 1) + (n_hi - n_lo) + 1
    y0 = gstar.grid[0] + n_lo * h
    y_grid = y0 + h * np.arange(ny)
    m = 1
    while m < 4 * max(n, ny):
        m *= 2

    data = np.zeros(m)
    data[:n] = gstar.derivative_values
    offsets = np.arange(m)
    offsets = np.where(offsets <= m // 2, offsets, offsets - m) * h
    if noise.kind == "delta":
        kernel = np.zeros(m)
        kernel[0] = 1.0
    else:
        kernel = noise.density(-offsets) * h

    data_f = np.fft.rfft(data)
    kern_f = np.fft.rfft(kernel)
    kern_mag = np.abs(kern_f)
    data_mag = np.abs(data_f)
    dead = kern_mag < DEAD_BIN_REL * kern_mag.max()
    significant = data_mag >= SIGNIFICANT_BIN_REL * data_mag.max()
    lost = float(np.sum(data_mag[dead & significant] ** 2))
    total = float(np.sum(data_mag[significant] ** 2))
    if total > 0 and lost > DEAD_ENERGY_FRACTION * total:
        raise SpectrumUnderflow(
            f"noise spectrum vanishes on bins carrying {lost / total:.0%} of the "
            "response content; no valid quantizer can be recovered")

    alpha = alpha_rel * kern_mag.max() ** 2
    raw = np.fft.irfft(data_f * np.conj(kern_f) / (kern_mag ** 2 + alpha), n=m)
    idx = (np.arange(ny) + n_lo) % m
    raw_gamma = cumulative_integral(raw[idx], h)

    def record(reason, deriv):
        fwd = np.fft.irfft(np.fft.rfft(deriv) * kern_f, n=m)[:n] - gstar.derivative_values
        gam = cumulative_integral(deriv[idx], h)
        return FailureRecord(reason=reason, raw_min=float(gam.min()),
                             raw_max=float(gam.max()),
                             forward_residual=float(np.max(np.abs(fwd))))

    if raw_gamma.min() < -RAW_ATTEMPT_BAND or raw_gamma.max() > 1.0 + RAW_ATTEMPT_BAND:
        return record("raw spectral inverse leaves [0, 1] by more than "
                      f"{RAW_ATTEMPT_BAND}; required response is not a valid "
                      "probability", np.maximum(raw, 0.0))

    x = _polish_nonneg(np.maximum(raw, 0.0), data_f, kern_f,
                       polish_iters, refine_rounds, cg_iters, m)
    gamma_vals = cumulative_integral(x[idx], h)
    if gamma_vals.min() < -tol_clip or gamma_vals.max() > 1.0 + tol_clip:
        return record("polished inverse still leaves "
                      f"[-{tol_clip}, 1 + {tol_clip}]", x)
    return BinaryQuantizer.tabulated(y_grid, np.clip(gamma_vals, 0.0, 1.0))


def _polish_nonneg(x0: np.ndarray, data_f: np.ndarray, kern_f: np.ndarray,
                   iters: int, refine_rounds: int, cg_iters: int, m: int) -> np.ndarray:
    """Projected-gradient (FISTA) pass under x >= 0, then least-squares
    refinement restricted to the detected support."""
    kern2 = np.abs(kern_f) ** 2
    lips = float(kern2.max())
    ktd = np.fft.irfft(data_f * np.conj(kern_f), n=m)

    def ktk(v):
        return np.fft.irfft(np.fft.rfft(v) * kern2, n=m)

    x = x0
    z = x.copy()
    tk = 1.0
    for _ in range(iters):
        x_new = np.maximum(z - (ktk(z) - ktd) / lips, 0.0)
        step = x_new - x
        if np.max(np.abs(step)) < 1e-15 * max(1.0, float(np.max(np.abs(x_new)))):
            x = x_new
            break
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        z = x_new + ((tk - 1.0) / t_new) * step
        x, tk = x_new, t_new

    for _ in range(refine_rounds):
        mask = x > 1e-8 * max(1.0, float(x.max()))
        xs = np.where(mask, x, 0.0)
        r = np.where(mask, ktd - ktk(xs), 0.0)
        p = r.copy()
        rs = float(r @ r)
        for _ in range(cg_iters):
            ap = np.where(mask, ktk(np.where(mask, p, 0.0)), 0.0)
            denom = float(p @ ap)
            if denom <= 1e-300:
                break
            a = rs / denom
            xs = xs + a * p
            r = r - a * ap
            rs_new = float(r @ r)
            if rs_new < 1e-28 * max(1.0, rs):
                break
            p = r + (rs_new / rs) * p
            rs = rs_new
        x = np.maximum(xs, 0.0)
    return x
