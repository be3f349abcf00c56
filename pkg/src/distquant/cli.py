"""Command-line front end.

One JSON config file per experiment; subcommands bind the library
modules.  Exit codes: 0 success, 2 config error (nothing written),
3 numerical failure (whatever diagnostics exist are written first).
CSV files are written atomically (temp file + rename), '.' decimal,
header row first, newline-terminated rows.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import design as design_mod
from . import pbpo as pbpo_mod
from .errors import ConfigError, InputError, NumericalFailure
from .fisher import FisherReport, posterior_fisher
from .probmodel import NoiseModel, ParamPrior
from .quantizers import BinaryQuantizer, response_curve
from .rate import compare_rate_strategies, gaussian_low_snr_test
from .simulate import DEFAULT_LADDER, SimConfig, SimRow, run_mse_experiment

SUBCOMMANDS = ("design", "fisher", "simulate", "pbpo", "rate", "counterexample")


# ---------------------------------------------------------------------------
# Config loading and validation
# ---------------------------------------------------------------------------

def _require(section: dict, context: str, required: dict, optional: dict = ()):
    """Check key presence and types; reject unknown keys."""
    optional = dict(optional or {})
    if not isinstance(section, dict):
        raise ConfigError(f"{context}: expected an object")
    unknown = set(section) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    for key, kind in required.items():
        if key not in section:
            raise ConfigError(f"{context}: missing required key '{key}'")
        _check_type(section[key], kind, f"{context}.{key}")
    for key, kind in optional.items():
        if key in section:
            _check_type(section[key], kind, f"{context}.{key}")


def _check_type(value, kind, context: str) -> None:
    numbers = (int, float)
    if kind == "number" and not (isinstance(value, numbers) and not isinstance(value, bool)):
        raise ConfigError(f"{context}: expected a number")
    if kind == "int" and not (isinstance(value, int) and not isinstance(value, bool)):
        raise ConfigError(f"{context}: expected an integer")
    if kind == "str" and not isinstance(value, str):
        raise ConfigError(f"{context}: expected a string")
    if kind == "bool" and not isinstance(value, bool):
        raise ConfigError(f"{context}: expected a boolean")
    if kind == "list" and not isinstance(value, list):
        raise ConfigError(f"{context}: expected a list")
    if kind == "dict" and not isinstance(value, dict):
        raise ConfigError(f"{context}: expected an object")


def build_prior(section: dict, context: str = "prior") -> ParamPrior:
    _require(section, context, {"kind": "str"},
             {"lo": "number", "hi": "number", "mean": "number", "var": "number",
              "csv": "str"})
    kind = section["kind"]
    if kind == "uniform":
        _require(section, context, {"kind": "str", "lo": "number", "hi": "number"})
        return ParamPrior.uniform(section["lo"], section["hi"])
    if kind == "gaussian":
        _require(section, context, {"kind": "str", "mean": "number", "var": "number"})
        if section["var"] <= 0:
            raise ConfigError(f"{context}: variance must be positive")
        return ParamPrior.gaussian(section["mean"], section["var"])
    if kind == "tabulated":
        _require(section, context, {"kind": "str", "csv": "str"})
        return ParamPrior.from_csv(section["csv"])
    raise ConfigError(f"{context}: unknown prior kind '{kind}'")


def build_noise(section: dict, context: str = "noise") -> NoiseModel:
    _require(section, context, {"kind": "str"},
             {"sigma": "number", "center": "number", "csv": "str"})
    kind = section["kind"]
    if kind == "delta":
        return NoiseModel.delta()
    if kind == "gaussian":
        _require(section, context, {"kind": "str", "sigma": "number"})
        if section["sigma"] <= 0:
            raise ConfigError(f"{context}: sigma must be positive")
        return NoiseModel.gaussian(section["sigma"])
    if kind == "raised_cosine":
        _require(section, context, {"kind": "str"}, {"center": "number"})
        return NoiseModel.raised_cosine(section.get("center", 0.0))
    if kind == "tabulated":
        _require(section, context, {"kind": "str", "csv": "str"})
        return NoiseModel.from_csv(section["csv"])
    raise ConfigError(f"{context}: unknown noise kind '{kind}'")


def build_quantizer(section: dict, context: str = "quantizer") -> BinaryQuantizer:
    _require(section, context, {"kind": "str"},
             {"threshold": "number", "lo": "number", "hi": "number", "csv": "str"})
    kind = section["kind"]
    if kind == "threshold":
        _require(section, context, {"kind": "str", "threshold": "number"})
        return BinaryQuantizer.threshold(section["threshold"])
    if kind == "sine":
        _require(section, context, {"kind": "str"}, {"lo": "number", "hi": "number"})
        return BinaryQuantizer.sine(section.get("lo", -1.0), section.get("hi", 1.0))
    if kind == "tabulated":
        _require(section, context, {"kind": "str", "csv": "str"})
        return BinaryQuantizer.from_csv(section["csv"])
    raise ConfigError(f"{context}: unknown quantizer kind '{kind}'")


# ---------------------------------------------------------------------------
# Atomic output helpers
# ---------------------------------------------------------------------------

def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow(row)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(cfg: dict, out: Path, seed_override, threads: int) -> int:
    _require(cfg, "simulate", {"prior": "dict", "noise": "dict", "quantizer": "dict"},
             {"sensor_counts": "list", "n_runs": "int", "seed": "int"})
    prior = build_prior(cfg["prior"])
    noise = build_noise(cfg["noise"])
    quant = build_quantizer(cfg["quantizer"])
    counts = cfg.get("sensor_counts", list(DEFAULT_LADDER))
    if not all(isinstance(n, int) and n >= 1 for n in counts):
        raise ConfigError("simulate.sensor_counts: positive integers required")
    n_runs = cfg.get("n_runs", 5000)
    if n_runs < 1:
        raise ConfigError("simulate.n_runs must be >= 1")
    seed = seed_override if seed_override is not None else cfg.get("seed", 0)
    sim = SimConfig(prior=prior, noise=noise, quantizer=quant,
                    sensor_counts=tuple(counts), n_runs=n_runs, master_seed=seed)
    result = run_mse_experiment(sim, threads=threads)
    write_csv(out / "mse.csv", SimRow.CSV_HEADER, [r.csv_row() for r in result.rows])
    lines = [f"runs per point: {n_runs}", f"master seed: {seed}"]
    for r in result.rows:
        lines.append(f"N={r.n_sensors}: mse={r.mse:.6g} (stderr {r.stderr:.3g}), "
                     f"limit {r.pcrlb_limit:.6g}, mse*N={r.mse * r.n_sensors:.6g}")
    write_text(out / "summary.txt", "\n".join(lines) + "\n")
    return 0


def _cmd_fisher(cfg: dict, out: Path, seed_override, threads: int) -> int:
    _require(cfg, "fisher", {"prior": "dict", "noise": "dict", "quantizer": "dict",
                             "n_sensors": "int"},
             {"fc_info": "number", "grid": "dict"})
    prior = build_prior(cfg["prior"])
    noise = build_noise(cfg["noise"])
    quant = build_quantizer(cfg["quantizer"])
    iv = prior.quad_interval()
    lo, hi, n = iv.lo, iv.hi, 2049
    if "grid" in cfg:
        _require(cfg["grid"], "fisher.grid", {"lo": "number", "hi": "number"}, {"n": "int"})
        lo, hi = cfg["grid"]["lo"], cfg["grid"]["hi"]
        n = cfg["grid"].get("n", 2049)
    curve = response_curve(quant, noise, lo, hi, n)
    report = posterior_fisher(curve, prior, cfg["n_sensors"], cfg.get("fc_info", 0.0))
    write_csv(out / "fisher.csv", FisherReport.csv_header(cfg["n_sensors"]),
              [report.csv_row()])
    write_text(out / "summary.txt",
               f"f_data={report.f_data:.9g}\nf_fc={report.f_fc:.9g}\n"
               f"f_prior={report.f_prior:.9g}\nf_total={report.f_total:.9g}\n"
               f"pcrlb={report.pcrlb:.9g}\n")
    return 0


def _cmd_design(cfg: dict, out: Path, seed_override, threads: int) -> int:
    _require(cfg, "design", {"method": "str"},
             {"interval": "dict", "prior": "dict", "noise": "dict", "n": "int"})
    method = cfg["method"]
    n = cfg.get("n", 2049)
    if method == "least_favorable":
        _require(cfg.get("interval", {}), "design.interval",
                 {"lo": "number", "hi": "number"})
        gstar = design_mod.least_favorable_gstar(cfg["interval"]["lo"],
                                                 cfg["interval"]["hi"], n)
        solution = design_mod.DesignSolution(gstar=gstar, method="closed_form")
    elif method == "bvp":
        if "prior" not in cfg:
            raise ConfigError("design: bvp method needs a prior section")
        prior = build_prior(cfg["prior"])
        solution = design_mod.solve_euler_lagrange(prior, n)
    else:
        raise ConfigError(f"design: unknown method '{method}'")
    gstar = solution.gstar
    gstar.to_csv(out / "gstar.csv")
    lines = [f"method: {solution.method}"]
    if solution.ode_residual is not None:
        lines.append(f"ode_residual: {solution.ode_residual:.3e}")
    if solution.extremum is not None:
        ex = solution.extremum
        lines.append(f"objective: {ex.l_value:.9g}")
        lines.append(f"worst-case information: {ex.min_fi:.9g}")
        lines.append(f"perturbations below objective: {ex.l_below_fraction:.3f}")
    exit_code = 0
    if "noise" in cfg:
        noise = build_noise(cfg["noise"])
        gamma = design_mod.deconvolve_quantizer(gstar, noise)
        if isinstance(gamma, design_mod.FailureRecord):
            lines.append("quantizer recovery FAILED")
            lines.append(f"  reason: {gamma.reason}")
            lines.append(f"  raw range: [{gamma.raw_min:.6g}, {gamma.raw_max:.6g}]")
            lines.append(f"  forward residual: {gamma.forward_residual:.3e}")
            exit_code = 3
        else:
            gamma.to_csv(out / "gamma.csv")
            lines.append("quantizer recovery ok; gamma.csv written")
    write_text(out / "design_report.txt", "\n".join(lines) + "\n")
    return exit_code


def _cmd_rate(cfg: dict, out: Path, seed_override, threads: int) -> int:
    _require(cfg, "rate", {"total_bits": "int", "candidates": "list",
                           "prior": "dict", "noise_var": "number"})
    prior = build_prior(cfg["prior"])
    if cfg["noise_var"] <= 0:
        raise ConfigError("rate.noise_var must be positive")
    for c in cfg["candidates"]:
        if (not isinstance(c, list) or len(c) != 2
                or not all(isinstance(v, int) for v in c)):
            raise ConfigError("rate.candidates: entries must be [levels, count]")
    rows = compare_rate_strategies(cfg["total_bits"], cfg["candidates"],
                                   prior, cfg["noise_var"])
    write_csv(out / "rate.csv",
              ["levels", "count", "bits_used", "f_data", "pcrlb", "rank"],
              [[r.levels, r.count, r.bits_used, f"{r.report.f_data:.17g}",
                f"{r.report.pcrlb:.17g}", r.rank] for r in rows])
    snr = gaussian_low_snr_test(prior.variance, cfg["noise_var"])
    write_text(out / "summary.txt",
               f"low-SNR ratio {snr.ratio:.6g} vs threshold {snr.threshold:.6g}: "
               f"{'holds' if snr.holds else 'does not hold'}\n"
               + "\n".join(f"rank {r.rank}: {r.count} x {r.levels}-level, "
                           f"f_data={r.report.f_data:.6g}" for r in rows) + "\n")
    return 0


def _cmd_pbpo(cfg: dict, out: Path, seed_override, threads: int) -> int:
    _require(cfg, "pbpo",
             {"theta": "list", "p_theta": "list", "obs": "list", "levels": "list",
              "estimator": "list"},
             {"lam": "list", "p_lam_given_theta": "list", "max_sweeps": "int",
              "n_starts": "int", "seed": "int", "brute_force": "bool"})
    theta = np.asarray(cfg["theta"], dtype=float)
    p_theta = np.asarray(cfg["p_theta"], dtype=float)
    obs = tuple(np.asarray(t, dtype=float) for t in cfg["obs"])
    levels = tuple(int(d) for d in cfg["levels"])
    estimator = np.asarray(cfg["estimator"], dtype=float).reshape(levels)
    lam = np.asarray(cfg["lam"], dtype=float) if "lam" in cfg else None
    plgt = (np.asarray(cfg["p_lam_given_theta"], dtype=float)
            if "p_lam_given_theta" in cfg else None)
    try:
        problem = pbpo_mod.DiscreteProblem(theta=theta, p_theta=p_theta, obs=obs,
                                           levels=levels, estimator=estimator,
                                           lam=lam, p_lam_given_theta=plgt)
    except InputError as exc:
        raise ConfigError(f"pbpo: {exc}") from exc
    seed = seed_override if seed_override is not None else cfg.get("seed", 0)
    result = pbpo_mod.pbpo_multistart(problem, n_starts=cfg.get("n_starts", 8),
                                      seed=seed, max_sweeps=cfg.get("max_sweeps", 50))
    result.strategy.to_csv(out / "strategy.csv")
    write_csv(out / "risk_trace.csv", ["update", "risk"],
              [[i, f"{r:.17g}"] for i, r in enumerate(result.risk_trace)])
    lines = [f"final risk: {result.final_risk:.9g}",
             f"converged: {result.converged} in {result.sweeps} sweeps"]
    if cfg.get("brute_force", False):
        _, opt = pbpo_mod.brute_force(problem)
        lines.append(f"brute-force optimum: {opt:.9g}")
        lines.append(f"gap: {result.final_risk - opt:.3e}")
    write_text(out / "summary.txt", "\n".join(lines) + "\n")
    return 0


def _cmd_counterexample(cfg: dict, out: Path, seed_override, threads: int) -> int:
    _require(cfg, "counterexample", {"n": "int"}, {"points_per_region": "int"})
    report = pbpo_mod.dependence_counterexample(cfg["n"],
                                                cfg.get("points_per_region", 4))
    write_csv(out / "counterexample.csv",
              ["n", "n_sensors", "identical_best_risk", "nonidentical_risk", "margin"],
              [[report.n, report.n_sensors, f"{report.identical_best_risk:.17g}",
                f"{report.nonidentical_risk:.17g}", f"{report.margin:.17g}"]])
    write_text(out / "summary.txt",
               f"{report.n_sensors} sensors, {2 ** report.n} regions\n"
               f"best identical-threshold risk: {report.identical_best_risk:.9g}\n"
               f"bisection strategy risk:       {report.nonidentical_risk:.9g}\n"
               f"margin:                        {report.margin:.9g}\n")
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "fisher": _cmd_fisher,
    "design": _cmd_design,
    "rate": _cmd_rate,
    "pbpo": _cmd_pbpo,
    "counterexample": _cmd_counterexample,
}


def run(argv) -> int:
    parser = argparse.ArgumentParser(
        prog="distquant",
        description="Quantizer-design workbench for distributed Bayesian estimation")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        handler = _HANDLERS[args.subcommand]
        return handler(cfg, Path(args.out), args.seed, args.threads)
    except (ConfigError, InputError) as exc:
        print(f"config error [{args.subcommand}]: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure [{args.subcommand}] "
              f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
