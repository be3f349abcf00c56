"""General-cost quantizer optimality on finite grids.

Everything here works on a DiscreteProblem: finite parameter grid with
prior weights, per-sensor observation pmf tables (conditioned on the
parameter directly, or on a latent variable that renders the sensors
conditionally independent), per-sensor level counts, a fixed estimator
table, and a cost function (squared error unless overridden).

The coordinate-wise best-response update sets, independently for every
observation value y of sensor i,

    rule_i(y) = argmin_d  sum_theta a(theta, d) p(theta | y)

where a(theta, d) averages the cost over the other sensors' outputs; the
latent-variable variant conditions a and the posterior on (theta, lambda).
Ties always break toward the smallest symbol so sweeps are reproducible.
Cycling best responses (person-by-person optimization) drives the risk
monotonically down to a fixed point, which is a necessary-condition
solution only; the exhaustive search is the accompanying oracle.

Symbols are 0-based internally; CSV serialization uses 1-based symbols to
match the quantizer-output convention.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .errors import InputError, InvalidLevels, TooLarge
from .probmodel import HciModel, _check_rows
from .streams import substream

ROW_SUM_TOL = 1e-12


def squared_error(theta_hat: float, u: tuple[int, ...], theta: np.ndarray) -> np.ndarray:
    return (theta_hat - theta) ** 2


@dataclass(frozen=True)
class DiscreteProblem:
    """Finite-grid estimation problem with a fixed fusion estimator.

    ``obs[i]`` is p(y_i | theta) with shape (n_theta, m_i) in the
    independent case; when a latent grid is present it is p(y_i | lambda)
    with shape (n_lam, m_i) and sensors are conditionally independent
    given lambda by construction.
    """

    theta: np.ndarray
    p_theta: np.ndarray
    obs: tuple[np.ndarray, ...]
    levels: tuple[int, ...]
    estimator: np.ndarray
    lam: np.ndarray | None = None
    p_lam_given_theta: np.ndarray | None = None
    cost: "callable" = field(default=squared_error, repr=False)

    def __post_init__(self):
        if abs(self.p_theta.sum() - 1.0) > ROW_SUM_TOL:
            raise InputError("prior weights must sum to 1")
        if any(d < 2 for d in self.levels):
            raise InvalidLevels("every sensor needs at least 2 levels")
        if len(self.obs) != len(self.levels):
            raise InputError("one obs table and one level count per sensor")
        n_cond = len(self.lam) if self.lam is not None else len(self.theta)
        if self.lam is not None:
            if self.p_lam_given_theta is None:
                raise InputError("latent grid needs p(lambda|theta)")
            if self.p_lam_given_theta.shape != (len(self.theta), len(self.lam)):
                raise InputError("p(lambda|theta) table has wrong shape")
            _check_rows(self.p_lam_given_theta, "p(lambda|theta)")
        for i, t in enumerate(self.obs):
            if t.shape[0] != n_cond:
                raise InputError(f"obs table {i} conditions on the wrong grid")
            _check_rows(t, f"obs table {i}")
        if self.estimator.shape != tuple(self.levels):
            raise InputError("estimator table must be indexed by the output tuple")

    @property
    def dependent(self) -> bool:
        return self.lam is not None

    @property
    def n_sensors(self) -> int:
        return len(self.obs)

    @property
    def grid_sizes(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.obs)

    @staticmethod
    def from_hci(hci: HciModel, levels, estimator, cost=squared_error) -> "DiscreteProblem":
        return DiscreteProblem(theta=hci.theta, p_theta=hci.p_theta, obs=hci.obs,
                               levels=tuple(levels), estimator=np.asarray(estimator),
                               lam=hci.lam, p_lam_given_theta=hci.p_lam_given_theta,
                               cost=cost)


@dataclass(frozen=True)
class Strategy:
    """One quantization rule per sensor: arrays mapping y-index -> symbol."""

    rules: tuple[np.ndarray, ...]

    def validate_for(self, problem: DiscreteProblem) -> None:
        if len(self.rules) != problem.n_sensors:
            raise InputError("strategy has the wrong number of rules")
        for rule, m, d in zip(self.rules, problem.grid_sizes, problem.levels):
            if len(rule) != m:
                raise InputError("rule length must match the sensor's grid")
            if rule.min() < 0 or rule.max() >= d:
                raise InputError("rule symbols out of range")

    def __eq__(self, other) -> bool:
        return (isinstance(other, Strategy)
                and len(self.rules) == len(other.rules)
                and all(np.array_equal(a, b) for a, b in zip(self.rules, other.rules)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sensor", "y_index", "symbol"])
            for i, rule in enumerate(self.rules):
                for j, d in enumerate(rule):
                    w.writerow([i + 1, j + 1, int(d) + 1])

    @staticmethod
    def constant(problem: DiscreteProblem, symbol: int = 0) -> "Strategy":
        return Strategy(tuple(np.full(m, symbol, dtype=int) for m in problem.grid_sizes))


def symbol_distributions(problem: DiscreteProblem, strategy: Strategy) -> list[np.ndarray]:
    """q_i(d | conditioning value) for each sensor, shape (n_cond, D_i)."""
    out = []
    for rule, table, d in zip(strategy.rules, problem.obs, problem.levels):
        q = np.zeros((table.shape[0], d))
        for y_idx, sym in enumerate(rule):
            q[:, sym] += table[:, y_idx]
        out.append(q)
    return out


def _cost_slices(problem: DiscreteProblem):
    """cost(estimator[u], u, theta) for every output tuple, as a dict."""
    return {u: problem.cost(problem.estimator[u], u, problem.theta)
            for u in product(*[range(d) for d in problem.levels])}


def bayes_risk(problem: DiscreteProblem, strategy: Strategy) -> float:
    """Exact expected cost by summation over all grids and output tuples."""
    strategy.validate_for(problem)
    qs = symbol_distributions(problem, strategy)
    costs = _cost_slices(problem)
    risk = 0.0
    for u, c in costs.items():
        mass = np.ones(qs[0].shape[0])
        for i, ui in enumerate(u):
            mass = mass * qs[i][:, ui]
        if problem.dependent:
            w = problem.p_theta * (problem.p_lam_given_theta @ mass)
        else:
            w = problem.p_theta * mass
        risk += float(np.dot(w, c))
    return risk


def mmse_estimator(problem: DiscreteProblem, strategy: Strategy) -> np.ndarray:
    """Posterior-mean table for the given strategy (Bayes-optimal fusion
    for squared error); outputs with zero probability fall back to the
    prior mean."""
    qs = symbol_distributions(problem, strategy)
    prior_mean = float(np.dot(problem.p_theta, problem.theta))
    est = np.empty(problem.levels)
    for u in product(*[range(d) for d in problem.levels]):
        mass = np.ones(qs[0].shape[0])
        for i, ui in enumerate(u):
            mass = mass * qs[i][:, ui]
        if problem.dependent:
            w = problem.p_theta * (problem.p_lam_given_theta @ mass)
        else:
            w = problem.p_theta * mass
        tot = w.sum()
        est[u] = float(np.dot(w, problem.theta) / tot) if tot > 0 else prior_mean
    return est


def _expected_cost_given_choice(problem: DiscreteProblem, strategy: Strategy,
                                i: int) -> np.ndarray:
    """a(theta[, lambda], d): expected cost over the other sensors' outputs
    with sensor i's symbol pinned to d."""
    qs = symbol_distributions(problem, strategy)
    others = [j for j in range(problem.n_sensors) if j != i]
    costs = _cost_slices(problem)
    n_cond = qs[0].shape[0]
    if problem.dependent:
        a = np.zeros((len(problem.theta), n_cond, problem.levels[i]))
    else:
        a = np.zeros((len(problem.theta), problem.levels[i]))
    for u_o in product(*[range(problem.levels[j]) for j in others]):
        mass = np.ones(n_cond)
        for j, uj in zip(others, u_o):
            mass = mass * qs[j][:, uj]
        for d in range(problem.levels[i]):
            u = [0] * problem.n_sensors
            for j, uj in zip(others, u_o):
                u[j] = uj
            u[i] = d
            c = costs[tuple(u)]
            if problem.dependent:
                a[:, :, d] += np.outer(c, mass)
            else:
                a[:, d] += c * mass
    return a


def best_response_independent(problem: DiscreteProblem, strategy: Strategy,
                              i: int) -> np.ndarray:
    """Pointwise-optimal rule for sensor i with the others fixed
    (conditionally independent case); ties go to the smallest symbol."""
    if problem.dependent:
        raise InputError("problem has a latent grid; use the dependent update")
    a = _expected_cost_given_choice(problem, strategy, i)
    rule = np.empty(problem.grid_sizes[i], dtype=int)
    for y_idx in range(problem.grid_sizes[i]):
        posterior = problem.p_theta * problem.obs[i][:, y_idx]
        rule[y_idx] = int(np.argmin(posterior @ a))
    return rule


def best_response_dependent(problem: DiscreteProblem, strategy: Strategy,
                            i: int) -> np.ndarray:
    """Latent-variable best response: argmin_d of the cost averaged against
    p(theta, lambda | y)."""
    if not problem.dependent:
        raise InputError("problem has no latent grid; use the independent update")
    a = _expected_cost_given_choice(problem, strategy, i)
    rule = np.empty(problem.grid_sizes[i], dtype=int)
    joint_base = problem.p_theta[:, None] * problem.p_lam_given_theta
    for y_idx in range(problem.grid_sizes[i]):
        joint = joint_base * problem.obs[i][:, y_idx][None, :]
        scores = np.einsum("tl,tld->d", joint, a)
        rule[y_idx] = int(np.argmin(scores))
    return rule


def best_response(problem: DiscreteProblem, strategy: Strategy, i: int) -> np.ndarray:
    if problem.dependent:
        return best_response_dependent(problem, strategy, i)
    return best_response_independent(problem, strategy, i)


@dataclass(frozen=True)
class SweepResult:
    strategy: Strategy
    risk_trace: tuple[float, ...]
    converged: bool
    sweeps: int

    @property
    def final_risk(self) -> float:
        return self.risk_trace[-1]


def pbpo_sweep(problem: DiscreteProblem, init: Strategy | None = None,
               max_sweeps: int = 50) -> SweepResult:
    """Cycle best responses over sensors until a full sweep changes no
    rule or the sweep limit is hit (converged=False flags the latter).
    The risk trace is recorded after every sensor update."""
    strategy = init if init is not None else Strategy.constant(problem)
    strategy.validate_for(problem)
    rules = [r.copy() for r in strategy.rules]
    trace = [bayes_risk(problem, Strategy(tuple(rules)))]
    for sweep in range(1, max_sweeps + 1):
        changed = False
        for i in range(problem.n_sensors):
            new_rule = best_response(problem, Strategy(tuple(rules)), i)
            if not np.array_equal(new_rule, rules[i]):
                changed = True
            rules[i] = new_rule
            trace.append(bayes_risk(problem, Strategy(tuple(rules))))
        if not changed:
            return SweepResult(Strategy(tuple(rules)), tuple(trace), True, sweep)
    return SweepResult(Strategy(tuple(rules)), tuple(trace), False, max_sweeps)


def pbpo_multistart(problem: DiscreteProblem, n_starts: int = 8, seed: int = 0,
                    max_sweeps: int = 50) -> SweepResult:
    """Best sweep result over the constant-rule start plus seeded random
    restarts (local-minimum insurance for the greedy iteration)."""
    best = pbpo_sweep(problem, Strategy.constant(problem), max_sweeps)
    rng = substream(seed, 0)
    for _ in range(max(0, n_starts - 1)):
        init = Strategy(tuple(rng.integers(0, d, size=m)
                              for d, m in zip(problem.levels, problem.grid_sizes)))
        cand = pbpo_sweep(problem, init, max_sweeps)
        if cand.final_risk < best.final_risk:
            best = cand
    return best


# ---------------------------------------------------------------------------
# Exhaustive oracle
# ---------------------------------------------------------------------------

ENUMERATION_CAP = 10_000_000


def strategy_space_size(problem: DiscreteProblem) -> float:
    return float(np.prod([float(d) ** m
                          for d, m in zip(problem.levels, problem.grid_sizes)]))


def brute_force(problem: DiscreteProblem,
                cap: float = ENUMERATION_CAP) -> tuple[Strategy, float]:
    """Exhaustive minimum of the Bayes risk; ties return the first
    strategy in lexicographic symbol order."""
    size = strategy_space_size(problem)
    if size > cap:
        raise TooLarge(f"{size:.3g} strategies exceed the cap {cap:.3g}")
    costs = _cost_slices(problem)
    best_rules, best_risk = None, math.inf
    for rules in product(*[product(range(d), repeat=m)
                           for d, m in zip(problem.levels, problem.grid_sizes)]):
        strategy = Strategy(tuple(np.asarray(r, dtype=int) for r in rules))
        qs = symbol_distributions(problem, strategy)
        risk = 0.0
        for u, c in costs.items():
            mass = np.ones(qs[0].shape[0])
            for i, ui in enumerate(u):
                mass = mass * qs[i][:, ui]
            if problem.dependent:
                w = problem.p_theta * (problem.p_lam_given_theta @ mass)
            else:
                w = problem.p_theta * mass
            risk += float(np.dot(w, c))
        if risk < best_risk - 1e-15:
            best_rules, best_risk = strategy, risk
    return best_rules, best_risk


# ---------------------------------------------------------------------------
# Identical-quantizer grouping check
# ---------------------------------------------------------------------------

def sensor_fisher(problem: DiscreteProblem, i: int, rule: np.ndarray) -> float:
    """E_theta of the information in sensor i's output under ``rule``:
    sum_d (d/dtheta q(d|theta))^2 / q(d|theta), with finite differences
    over the parameter grid."""
    if problem.dependent:
        raise InputError("per-sensor output information needs the independent case")
    q = np.zeros((len(problem.theta), problem.levels[i]))
    for y_idx, sym in enumerate(rule):
        q[:, sym] += problem.obs[i][:, y_idx]
    fi = np.zeros(len(problem.theta))
    for d in range(problem.levels[i]):
        dq = np.gradient(q[:, d], problem.theta)
        pos = q[:, d] > 1e-300
        fi[pos] += dq[pos] ** 2 / q[pos, d]
    return float(np.dot(problem.p_theta, fi))


def output_fisher(problem: DiscreteProblem, strategy: Strategy) -> float:
    """E_theta of the Fisher information carried by the full output tuple,
    computed from the joint pmf P(u | theta) with finite differences over
    the parameter grid (no additivity assumption; agrees with the sum of
    sensor_fisher values up to finite-difference product-rule error)."""
    if problem.dependent:
        raise InputError("output information is defined for the independent case")
    strategy.validate_for(problem)
    qs = symbol_distributions(problem, strategy)
    fi = np.zeros(len(problem.theta))
    for u in product(*[range(d) for d in problem.levels]):
        pu = np.ones(len(problem.theta))
        for i, ui in enumerate(u):
            pu = pu * qs[i][:, ui]
        dpu = np.gradient(pu, problem.theta)
        pos = pu > 1e-300
        fi[pos] += dpu[pos] ** 2 / pu[pos]
    return float(np.dot(problem.p_theta, fi))


@dataclass(frozen=True)
class GroupingReport:
    identical_best: float
    free_best: float
    identical_optimal: bool
    free_best_distinct_rules: int


def grouping_check(problem: DiscreteProblem, tol: float = 1e-9,
                   cap: float = ENUMERATION_CAP) -> GroupingReport:
    """Compare the best total data information over all strategies against
    the best over strategies where same-level sensors share one rule.

    The objective is F_D = sum_i F_i (per-sensor information adds under
    conditional independence; output_fisher verifies that identity
    separately).  Requires sensors with identical observation tables
    (i.i.d. given the parameter).  Exhaustive on both sides, size-guarded.
    """
    if problem.dependent:
        raise InputError("grouping check applies to the independent case")
    base = problem.obs[0]
    for t in problem.obs[1:]:
        if t.shape != base.shape or not np.allclose(t, base, atol=1e-13):
            raise InputError("grouping check needs identically distributed sensors")
    if strategy_space_size(problem) > cap:
        raise TooLarge("free enumeration exceeds the cap")

    m = problem.grid_sizes[0]
    # per-sensor information depends only on the sensor's level count here
    per_level = {}
    for d in set(problem.levels):
        i = problem.levels.index(d)
        per_level[d] = {rule: sensor_fisher(problem, i, np.asarray(rule, dtype=int))
                        for rule in product(range(d), repeat=m)}

    best_free, best_free_strategy = -math.inf, None
    for rules in product(*[product(range(d), repeat=m) for d in problem.levels]):
        f = sum(per_level[d][r] for d, r in zip(problem.levels, rules))
        if f > best_free + 1e-15:
            best_free = f
            best_free_strategy = Strategy(tuple(np.asarray(r, dtype=int) for r in rules))

    groups = sorted(set(problem.levels))
    best_identical = -math.inf
    for group_rules in product(*[product(range(d), repeat=m) for d in groups]):
        chosen = dict(zip(groups, group_rules))
        f = sum(per_level[d][chosen[d]] for d in problem.levels)
        best_identical = max(best_identical, f)

    distinct = len({tuple(r.tolist()) for r in best_free_strategy.rules})
    return GroupingReport(identical_best=best_identical, free_best=best_free,
                          identical_optimal=bool(abs(best_identical - best_free) <= tol),
                          free_best_distinct_rules=distinct)


# ---------------------------------------------------------------------------
# Dependence counter-example
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleReport:
    n: int
    n_sensors: int
    identical_best_risk: float
    nonidentical_risk: float

    @property
    def margin(self) -> float:
        return self.identical_best_risk - self.nonidentical_risk


def risk_with_mmse(problem: DiscreteProblem, strategy: Strategy) -> float:
    """Bayes risk when the fusion center decodes with the posterior mean
    recomputed for this strategy."""
    est = mmse_estimator(problem, strategy)
    return bayes_risk(replace(problem, estimator=est), strategy)


def dependence_counterexample(n: int, points_per_region: int = 4) -> CounterexampleReport:
    """Common-noise instance where non-identical rules beat every identical
    binary rule.

    2^n - 1 binary sensors observe y_i = theta + v with the noise value v
    shared by all sensors and pinned to 0 (latent variable = the common
    observation), theta uniform on a grid over [-1, 1].  Sensor k
    thresholds at the k-th boundary of the 2^n equal subdivisions, so the
    output tuple localizes theta to one subdivision; any identical rule
    yields at most a two-set partition of the observation.  The fusion
    center decodes with the per-strategy posterior mean.
    """
    if n not in (1, 2, 3):
        raise InputError("counter-example sizes are n in {1, 2, 3}")
    n_regions = 2 ** n
    n_sensors = n_regions - 1
    m = points_per_region * n_regions
    theta = np.linspace(-1.0, 1.0, m)
    p_theta = np.full(m, 1.0 / m)
    identity = np.eye(m)
    problem = DiscreteProblem(
        theta=theta, p_theta=p_theta,
        obs=tuple(identity for _ in range(n_sensors)),
        levels=(2,) * n_sensors,
        estimator=np.zeros((2,) * n_sensors),
        lam=theta.copy(), p_lam_given_theta=identity,
    )
    boundaries = [-1.0 + 2.0 * k / n_regions for k in range(1, n_regions)]
    bisection = Strategy(tuple((theta >= b).astype(int) for b in boundaries))
    nonidentical = risk_with_mmse(problem, bisection)

    cuts = np.concatenate([[theta[0] - 1.0], 0.5 * (theta[1:] + theta[:-1]),
                           [theta[-1] + 1.0]])
    identical_best = math.inf
    for cut in cuts:
        rule = (theta >= cut).astype(int)
        strategy = Strategy(tuple(rule for _ in range(n_sensors)))
        identical_best = min(identical_best, risk_with_mmse(problem, strategy))
    return CounterexampleReport(n=n, n_sensors=n_sensors,
                                identical_best_risk=identical_best,
                                nonidentical_risk=nonidentical)
