"""Outer min-max solvers.

`solve_wra_cmaes` minimizes the worst-case objective F(x) = max_y f(x, y)
with CMA-ES, ranking each population by the worst-case ranking
approximation.  `solve_zopgda` is the simultaneous-update baseline with
two-point zeroth-order gradient estimates and projection.

Success is judged against the problem's analytic F oracle on the outer
mean; oracle calls are never charged to the evaluation budget and do not
influence the search trajectory.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .cmaes import SearchDistribution, default_pop_size, mirror
from .errors import BudgetError, ContractError, CovarianceError
from .problems import EvalBudget, Problem
from .wra import WraParams, WraState

VERDICT_SUCCESS = "success"
VERDICT_BUDGET = "budget_exhausted"
VERDICT_ABORTED = "aborted"


@dataclass
class WraCmaesConfig:
    budget: int = 5_000_000
    target_gap: float = 1e-6
    pop_size: int | None = None  # outer lambda; default 4 + floor(3 ln m)
    # inner maximizers default to twice the outer formula: their runs are
    # warm-started and interrupted after a couple of improvements, and the
    # larger per-iteration sample keeps rankings stable when the worst-case
    # scenarios move quickly (large interaction coefficients)
    inner_pop_size: int | None = None
    initial_step: float | None = None  # default: box width / 4
    std_cap_fraction: float = 0.25
    wra: WraParams = field(default_factory=WraParams)
    oracle_check: bool = True
    history_points: int = 200


@dataclass
class ZoPgdaConfig:
    budget: int = 5_000_000
    target_gap: float = 1e-6
    eta_x: float = 0.02
    eta_y: float = 0.05
    q: int = 5  # random directions per side
    mu_smooth: float = 1e-3
    oracle_check: bool = True
    history_points: int = 200


@dataclass
class RunRecord:
    """Outcome of one seeded run; `history` is a downsampled gap curve."""

    problem: str
    b: float
    algorithm: str
    seed: int
    verdict: str
    fcalls: int
    final_gap: float
    wall_ms: float
    params_hash: str
    iterations: int
    history: list  # [[fcalls, gap], ...], fcalls strictly increasing
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MinMaxRun:
    """In-flight state of a WRA-CMA-ES run."""

    outer: SearchDistribution
    wra: WraState
    budget: EvalBudget
    target_gap: float
    history: list = field(default_factory=list)  # (fcalls, gap, tau, rounds)


@dataclass
class ZoPgdaRun:
    """In-flight state of a ZO-PGDA run."""

    x: np.ndarray
    y: np.ndarray
    budget: EvalBudget
    target_gap: float
    history: list = field(default_factory=list)


class _Checkpoints:
    """Log-spaced f-call checkpoints keeping at most ~max_points rows."""

    def __init__(self, limit: int, max_points: int):
        if limit > 0:
            grid = np.geomspace(1.0, float(limit), num=max_points)
            self._targets = np.unique(grid.astype(np.int64))
        else:
            self._targets = np.array([], dtype=np.int64)
        self._idx = 0
        self._last = -1

    def due(self, fcalls: int) -> bool:
        if self._idx >= self._targets.size or fcalls <= self._last:
            return False
        return fcalls >= self._targets[self._idx]

    def mark(self, fcalls: int) -> None:
        self._last = fcalls
        while self._idx < self._targets.size and self._targets[self._idx] <= fcalls:
            self._idx += 1


def success_check(x_mean, problem: Problem, target_gap: float):
    """Gap |F(x) - F(x*)| from the analytic oracle; pure and uncharged."""
    gap = abs(problem.F_true(x_mean) - problem.f_star)
    return gap <= target_gap, gap


def _params_hash(problem: Problem, config) -> str:
    payload = {
        "problem": problem.id,
        "m": problem.m,
        "n": problem.n,
        "b": problem.b,
        "config": asdict(config),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def _finish(problem, config, algorithm, seed, verdict, budget, gap, run, started,
            iterations, note=""):
    return RunRecord(
        problem=problem.id,
        b=problem.b,
        algorithm=algorithm,
        seed=seed,
        verdict=verdict,
        fcalls=budget.used,
        final_gap=gap,
        wall_ms=(time.perf_counter() - started) * 1e3,
        params_hash=_params_hash(problem, config),
        iterations=iterations,
        history=[[int(f), float(g)] for f, g, *_ in run.history],
        note=note,
    )


def solve_wra_cmaes(problem: Problem, config: WraCmaesConfig, seed: int) -> RunRecord:
    """Minimize the worst-case objective of `problem` with WRA-ranked CMA-ES."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    design_box, scenario_box = problem.design_box, problem.scenario_box
    lam = config.pop_size or default_pop_size(problem.m)
    step = config.initial_step or float(design_box.width[0]) / 4.0
    outer = SearchDistribution(
        design_box.uniform(rng), step, pop_size=lam, label="outer",
        std_cap_fraction=config.std_cap_fraction,
    )
    inner_pop = config.inner_pop_size or 2 * default_pop_size(problem.n)
    state = WraState.initial(
        lam, scenario_box, config.wra, rng, pop_size=inner_pop,
        std_cap_fraction=config.std_cap_fraction,
    )
    budget = EvalBudget(config.budget)
    run = MinMaxRun(outer=outer, wra=state, budget=budget, target_gap=config.target_gap)
    checkpoints = _Checkpoints(config.budget, config.history_points)

    def oracle_gap():
        return success_check(mirror(outer.mean, design_box), problem, config.target_gap)

    _, gap = oracle_gap()
    run.history.append((0, gap, math.nan, 0))
    verdict = None
    note = ""
    iterations = 0
    while verdict is None:
        if budget.remaining < lam * lam:
            verdict = VERDICT_BUDGET
            break
        try:
            candidates = outer.ask(design_box, rng)
            outcome = state.rank_candidates(candidates, problem, budget)
        except BudgetError:
            verdict = VERDICT_BUDGET
            break
        except CovarianceError as exc:
            verdict = VERDICT_ABORTED
            note = str(exc)
            break
        if not np.all(np.isfinite(outcome.estimates)):
            verdict = VERDICT_ABORTED
            note = "non-finite objective estimates"
            break
        if outcome.truncated:
            verdict = VERDICT_BUDGET
            break
        outer.tell(candidates, outcome.ranking)
        iterations += 1
        if config.oracle_check:
            ok, gap = oracle_gap()
            if ok:
                verdict = VERDICT_SUCCESS
            if verdict or checkpoints.due(budget.used):
                run.history.append((budget.used, gap, outcome.tau_final, outcome.rounds))
                checkpoints.mark(budget.used)
        elif checkpoints.due(budget.used):
            run.history.append((budget.used, math.nan, outcome.tau_final, outcome.rounds))
            checkpoints.mark(budget.used)
    _, gap = oracle_gap()
    if run.history[-1][0] < budget.used:
        run.history.append((budget.used, gap, math.nan, 0))
    return _finish(
        problem, config, "wra-cmaes", seed, verdict, budget, gap, run, started,
        iterations, note,
    )


def _unit_rows(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    z = rng.standard_normal((count, dim))
    norms = np.sqrt(np.einsum("ij,ij->i", z, z))
    z /= np.maximum(norms, 1e-300)[:, None]
    return z


def solve_zopgda(problem: Problem, config: ZoPgdaConfig, seed: int) -> RunRecord:
    """Simultaneous projected ascent/descent with zeroth-order gradients.

    Per iteration both sides are estimated from q fresh unit directions with
    a shared center evaluation: 2q + 1 charged f-calls.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    design_box, scenario_box = problem.design_box, problem.scenario_box
    x = design_box.uniform(rng)
    y = scenario_box.uniform(rng)
    budget = EvalBudget(config.budget)
    run = ZoPgdaRun(x=x, y=y, budget=budget, target_gap=config.target_gap)
    checkpoints = _Checkpoints(config.budget, config.history_points)
    q, mu = config.q, config.mu_smooth
    if q < 1 or mu <= 0:
        raise ContractError("q must be >= 1 and mu_smooth positive")
    per_iter = 2 * q + 1
    # one fused batch per iteration: center row, q x-perturbations, q
    # y-perturbations; the center value is shared by both estimators
    x_grid = np.empty((per_iter, problem.m))
    y_grid = np.empty((per_iter, problem.n))

    _, gap = success_check(x, problem, config.target_gap)
    run.history.append((0, gap, math.nan, 0))
    verdict = None
    note = ""
    iterations = 0
    while verdict is None:
        if budget.remaining < per_iter:
            verdict = VERDICT_BUDGET
            break
        u = _unit_rows(rng, q, problem.m)
        v = _unit_rows(rng, q, problem.n)
        x_grid[0] = x
        y_grid[: q + 1] = y
        x_grid[1 : q + 1] = design_box.clamp(x + mu * u)
        x_grid[q + 1 :] = x
        y_grid[q + 1 :] = scenario_box.clamp(y + mu * v)
        values = problem.evaluate_many(x_grid, y_grid, budget)
        if not np.all(np.isfinite(values)):
            verdict = VERDICT_ABORTED
            note = "non-finite objective values"
            break
        f_center = values[0]
        grad_x = (problem.m / (q * mu)) * ((values[1 : q + 1] - f_center) @ u)
        grad_y = (problem.n / (q * mu)) * ((values[q + 1 :] - f_center) @ v)
        x = design_box.clamp(x - config.eta_x * grad_x)
        y = scenario_box.clamp(y + config.eta_y * grad_y)
        run.x, run.y = x, y
        iterations += 1
        if config.oracle_check:
            ok, gap = success_check(x, problem, config.target_gap)
            if ok:
                verdict = VERDICT_SUCCESS
            if verdict or checkpoints.due(budget.used):
                run.history.append((budget.used, gap, math.nan, 0))
                checkpoints.mark(budget.used)
        elif checkpoints.due(budget.used):
            run.history.append((budget.used, math.nan, math.nan, 0))
            checkpoints.mark(budget.used)
    _, gap = success_check(x, problem, config.target_gap)
    if run.history[-1][0] < budget.used:
        run.history.append((budget.used, gap, math.nan, 0))
    return _finish(
        problem, config, "zo-pgda", seed, verdict, budget, gap, run, started,
        iterations, note,
    )


ALGORITHMS = {
    "wra-cmaes": (WraCmaesConfig, solve_wra_cmaes),
    "zo-pgda": (ZoPgdaConfig, solve_zopgda),
}


def solve(problem: Problem, algorithm: str, config, seed: int) -> RunRecord:
    """Dispatch a single run by algorithm name."""
    if algorithm not in ALGORITHMS:
        raise ContractError(f"unknown algorithm '{algorithm}'")
    expected, fn = ALGORITHMS[algorithm]
    if not isinstance(config, expected):
        raise ContractError(f"{algorithm} expects a {expected.__name__}")
    return fn(problem, config, seed)
