"""Worst-case ranking approximation.

Given the outer minimizer's candidates x_1..x_lambda, estimate the ranking
of their worst-case objective values F(x_i) = max_y f(x_i, y) by running one
warm-started, early-stopped CMA-ES maximization per candidate:

* warm start: pick for each candidate the archived scenario-search instance
  whose stored scenario is worst for it (cloning on collisions, with fresh
  adaptation state);
* ranking rounds: advance every instance a little, re-estimate the F values,
  and stop as soon as Kendall's tau between consecutive estimate vectors
  exceeds a threshold -- the outer CMA-ES only consumes ranks, so estimates
  need to be no more accurate than their ordering;
* post-process: archive the final instances, inflate collapsed coordinate
  deviations back to the exploration floor, and reset instances whose
  archived scenarios collided.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cmaes import Box, SearchDistribution, mirror
from .errors import BudgetError, ContractError, DegenerateTauError
from .problems import EvalBudget
from .rankstats import kendall_tau, ranking_of


@dataclass
class WraParams:
    """Stopping and hygiene parameters of the ranking approximation.

    guard_mode selects the per-round instance stop rule: "any" stops a run
    when the improvement cap is hit or the instance has converged and
    matured; "all" keeps running until the improvement cap is hit and the
    instance has converged at least once.
    """

    tau_threshold: float = 0.7
    c_max: int = 2
    v_min: float = 1e-4
    t_min: int = 10
    max_rounds: int = 100
    guard_mode: str = "any"

    def __post_init__(self):
        if not 0.0 < self.tau_threshold <= 1.0:
            raise ContractError("tau_threshold must be in (0, 1]")
        if self.c_max < 1:
            raise ContractError("c_max must be at least 1")
        if self.v_min < 0.0:
            raise ContractError("v_min must be non-negative")
        if self.t_min < 0:
            raise ContractError("t_min must be non-negative")
        if self.max_rounds < 1:
            raise ContractError("max_rounds must be at least 1")
        if self.guard_mode not in ("any", "all"):
            raise ContractError("guard_mode must be 'any' or 'all'")


@dataclass
class InnerSearch:
    """Per-candidate maximization state inside one ranking call."""

    dist: SearchDistribution
    scenario: np.ndarray  # incumbent worst scenario y~_i
    estimate: float  # running F estimate, non-decreasing
    iterations: int = 0  # t_i, persists across rounds within the call
    converged: bool = False  # h_i flag of the "all" guard
    exhausted: bool = False


@dataclass
class WraOutcome:
    """Result of one ranking call."""

    ranking: np.ndarray  # rank 1 = smallest estimated F
    estimates: np.ndarray
    worst_scenarios: np.ndarray
    fcalls_used: int
    rounds: int
    taus: list = field(default_factory=list)
    truncated: bool = False
    degenerate_tau_rounds: int = 0

    @property
    def tau_final(self) -> float:
        return self.taus[-1] if self.taus else float("nan")


class WraState:
    """Archive of lambda scenario-search instances between ranking calls."""

    def __init__(self, instances, scenarios, scenario_box: Box, params: WraParams,
                 rng: np.random.Generator, std_cap_fraction: float = 0.25):
        if len(instances) != len(scenarios):
            raise ContractError("one archived scenario per instance required")
        self.instances = list(instances)
        self.scenarios = np.array(scenarios, dtype=float)
        self.scenario_box = scenario_box
        self.params = params
        self.rng = rng
        self.std_cap_fraction = std_cap_fraction

    @classmethod
    def initial(cls, count: int, scenario_box: Box, params: WraParams,
                rng: np.random.Generator, pop_size: int | None = None,
                std_cap_fraction: float = 0.25) -> "WraState":
        """Fresh archive: means uniform on Y, std width/4, scenarios sampled."""
        instances = []
        scenarios = []
        step = float(scenario_box.width[0]) / 4.0
        for k in range(count):
            mean = scenario_box.uniform(rng)
            dist = SearchDistribution(mean, step, pop_size=pop_size, label=f"inner[{k}]",
                                      std_cap_fraction=std_cap_fraction)
            instances.append(dist)
            scenarios.append(cls._sample_scenario(dist, scenario_box, rng))
        return cls(instances, scenarios, scenario_box, params, rng,
                   std_cap_fraction=std_cap_fraction)

    @staticmethod
    def _sample_scenario(dist: SearchDistribution, box: Box, rng) -> np.ndarray:
        y = dist.mean + dist.sigma * rng.standard_normal(dist.dim)
        return mirror(y, box)

    @property
    def count(self) -> int:
        return len(self.instances)

    # -- warm starting ----------------------------------------------------

    def warm_start(self, candidates: np.ndarray, problem, budget: EvalBudget):
        """Evaluate all candidate/archive pairs and spawn the inner searches.

        Charges exactly count**2 f-calls.  Each candidate's search starts
        from the instance owning its worst archived scenario (cloned with
        fresh adaptation state) and from that scenario as the incumbent.
        Raises BudgetError carrying partial results when the scan cannot be
        completed.
        """
        lam = self.count
        candidates = np.asarray(candidates, dtype=float)
        if candidates.shape[0] != lam:
            raise ContractError("expected one candidate per archived instance")
        x_rep = np.repeat(candidates, lam, axis=0)
        y_tile = np.tile(self.scenarios, (lam, 1))
        need = lam * lam
        if budget.remaining < need:
            done = budget.remaining
            if done > 0:
                problem.evaluate_many(x_rep[:done], y_tile[:done], budget)
            raise BudgetError(
                f"budget exhausted {done}/{need} pairs into the warm-start scan",
                partial={"pairs_evaluated": done},
            )
        values = problem.evaluate_many(x_rep, y_tile, budget).reshape(lam, lam)
        worst_idx = np.argmax(values, axis=1)
        searches = []
        for i in range(lam):
            k = int(worst_idx[i])
            searches.append(
                InnerSearch(
                    dist=self.instances[k].clone(fresh_adaptation=True, label=f"inner[{i}]"),
                    scenario=self.scenarios[k].copy(),
                    estimate=float(values[i, k]),
                )
            )
        return searches

    # -- ranking rounds ---------------------------------------------------

    def advance_instance(self, search: InnerSearch, x_i: np.ndarray, problem,
                         budget: EvalBudget) -> None:
        """Run one per-round burst of the candidate's scenario search.

        Repeats inner CMA-ES iterations (maximizing f(x_i, .)) until the
        incumbent improved c_max times or the instance has converged
        (all coordinate stds below v_min) after at least t_min iterations;
        stops immediately when the budget cannot cover another iteration.
        """
        p = self.params
        dist = search.dist
        lam_y = dist.pop_size
        x_row = np.broadcast_to(x_i, (lam_y, x_i.size))
        improvements = 0
        while True:
            if p.guard_mode == "any":
                if improvements >= p.c_max:
                    break
                if search.iterations >= p.t_min and dist.stds_below(p.v_min):
                    search.converged = True
                    break
            else:  # "all": literal loop guard, c_max together with the sticky flag
                if improvements >= p.c_max and search.converged:
                    break
            if budget.remaining < lam_y:
                search.exhausted = True
                break
            ys = dist.ask(self.scenario_box, self.rng)
            values = problem.evaluate_many(x_row, ys, budget)
            best = int(np.argmax(values))
            if values[best] > search.estimate:
                search.estimate = float(values[best])
                search.scenario = ys[best].copy()
                improvements += 1
            dist.tell(ys, ranking_of(-values))
            search.iterations += 1
            if (
                p.guard_mode == "all"
                and not search.converged
                and search.iterations >= p.t_min
                and dist.stds_below(p.v_min)
            ):
                search.converged = True

    def approximate_ranking(self, searches, candidates: np.ndarray, problem,
                            budget: EvalBudget) -> WraOutcome:
        """Round loop: advance every search until the estimate ordering settles."""
        lam = self.count
        used_before = budget.used
        estimates = np.array([s.estimate for s in searches], dtype=float)
        taus: list[float] = []
        degenerate = 0
        rounds = 0
        truncated = False
        while rounds < self.params.max_rounds:
            previous = estimates.copy()
            rounds += 1
            for i, search in enumerate(searches):
                self.advance_instance(search, candidates[i], problem, budget)
                estimates[i] = search.estimate
            if any(s.exhausted for s in searches):
                truncated = True
                break
            if not np.all(np.isfinite(estimates)):
                break  # callers abort on non-finite estimates
            if lam < 2:
                taus.append(1.0)
                break
            try:
                tau = kendall_tau(previous, estimates)
            except DegenerateTauError:
                # a constant estimate vector carries no ordering contradiction;
                # treat the ranking as settled and record the degeneracy
                tau = 1.0
                degenerate += 1
            taus.append(tau)
            if tau > self.params.tau_threshold:
                break
        return WraOutcome(
            ranking=ranking_of(estimates),
            estimates=estimates,
            worst_scenarios=np.array([s.scenario for s in searches]),
            fcalls_used=budget.used - used_before,
            rounds=rounds,
            taus=taus,
            truncated=truncated,
            degenerate_tau_rounds=degenerate,
        )

    # -- post-processing --------------------------------------------------

    def post_process(self, searches) -> None:
        """Archive the final searches and restore exploration hygiene.

        Every coordinate std is inflated up to at least v_min, and any
        instance whose archived scenario lies within v_min * sqrt(n) of an
        earlier one is reset to the global initialization.
        """
        p = self.params
        n = self.scenario_box.dim
        for i, search in enumerate(searches):
            self.instances[i] = search.dist
            self.scenarios[i] = search.scenario
            std = search.dist.coordinate_std
            factors = np.maximum(1.0, p.v_min / std)
            if np.any(factors > 1.0):
                search.dist.scale_stds(factors)
        min_dist = p.v_min * np.sqrt(n)
        for i in range(self.count):
            for k in range(i + 1, self.count):
                if np.linalg.norm(self.scenarios[i] - self.scenarios[k]) < min_dist:
                    self._reset_instance(k)

    def _reset_instance(self, k: int) -> None:
        step = float(self.scenario_box.width[0]) / 4.0
        dist = SearchDistribution(
            self.scenario_box.uniform(self.rng),
            step,
            pop_size=self.instances[k].pop_size,
            label=f"inner[{k}]",
            std_cap_fraction=self.std_cap_fraction,
        )
        self.instances[k] = dist
        self.scenarios[k] = self._sample_scenario(dist, self.scenario_box, self.rng)

    # -- one full call ------------------------------------------------------

    def rank_candidates(self, candidates: np.ndarray, problem,
                        budget: EvalBudget) -> WraOutcome:
        """Warm start, ranking rounds, and post-processing in one call."""
        used_before = budget.used
        searches = self.warm_start(candidates, problem, budget)
        outcome = self.approximate_ranking(searches, candidates, problem, budget)
        self.post_process(searches)
        outcome.fcalls_used = budget.used - used_before
        return outcome
