"""Derivative-free min-max optimization with worst-case ranking approximation.

The library minimizes F(x) = max_y f(x, y) for black-box f on box domains:
an outer CMA-ES asks for candidates, their worst-case ranking is estimated
by warm-started, early-stopped inner CMA-ES maximizations, and the outer
distribution is told the ranks.  A benchmark harness reproduces the
standard eight-problem comparison against the ZO-PGDA baseline.
"""

from .bench import BatteryResult, ExperimentConfig, emit_results, run_experiment
from .cmaes import Box, SearchDistribution, default_pop_size, mirror
from .errors import (
    BudgetError,
    ContractError,
    CovarianceError,
    DegenerateTauError,
)
from .problems import (
    EvalBudget,
    PROBLEM_IDS,
    Problem,
    make_problem,
    verify_worst_scenario,
)
from .rankstats import kendall_tau, ranking_of
from .solvers import (
    RunRecord,
    WraCmaesConfig,
    ZoPgdaConfig,
    solve,
    solve_wra_cmaes,
    solve_zopgda,
    success_check,
)
from .wra import WraOutcome, WraParams, WraState

__version__ = "0.1.0"

__all__ = [
    "BatteryResult",
    "Box",
    "BudgetError",
    "ContractError",
    "CovarianceError",
    "DegenerateTauError",
    "EvalBudget",
    "ExperimentConfig",
    "PROBLEM_IDS",
    "Problem",
    "RunRecord",
    "SearchDistribution",
    "WraCmaesConfig",
    "WraOutcome",
    "WraParams",
    "WraState",
    "ZoPgdaConfig",
    "default_pop_size",
    "emit_results",
    "kendall_tau",
    "make_problem",
    "mirror",
    "ranking_of",
    "run_experiment",
    "solve",
    "solve_wra_cmaes",
    "solve_zopgda",
    "success_check",
    "verify_worst_scenario",
]
