"""The eight min-max benchmark problems, budget accounting, and grid oracles.

Each problem is f(x, y) on X = [-3, 3]^m, Y = [-3, 3]^n with a closed-form
worst-case scenario yhat(x) and worst-case objective F(x) = f(x, yhat(x)).
Charged evaluations go through `evaluate`/`evaluate_many` and count against
an EvalBudget; the analytic oracles (`worst_scenario`, `F_true`) are free.
"""

from __future__ import annotations

import numpy as np

from .cmaes import Box
from .errors import BudgetError, ContractError

DOMAIN_LOW = -3.0
DOMAIN_HIGH = 3.0


class EvalBudget:
    """Monotone f-call counter shared by every charged evaluation path."""

    def __init__(self, limit: int):
        limit = int(limit)
        if limit < 0:
            raise ContractError("budget limit must be non-negative")
        self.limit = limit
        self.used = 0

    @property
    def remaining(self) -> int:
        return self.limit - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.limit

    def charge(self, count: int = 1) -> None:
        if count < 0:
            raise ContractError("cannot charge a negative count")
        if self.used + count > self.limit:
            raise BudgetError(
                f"budget exhausted: {self.used} used, {count} requested, limit {self.limit}"
            )
        self.used += count


# -- objective formulas (vectorized over rows) -------------------------------


def _dot(X, Y):
    return np.einsum("ij,ij->i", X, Y)


def _sq(X):
    return np.einsum("ij,ij->i", X, X)


def _l1(X):
    return np.abs(X).sum(axis=1)


def _f1(X, Y, b):
    return _dot(X, Y)


def _f2(X, Y, b):
    return 0.5 * _sq(X) + _dot(X, Y)


def _f3(X, Y, b):
    return 0.5 * _sq(X + 1.0) + 0.1 * _dot(X, Y)


def _f4(X, Y, b):
    return 0.5 * _sq(X) + _dot(X, Y) + 0.5 * _sq(Y)


def _f5(X, Y, b):
    return 0.5 * _sq(X) + b * _dot(X, Y) - 0.5 * _sq(Y)


def _f6(X, Y, b):
    return 0.5 * _sq(X) + _l1(X) + b * _dot(X, Y) - _l1(Y) - 0.5 * _sq(Y)


def _f7(X, Y, b):
    return 0.25 * _sq(X) ** 2 + b * _dot(X, Y) - 0.25 * _sq(Y) ** 2


def _f8(X, Y, b):
    return _l1(X) + b * _dot(X, Y) - _l1(Y)


# -- worst-case scenarios (single design vector x -> scenario vector) --------


def _w_linear(x, b):
    return DOMAIN_HIGH * np.sign(x)


def _w_f4(x, b):
    # at x_i = 0 both boundary points attain the max; pick +3
    return np.where(x >= 0.0, DOMAIN_HIGH, DOMAIN_LOW)


def _w_f5(x, b):
    return np.clip(b * x, DOMAIN_LOW, DOMAIN_HIGH)


def _w_f6(x, b):
    inner = np.clip(b * x - np.sign(x), DOMAIN_LOW, DOMAIN_HIGH)
    return np.where(np.abs(x) <= 1.0 / b, 0.0, inner)


def _w_f7(x, b):
    nsq = float(np.dot(x, x))
    if nsq == 0.0:
        # singular point of the closed form; F is continuous with value 0
        return np.zeros_like(x)
    scale = (b / nsq) ** (1.0 / 3.0)
    return np.clip(scale * x, DOMAIN_LOW, DOMAIN_HIGH)


def _w_f8(x, b):
    return np.where(np.abs(x) <= 1.0 / b, 0.0, DOMAIN_HIGH * np.sign(x))


# -- gradient-norm bounds sup_y ||grad_y f(x, y)|| for grid tolerances -------


def _lip_f1(x, b, n):
    return float(np.linalg.norm(x))


def _lip_f3(x, b, n):
    return 0.1 * float(np.linalg.norm(x))


def _lip_f4(x, b, n):
    return float(np.linalg.norm(x)) + 3.0 * np.sqrt(n)


def _lip_f5(x, b, n):
    return b * float(np.linalg.norm(x)) + 3.0 * np.sqrt(n)


def _lip_f6(x, b, n):
    return b * float(np.linalg.norm(x)) + 4.0 * np.sqrt(n)


def _lip_f7(x, b, n):
    return b * float(np.linalg.norm(x)) + (3.0 * np.sqrt(n)) ** 3


def _lip_f8(x, b, n):
    return b * float(np.linalg.norm(x)) + np.sqrt(n)


class Problem:
    """One benchmark instance: charged black box plus analytic oracles."""

    def __init__(self, pid, m, n, b, formula, worst_fn, lip_fn, x_char, y_char, x_star):
        if m != n:
            raise ContractError("the interaction term x.y requires m == n")
        self.id = pid
        self.m = int(m)
        self.n = int(n)
        self.b = float(b)
        self.x_characteristic = x_char
        self.y_characteristic = y_char
        self.design_box = Box.cube(self.m, DOMAIN_LOW, DOMAIN_HIGH)
        self.scenario_box = Box.cube(self.n, DOMAIN_LOW, DOMAIN_HIGH)
        self._formula = formula
        self._worst_fn = worst_fn
        self._lip_fn = lip_fn
        # charged evaluations funnel through this attribute so tests can wrap
        # it with an independent call counter; the analytic oracles bypass it
        self.f_batch = formula
        self.x_star = np.asarray(x_star, dtype=float)
        self.f_star = self.F_true(self.x_star)

    def __repr__(self):
        return f"Problem({self.id}, m={self.m}, n={self.n}, b={self.b})"

    def _check_inputs(self, X, Y):
        if X.shape[1] != self.m or Y.shape[1] != self.n or X.shape[0] != Y.shape[0]:
            raise ContractError(f"{self.id}: expected shapes (k,{self.m}) and (k,{self.n})")
        if not self.design_box.contains(X):
            raise ContractError(f"{self.id}: design point outside X")
        if not self.scenario_box.contains(Y):
            raise ContractError(f"{self.id}: scenario point outside Y")

    def evaluate(self, x, y, budget: EvalBudget) -> float:
        """One charged f(x, y) evaluation."""
        X = np.asarray(x, dtype=float).reshape(1, -1)
        Y = np.asarray(y, dtype=float).reshape(1, -1)
        self._check_inputs(X, Y)
        budget.charge(1)
        return float(self.f_batch(X, Y, self.b)[0])

    def evaluate_many(self, X, Y, budget: EvalBudget) -> np.ndarray:
        """Charged batch evaluation of paired rows; charges one call per row."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        self._check_inputs(X, Y)
        budget.charge(X.shape[0])
        return self.f_batch(X, Y, self.b)

    def worst_scenario(self, x) -> np.ndarray:
        """Closed-form maximizer yhat(x) of f(x, .) over Y (uncharged)."""
        x = np.asarray(x, dtype=float)
        return self._worst_fn(x, self.b)

    def F_true(self, x) -> float:
        """Worst-case objective F(x) = f(x, yhat(x)) (uncharged)."""
        x = np.asarray(x, dtype=float)
        y = self._worst_fn(x, self.b)
        return float(self._formula(x.reshape(1, -1), y.reshape(1, -1), self.b)[0])

    def scenario_gradient_bound(self, x) -> float:
        """Upper bound on ||grad_y f(x, .)|| over Y, used for grid tolerances."""
        return self._lip_fn(np.asarray(x, dtype=float), self.b, self.n)


_SPECS = {
    # id: (formula, worst, lip, x-characteristic, y-characteristic, b fixed?)
    "f1": (_f1, _w_linear, _lip_f1, "linear", "linear", True),
    "f2": (_f2, _w_linear, _lip_f1, "sm st-cv", "linear", True),
    "f3": (_f3, _w_linear, _lip_f3, "sm st-cv", "linear", True),
    "f4": (_f4, _w_f4, _lip_f4, "sm st-cv", "sm st-cv", True),
    "f5": (_f5, _w_f5, _lip_f5, "sm st-cv", "sm st-cc", False),
    "f6": (_f6, _w_f6, _lip_f6, "non-sm st-cv", "non-sm st-cc", False),
    "f7": (_f7, _w_f7, _lip_f7, "cv", "cc", False),
    "f8": (_f8, _w_f8, _lip_f8, "non-sm cv", "non-sm cc", False),
}

PROBLEM_IDS = tuple(_SPECS)


def make_problem(pid: str, m: int, n: int, b: float | None = None) -> Problem:
    """Build a problem by id; b is accepted only where the definition has one."""
    if pid not in _SPECS:
        raise ContractError(f"unknown problem id '{pid}' (expected one of {PROBLEM_IDS})")
    formula, worst, lip, x_char, y_char, b_fixed = _SPECS[pid]
    if b_fixed:
        if b is not None:
            raise ContractError(f"{pid} has a fixed interaction coefficient; b is not a parameter")
        b_val = 1.0
    else:
        b_val = 1.0 if b is None else float(b)
        if b_val <= 0:
            raise ContractError("b must be positive")
    x_star = np.full(m, -0.7) if pid == "f3" else np.zeros(m)
    return Problem(pid, m, n, b_val, formula, worst, lip, x_char, y_char, x_star)


def registry() -> dict:
    """Summary rows for every problem id (for CLI listing)."""
    rows = {}
    for pid, (_, _, _, x_char, y_char, b_fixed) in _SPECS.items():
        rows[pid] = {
            "x": x_char,
            "y": y_char,
            "b": "fixed" if b_fixed else "parameter",
            "x_star": "-0.7" if pid == "f3" else "0",
        }
    return rows


# -- grid oracle --------------------------------------------------------------


def _grid(resolution: int) -> np.ndarray:
    return np.linspace(DOMAIN_LOW, DOMAIN_HIGH, resolution)


def grid_max(problem: Problem, x, resolution: int) -> float:
    """Exact maximum of f(x, .) over the r-per-axis product grid on Y.

    All problems except f7 are coordinate-separable in y, so the product-grid
    maximum is the sum of per-coordinate maxima.  f7 couples coordinates
    through ||y||^4; there the grid is reduced exactly to one sign-optimal
    orthant (the grid is symmetric and only |y_i| enters outside the
    interaction term) and the remaining magnitude grid is enumerated.
    """
    x = np.asarray(x, dtype=float)
    g = _grid(resolution)
    b = problem.b
    if problem.id == "f7":
        mags = g[g >= 0.0]
        coeff = b * np.abs(x)
        gains = coeff[:, None] * mags[None, :]  # (n, r+)
        squares = mags**2
        if problem.n == 1:
            total = gains[0] - 0.25 * squares**2
            best = float(total.max())
        elif problem.n == 2:
            s = squares[:, None] + squares[None, :]
            total = gains[0][:, None] + gains[1][None, :] - 0.25 * s**2
            best = float(total.max())
        elif problem.n == 3:
            best = -np.inf
            sq12 = squares[:, None] + squares[None, :]
            gain12 = gains[0][:, None] + gains[1][None, :]
            for k in range(mags.size):
                s = sq12 + squares[k]
                total = gain12 + gains[2][k] - 0.25 * s**2
                best = max(best, float(total.max()))
        else:
            raise ContractError("grid oracle supports n <= 3")
        return 0.25 * float(np.dot(x, x)) ** 2 + best

    if problem.n > 3:
        raise ContractError("grid oracle supports n <= 3")
    if problem.id in ("f1", "f2", "f3"):
        coeff = 0.1 * x if problem.id == "f3" else x
        per_coord = coeff[:, None] * g[None, :]
    elif problem.id == "f4":
        per_coord = x[:, None] * g[None, :] + 0.5 * g[None, :] ** 2
    elif problem.id == "f5":
        per_coord = b * x[:, None] * g[None, :] - 0.5 * g[None, :] ** 2
    elif problem.id == "f6":
        per_coord = b * x[:, None] * g[None, :] - np.abs(g)[None, :] - 0.5 * g[None, :] ** 2
    elif problem.id == "f8":
        per_coord = b * x[:, None] * g[None, :] - np.abs(g)[None, :]
    else:  # pragma: no cover
        raise ContractError(f"no grid oracle for {problem.id}")
    best = float(per_coord.max(axis=1).sum())

    if problem.id in ("f2", "f5"):
        return 0.5 * float(np.dot(x, x)) + best
    if problem.id == "f3":
        return 0.5 * float(np.dot(x + 1.0, x + 1.0)) + best
    if problem.id == "f4":
        return 0.5 * float(np.dot(x, x)) + best
    if problem.id == "f6":
        return 0.5 * float(np.dot(x, x)) + float(np.abs(x).sum()) + best
    if problem.id == "f8":
        return float(np.abs(x).sum()) + best
    return best  # f1


def verify_worst_scenario(problem: Problem, x, resolution: int = 601) -> bool:
    """Check the closed-form F against a brute-force grid maximum.

    Two-sided check: F(x) must dominate every grid point (up to rounding),
    and must be attainable, i.e. not exceed the grid maximum by more than
    the grid-gap bound  ||grad_y f|| * half cell diagonal.
    """
    x = np.asarray(x, dtype=float)
    if problem.n > 3:
        raise ContractError("verify_worst_scenario requires n <= 3")
    y_hat = problem.worst_scenario(x)
    if not problem.scenario_box.contains(y_hat.reshape(1, -1)):
        return False
    f_claimed = problem.F_true(x)
    g_max = grid_max(problem, x, resolution)
    spacing = (DOMAIN_HIGH - DOMAIN_LOW) / (resolution - 1)
    gap_bound = problem.scenario_gradient_bound(x) * 0.5 * spacing * np.sqrt(problem.n)
    rounding = 1e-9 * (1.0 + abs(g_max))
    return g_max - rounding <= f_claimed <= g_max + gap_bound + rounding
