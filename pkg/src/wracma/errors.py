"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violated a documented precondition."""


class BudgetError(RuntimeError):
    """The evaluation budget cannot cover the requested charge.

    ``partial`` optionally carries whatever results were computed before
    the budget ran out, so callers can terminate gracefully.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CovarianceError(RuntimeError):
    """Covariance factorization failed for a named search distribution."""


class DegenerateTauError(ValueError):
    """Kendall's tau is undefined because a rank vector carries no ties
    to break, i.e. at least one input list is constant."""
