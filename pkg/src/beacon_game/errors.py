"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class NumericError(ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


class ConvergenceError(NumericError):
    """Iterative solver hit its iteration cap before meeting tolerance."""

    def __init__(self, message, best_gap=None):
        super().__init__(message)
        self.best_gap = best_gap
