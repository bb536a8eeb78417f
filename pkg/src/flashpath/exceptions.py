"""Exception types raised by the path engines."""


class FlashError(Exception):
    """Base class for errors raised by flashpath."""


class DataError(FlashError, ValueError):
    """Malformed or unsupported input data."""


class SingularGramError(FlashError, ArithmeticError):
    """The active-set Gram matrix cannot be factorized."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class StepBudgetError(FlashError, RuntimeError):
    """A single path step needed more events than the safety cap allows."""


class ConvergenceError(FlashError, ArithmeticError):
    """The GLM corrector did not converge.

    ``iterate`` holds the last (intercept, coefficients) pair and
    ``kkt_residual`` its optimality violation.
    """

    def __init__(self, message, iterate=None, kkt_residual=float("nan"), path=None):
        super().__init__(message)
        self.iterate = iterate
        self.kkt_residual = kkt_residual
        self.path = path
