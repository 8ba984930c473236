"""Exception types shared across the package."""


class CfmmError(Exception):
    """Base class for all package errors."""


class InvalidInputError(CfmmError, ValueError):
    """An argument is outside the domain of the operation."""


class InfeasibleTradeError(CfmmError, ValueError):
    """A trade would leave a reserve at or below zero."""


class InsufficientBalanceError(CfmmError, ValueError):
    """An agent tried to spend more liquidity tokens than it holds."""


class ConvergenceError(CfmmError, RuntimeError):
    """An iterative solver hit its iteration cap.

    The best iterate found so far is kept on ``best`` so callers can
    inspect or fall back to it.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
