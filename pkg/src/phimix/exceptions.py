"""Exception hierarchy shared by all modules."""


class PhimixError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(PhimixError, ValueError):
    """An argument violates a documented precondition."""


class BoundaryGradientError(PhimixError, ValueError):
    """An entropy gradient was requested at a point where it is singular."""


class InfiniteLossError(PhimixError, ArithmeticError):
    """A loss evaluated to +inf (log loss at a zero-probability outcome)."""


class UnboundedPenaltyError(PhimixError, ArithmeticError):
    """The regret penalty D(delta_theta, prior) is not finite."""


class SolverError(PhimixError, RuntimeError):
    """A numeric solver failed to converge.

    Attributes
    ----------
    best : ndarray or None
        Best iterate found before giving up.
    residual : float
        Residual of the best iterate.
    """

    def __init__(self, message, best=None, residual=float("nan")):
        super().__init__(message)
        self.best = best
        self.residual = residual


class OutOfRangeError(PhimixError, RuntimeError):
    """The mixability-constant search found no feasible value in its bracket."""
