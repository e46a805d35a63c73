"""Exception hierarchy shared by all modules."""


class KeyboundError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgument(KeyboundError, ValueError):
    """An argument violates a documented precondition."""


class InconsistentStatistics(KeyboundError):
    """No quantum state (or noise model) reproduces the observed statistics."""


class NumericalFailure(KeyboundError):
    """The numerical solver did not converge.

    ``best_bound`` carries the best objective value reached, when available.
    """

    def __init__(self, message, best_bound=None):
        super().__init__(message)
        self.best_bound = best_bound


class UnsupportedDimension(KeyboundError):
    """Problem dimension lies outside the supported (PPT-exact) regime."""


class UnsupportedSize(KeyboundError):
    """Alphabet too large for the exhaustive/heuristic search."""
