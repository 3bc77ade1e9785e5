"""Exception types raised by the numerical routines."""


class BipodalError(Exception):
    """Base class for all library errors."""


class DomainError(BipodalError, ValueError):
    """An argument lies outside the domain of a formula."""


class InfeasibleError(BipodalError, ValueError):
    """The requested constraint point has no admissible graphon of the given form."""


class SingularityError(BipodalError, ArithmeticError):
    """A closed form degenerates (e.g. on the Erdos-Renyi curve where a == d)."""


class NoConvergenceError(BipodalError, RuntimeError):
    """An iterative solver failed from every starting point.

    ``best`` carries the least-bad attempt, if any, for diagnostics.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NoSignChangeError(BipodalError, ValueError):
    """A bracket does not contain a sign change of the target function."""
