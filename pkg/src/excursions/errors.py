"""Semantic exception hierarchy used across the package.

Callers can rely on two broad categories: ``DomainError`` for contract
violations on inputs (bad arguments, unusable sample sets) and
``NumericalError`` for failures of the numerical machinery itself
(factorization breakdown, unresolvable grids, vanishing denominators).
"""


class ExcursionError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ExcursionError, ValueError):
    """An input violates an operation's precondition."""


class NumericalError(ExcursionError, ArithmeticError):
    """A numerical procedure failed beyond its configured tolerances."""


class MonotonicityViolation(ExcursionError):
    """A curve that must be monotone is not.

    Attributes
    ----------
    which : str
        Name of the offending curve.
    index : int or None
        First offending index into the tabulation.
    t : float or None
        Abscissa of the first violation, when meaningful.
    """

    def __init__(self, message: str, which: str = "", index: int | None = None,
                 t: float | None = None):
        super().__init__(message)
        self.which = which
        self.index = index
        self.t = t


class ValidationError(ExcursionError):
    """A model failed one or more consistency checks.

    Carries the list of failed check descriptions in ``failures``.
    """

    def __init__(self, failures: list[str]):
        super().__init__("validation failed: " + "; ".join(failures))
        self.failures = list(failures)


class GridTooShort(ExcursionError):
    """A tabulation grid does not reach the asymptotic regime."""


class FitError(ExcursionError):
    """A tail fit could not be performed on the given samples."""


class EmptyExcursionSet(ExcursionError):
    """A trajectory contains no complete excursion at the requested level."""
