"""Exception types raised by the library."""


class IsoSolitonError(Exception):
    """Base class for all library errors."""


class DomainError(IsoSolitonError, ValueError):
    """Evaluation requested outside an operator's domain (e.g. r <= 0)."""


class ConstraintError(IsoSolitonError, ValueError):
    """The pair (f, X) violates f**2 + |X|**2 = 1."""


class UnsupportedCaseError(IsoSolitonError, ValueError):
    """The background case is not covered by the requested operation."""


class SeriesDomainError(IsoSolitonError, ValueError):
    """A truncated series was evaluated where its tail is not negligible."""


class StiffnessError(IsoSolitonError, RuntimeError):
    """The adaptive step size collapsed below the allowed minimum."""


class SingularEvaluationError(IsoSolitonError, ZeroDivisionError):
    """A quotient with a vanishing denominator was requested."""


class CflError(IsoSolitonError, ValueError):
    """An explicit time step exceeds the stability bound."""
