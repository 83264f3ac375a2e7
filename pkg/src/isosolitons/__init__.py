"""Cohomogeneity-one solitons of the isometric flow of G2-structures.

Closed-form warped-bundle geometry, odd series at the origin, log-radius
integration, torsion asymptotics and method-of-lines flows for flat R^7,
Calabi-Yau cylinders, nearly-Kahler cones and the Bryant-Salamon metrics.
"""

from .cases import BackgroundCase, CaseKind, WarpProfile, parse_case
from .errors import (CflError, ConstraintError, DomainError, IsoSolitonError, SeriesDomainError,
                     SingularEvaluationError, StiffnessError, UnsupportedCaseError)
from .integrator import LogState, Trajectory, comparison_envelope, integrate, rhs_log, solve_soliton
from .series import OddSeries, SolitonOdeParams, case_params, eval_series, frobenius_coeffs, sine_series

__version__ = "0.1.0"

__all__ = [
    "BackgroundCase", "CaseKind", "WarpProfile", "parse_case",
    "CflError", "ConstraintError", "DomainError", "IsoSolitonError", "SeriesDomainError",
    "SingularEvaluationError", "StiffnessError", "UnsupportedCaseError",
    "LogState", "Trajectory", "comparison_envelope", "integrate", "rhs_log", "solve_soliton",
    "OddSeries", "SolitonOdeParams", "case_params", "eval_series", "frobenius_coeffs", "sine_series",
]
