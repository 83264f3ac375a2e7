"""Odd power-series solutions at the regular singular point r = 0.

The soliton equations of the flat, cone and Bryant-Salamon backgrounds all
belong to the family

    r² u'' + (d - c r²)/(1 + b r²) r u' - (d + e r² + f r⁴)/(1 + b r²)² sin u = 0

whose analytic solutions near the origin are odd, determined by ``u'(0)``.
Coefficients are built with a recurrence in which ``sin u`` is expanded by
truncated polynomial composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cases import BackgroundCase, CaseKind
from .errors import SeriesDomainError, UnsupportedCaseError

DEFAULT_ORDER = 21
GUARD_RATIO = 1e-6
SWITCH_CANDIDATES = (0.05, 0.1, 0.2, 0.4)


@dataclass(frozen=True)
class SolitonOdeParams:
    b: float
    c: float
    d: float
    e: float
    f: float

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("d must be positive")
        if self.b < 0 or self.e < 0 or self.f < 0:
            raise ValueError("b, e, f must be non-negative")

    def as_dict(self):
        return {"b": self.b, "c": self.c, "d": self.d, "e": self.e, "f": self.f}

    def damping(self, r):
        """``P(r) = (d - c r²)/(1 + b r²)``."""
        r2 = np.asarray(r, dtype=float) ** 2
        return (self.d - self.c * r2) / (1 + self.b * r2)

    def forcing(self, r):
        """``Q(r) = (d + e r² + f r⁴)/(1 + b r²)²``, strictly positive."""
        r2 = np.asarray(r, dtype=float) ** 2
        return (self.d + self.e * r2 + self.f * r2 * r2) / (1 + self.b * r2) ** 2


def case_params(case: BackgroundCase) -> SolitonOdeParams:
    """Map a background onto the ODE family (the cylinder is not a member)."""
    if case.is_cone:
        return SolitonOdeParams(0.0, case.c, 6.0, 0.0, 0.0)
    lam = case.lam
    if case.kind is CaseKind.BRYANT_SALAMON_A:
        return SolitonOdeParams(1 / lam, -7 / (2 * lam), 2.0, 2 / lam, 3 / (2 * lam**2))
    if case.kind is CaseKind.BRYANT_SALAMON_B:
        return SolitonOdeParams(1 / lam, -13 / (3 * lam), 3.0, 4 / lam, 8 / (3 * lam**2))
    raise UnsupportedCaseError("the Calabi-Yau cylinder ODE has no sine term and is solved in closed form")


def ode_lhs(params: SolitonOdeParams, u, du, d2u, r):
    """Left-hand side of the family equation."""
    r = np.asarray(r, dtype=float)
    return r * r * d2u + params.damping(r) * r * du - params.forcing(r) * np.sin(u)


# -- truncated polynomial arithmetic -------------------------------------------

def _mul(p, q, order):
    return np.convolve(p, q)[: order + 1]


def _pad(p, order):
    out = np.zeros(order + 1)
    p = np.asarray(p, dtype=float)[: order + 1]
    out[: p.size] = p
    return out


def sine_series(coeffs, order):
    """Coefficients of ``sin u`` through ``r**order`` for ``u = sum coeffs[k] r^k``.

    ``coeffs[0]`` must vanish.  Built by summing the Maclaurin series of
    sine with repeated truncated multiplication.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    u = _pad(coeffs, order)
    if u[0] != 0:
        raise ValueError("series must vanish at r = 0")
    u2 = _mul(u, u, order)
    term = u.copy()
    total = u.copy()
    n = 1
    while 2 * n + 1 <= order and np.any(term):
        term = -_mul(term, u2, order) / ((2 * n) * (2 * n + 1))
        total += term
        n += 1
    return total


@dataclass(frozen=True)
class OddSeries:
    """Truncated odd series ``u = a1 r + a3 r³ + ... + a_N r^N``.

    ``sources`` records how each retained coefficient was obtained.
    """

    a1: float
    odd_coeffs: tuple
    order: int
    params: SolitonOdeParams
    sources: tuple = ()

    @property
    def coefficients(self):
        out = np.zeros(self.order + 1)
        out[1] = self.a1
        out[3::2] = self.odd_coeffs
        return out

    @property
    def last_term_coeff(self):
        return self.odd_coeffs[-1] if self.odd_coeffs else self.a1


def frobenius_coeffs(params: SolitonOdeParams, a1, order=DEFAULT_ORDER) -> OddSeries:
    """Solve the coefficient recurrence through degree ``order`` (odd, >= 3)."""
    if order < 3 or order % 2 == 0:
        raise ValueError("truncation order must be odd and at least 3")
    b, c, d, e, f = params.b, params.c, params.d, params.e, params.f
    a = np.zeros(order + 1)
    T = np.zeros(order + 1)
    a[1] = a1

    def at(arr, j):
        return arr[j] if j >= 0 else 0.0

    for k in range(2, order + 1):
        # T_k only involves a_1 .. a_{k-2}
        T[k] = sine_series(a[: k - 1], k)[k]
        rhs = d * T[k] + e * at(T, k - 2) + f * at(T, k - 4)
        rhs -= (2 * b * (k - 2) * (k - 3) + (b * d - c) * (k - 2) - e) * at(a, k - 2)
        rhs -= (b * b * (k - 4) * (k - 5) - b * c * (k - 4) - f) * at(a, k - 4)
        a[k] = rhs / ((k - 1) * (k + d))
    if np.any(a[2::2] != 0.0):
        raise AssertionError("even Frobenius coefficients must vanish identically")
    sources = ("free parameter u'(0)", "cubic relation") + tuple(
        f"recurrence k={k}" for k in range(5, order + 1, 2))
    return OddSeries(float(a1), tuple(float(x) for x in a[3::2]), order, params, sources)


def residual_polynomial(series: OddSeries):
    """Cleared-denominator residual of the truncated series, degrees 0..N.

    Every entry vanishes (to rounding) when the recurrence is correct.
    """
    p = series.params
    N = series.order
    a = series.coefficients
    k = np.arange(N + 1)
    one_br2 = _pad([1.0, 0.0, p.b], N)
    second = _mul(_mul(one_br2, one_br2, N), k * (k - 1) * a, N)
    first = _mul(_mul(one_br2, _pad([p.d, 0.0, -p.c], N), N), k * a, N)
    sine = _mul(_pad([p.d, 0.0, p.e, 0.0, p.f], N), sine_series(a, N), N)
    return second + first - sine


class SeriesValue(NamedTuple):
    u: float
    du: float
    d2u: float
    tail: float


def guard_ratio(series: OddSeries, r):
    """``|a_N r^N| / |a_1 r|``; zero for the trivial series."""
    if series.a1 == 0.0:
        return 0.0
    r = abs(float(r))
    return abs(series.last_term_coeff) * r ** (series.order - 1) / abs(series.a1)


def eval_series(series: OddSeries, r, *, guard=GUARD_RATIO) -> SeriesValue:
    """Horner evaluation of ``u, u', u''`` with the last retained term as error proxy."""
    r_arr = np.asarray(r, dtype=float)
    r_max = float(np.max(np.abs(r_arr))) if r_arr.size else 0.0
    ratio = guard_ratio(series, r_max)
    if ratio > guard:
        raise SeriesDomainError(
            f"series tail ratio {ratio:.2e} exceeds {guard:.0e} at r={r_max:g}; "
            "shrink r or raise the order")
    coeffs = series.coefficients
    poly = np.polynomial.Polynomial(coeffs)
    dpoly = poly.deriv()
    d2poly = dpoly.deriv()
    tail = abs(series.last_term_coeff) * np.abs(r_arr) ** series.order
    vals = [poly(r_arr), dpoly(r_arr), d2poly(r_arr), tail]
    if r_arr.ndim == 0:
        vals = [float(v) for v in vals]
    return SeriesValue(*vals)


def choose_switch_radius(series: OddSeries, candidates=SWITCH_CANDIDATES, *, guard=GUARD_RATIO):
    """Largest candidate radius at which the series passes its guard."""
    ok = [r for r in candidates if guard_ratio(series, r) <= guard]
    if not ok:
        raise SeriesDomainError("no handoff radius passes the series guard; raise the order")
    return max(ok)


def maclaurin_sine_coefficient(coeffs, k):
    """Coefficient of ``r^k`` in ``sin u`` from the explicit finite sum.

    Independent of :func:`sine_series`: sums ``(-1)^n/(2n+1)! [r^k] (sum_{m<=k-2n} a_m r^m)^(2n+1)``
    with exact integer powers via repeated convolution of the untruncated polynomial.
    """
    a = np.asarray(coeffs, dtype=float)
    total = a[k] if k < a.size else 0.0
    for n in range(1, (k - 1) // 2 + 1):
        base = a[: k - 2 * n + 1]
        power = np.array([1.0])
        for _ in range(2 * n + 1):
            power = np.convolve(power, base)
        if k < power.size:
            total += (-1) ** n / math.factorial(2 * n + 1) * power[k]
    return float(total)
