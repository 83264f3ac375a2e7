"""Background torsion-free G2 geometries and their warped bundle profiles.

Every background is a metric of the form

    g = h(r)**2 * sum(b_i**2) + k(r)**2 * sum(zeta_alpha**2)

on the total space of a rank-``m`` bundle over an ``n``-dimensional base,
with ``r`` the fibre radius.  Derivatives of ``h`` and ``k`` are coded
analytically so that oracle comparisons are not polluted by numerical
differentiation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

Scalar = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class WarpProfile:
    """Warping data (n, m, h, k) with first and second derivatives."""

    n: int
    m: int
    h: Scalar
    dh: Scalar
    d2h: Scalar
    k: Scalar
    dk: Scalar
    d2k: Scalar

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("base dimension and fibre rank must be positive")

    def values(self, r):
        """Return ``(h, h', h'', k, k', k'')`` evaluated at ``r``."""
        return (self.h(r), self.dh(r), self.d2h(r),
                self.k(r), self.dk(r), self.d2k(r))

    def check_positive(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(np.asarray(self.h(r)) <= 0) or np.any(np.asarray(self.k(r)) <= 0):
            raise DomainError("warping functions must be positive")

    def derivative_mismatch(self, r, step=1e-4):
        """Largest gap between the coded derivatives and central differences.

        Returns the maximum over ``h', h'', k', k''`` of the absolute
        difference, which should be O(step**2).
        """
        r = np.asarray(r, dtype=float)
        gaps = []
        for f, df, d2f in ((self.h, self.dh, self.d2h), (self.k, self.dk, self.d2k)):
            fp, f0, fm = f(r + step), f(r), f(r - step)
            gaps.append(np.max(np.abs((fp - fm) / (2 * step) - df(r))))
            gaps.append(np.max(np.abs((fp - 2 * f0 + fm) / step**2 - d2f(r))))
        return float(max(gaps))


def _const(value):
    return lambda r: np.full_like(np.asarray(r, dtype=float), value)


def _power_law(coef, power, lam):
    """``coef * (lam + r**2)**power`` and its first two derivatives."""

    def f(r):
        r = np.asarray(r, dtype=float)
        return coef * (lam + r * r) ** power

    def df(r):
        r = np.asarray(r, dtype=float)
        return 2 * power * coef * r * (lam + r * r) ** (power - 1)

    def d2f(r):
        r = np.asarray(r, dtype=float)
        w = lam + r * r
        return 2 * power * coef * (w ** (power - 1) + 2 * (power - 1) * r * r * w ** (power - 2))

    return f, df, d2f


class CaseKind(str, enum.Enum):
    FLAT_R7 = "flat"
    CYLINDER_CY = "cy"
    CONE_NK = "nk"
    BRYANT_SALAMON_A = "bs-a"
    BRYANT_SALAMON_B = "bs-b"


@dataclass(frozen=True)
class BackgroundCase:
    """One of the five torsion-free backgrounds.

    ``c`` is the soliton constant (flat and cone cases), ``b`` the constant
    translation speed of the Calabi-Yau cylinder and ``lam`` the
    Bryant-Salamon scale.  Only the parameters relevant to ``kind`` are used.
    """

    kind: CaseKind
    c: float = 0.0
    b: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CaseKind(self.kind))
        if self.kind in (CaseKind.BRYANT_SALAMON_A, CaseKind.BRYANT_SALAMON_B) and not self.lam > 0:
            raise ValueError("Bryant-Salamon scale must be positive")

    @classmethod
    def flat(cls, c):
        return cls(CaseKind.FLAT_R7, c=float(c))

    @classmethod
    def cylinder(cls, b):
        return cls(CaseKind.CYLINDER_CY, b=float(b))

    @classmethod
    def cone_nk(cls, c):
        return cls(CaseKind.CONE_NK, c=float(c))

    @classmethod
    def bs_a(cls, lam):
        return cls(CaseKind.BRYANT_SALAMON_A, lam=float(lam))

    @classmethod
    def bs_b(cls, lam):
        return cls(CaseKind.BRYANT_SALAMON_B, lam=float(lam))

    @property
    def is_bryant_salamon(self):
        return self.kind in (CaseKind.BRYANT_SALAMON_A, CaseKind.BRYANT_SALAMON_B)

    @property
    def is_cone(self):
        return self.kind in (CaseKind.FLAT_R7, CaseKind.CONE_NK)

    @property
    def label(self):
        if self.is_cone:
            return f"{self.kind.value}(c={self.c:g})"
        if self.kind is CaseKind.CYLINDER_CY:
            return f"cy(b={self.b:g})"
        return f"{self.kind.value}(lambda={self.lam:g})"

    def profile(self) -> WarpProfile:
        if self.kind is CaseKind.CYLINDER_CY:
            one, zero = _const(1.0), _const(0.0)
            return WarpProfile(6, 1, one, zero, zero, one, zero, zero)
        if self.is_cone:
            one, zero = _const(1.0), _const(0.0)
            return WarpProfile(6, 1, lambda r: np.asarray(r, dtype=float) * 1.0,
                               one, zero, one, zero, zero)
        if self.kind is CaseKind.BRYANT_SALAMON_A:
            h = _power_law(math.sqrt(2.0), 0.25, self.lam)
            k = _power_law(1.0, -0.25, self.lam)
            return WarpProfile(4, 3, *h, *k)
        h = _power_law(math.sqrt(3.0), 1.0 / 3.0, self.lam)
        k = _power_law(2.0, -1.0 / 6.0, self.lam)
        return WarpProfile(3, 4, *h, *k)


ALL_KINDS = tuple(CaseKind)


def parse_case(name, *, c=0.0, b=0.0, lam=1.0):
    """Build a case from its CLI name (``flat``, ``cy``, ``nk``, ``bs-a``, ``bs-b``)."""
    try:
        kind = CaseKind(name)
    except ValueError:
        raise ValueError(f"unknown case {name!r}; expected one of "
                         f"{', '.join(k.value for k in CaseKind)}") from None
    return BackgroundCase(kind, c=float(c), b=float(b), lam=float(lam))
