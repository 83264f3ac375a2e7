"""Closed-form Riemannian quantities for warped bundle metrics.

All functions take a :class:`~isosolitons.cases.WarpProfile` and radial
evaluators (callables of ``r``) and accept scalar or array ``r``.  The
point ``r = 0`` is a regular singular point of every formula here and is
excluded; behaviour near the origin is handled by :mod:`isosolitons.series`.
"""

from __future__ import annotations

import numpy as np

from .cases import BackgroundCase, CaseKind, WarpProfile
from .errors import ConstraintError, DomainError

CONSTRAINT_TOL = 1e-10


def _radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("r must be strictly positive; use the series expansion near r = 0")
    return r


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def laplacian_scalar(profile: WarpProfile, s, ds, d2s, r):
    """Laplacian of a radial function ``s(r)``.

    ``s`` itself is accepted for signature symmetry but only its
    derivatives enter.
    """
    r = _radius(r)
    h, dh, _, k, dk, _ = profile.values(r)
    n, m = profile.n, profile.m
    k2 = k * k
    first = (m - 1) / (k2 * r) + n * dh / (h * k2) + (m - 2) * dk / (k2 * k)
    return _out(d2s(r) / k2 + first * ds(r))


def laplacian_radial_field_coeffs(profile: WarpProfile, r):
    """Coefficients ``(c2, c1, c0)`` with ``ΔX = (c2 s'' + c1 s' + c0 s) ∂r``.

    Valid for ``X = s(r) ∂r`` on a Ricci-flat bundle metric.
    """
    r = _radius(r)
    h, dh, d2h, k, dk, d2k = profile.values(r)
    n, m = profile.n, profile.m
    k2 = k * k
    c2 = 1.0 / k2
    c1 = (m - 1) / (k2 * r) + n * dh / (h * k2) + m * dk / (k2 * k)
    c0 = (-(m - 1) / (k2 * r * r) + n * d2h / (h * k2) - n * dh * dh / (h * h * k2)
          + m * d2k / (k2 * k) - m * dk * dk / (k2 * k2))
    return _out(c2), _out(c1), _out(c0)


def grad_norm_sq_radial_field(profile: WarpProfile, s, ds, r):
    """``|∇X|²`` for ``X = s(r) ∂r`` (Ricci-flat background)."""
    r = _radius(r)
    h, dh, d2h, k, dk, d2k = profile.values(r)
    n, m = profile.n, profile.m
    sv, dsv = s(r), ds(r)
    s2 = sv * sv
    total = (-(m - 1) * s2 * d2k / k
             + dsv * dsv
             + 2 * sv * dsv * dk / k
             + (2 * m - 1) * s2 * dk * dk / (k * k)
             + (m - 1) * s2 * dk / (k * r)
             + n * s2 * dh * dk / (h * k)
             + (m - 1) * s2 / (r * r)
             - n * s2 * d2h / h
             + n * s2 * dh * dh / (h * h))
    return _out(total)


def christoffel_traces(profile: WarpProfile, r):
    """Trace coefficients of the vertical Christoffel symbols.

    Returns ``(horizontal, vertical, vvv)`` where
    ``g^{ij} Γ^γ_ij = horizontal * x_γ``, ``g^{αβ} Γ^γ_αβ = vertical * x_γ``
    and ``Γ^γ_αβ = vvv * (x_α δ_βγ + x_β δ_αγ - x_γ δ_αβ)``.
    """
    r = _radius(r)
    h, dh, _, k, dk, _ = profile.values(r)
    n, m = profile.n, profile.m
    horizontal = -n * dh / (h * k * k * r)
    vertical = (2 - m) * dk / (k ** 3 * r)
    vvv = dk / (k * r)
    return _out(horizontal), _out(vertical), _out(vvv)


def lie_constraint_residual(profile: WarpProfile, b_fn, db_fn, c, r):
    """Residuals of ``L_Y g = 2 c g`` for ``Y = b(r) ∂r``.

    ``res1 = c h - b h'`` and ``res2 = c k - b k' - k b'``.  For fibre rank
    above one the caller must also have ``b = μ r``.
    """
    r = _radius(r)
    h, dh, _, k, dk, _ = profile.values(r)
    b, db = b_fn(r), db_fn(r)
    return _out(c * h - b * dh), _out(c * k - b * dk - k * db)


def torsion_norm_sq(profile: WarpProfile, f, df, a, da, r, *, tol=CONSTRAINT_TOL):
    """``|T|² = 4(|∇X|² + |∇f|²)`` for the structure given by ``(f, a ∂r)``.

    Raises :class:`ConstraintError` unless ``f² + k² a² = 1`` to ``tol``.
    """
    r = _radius(r)
    k = profile.k(r)
    fv = f(r)
    gap = np.max(np.abs(fv * fv + k * k * a(r) ** 2 - 1.0))
    if gap > tol:
        raise ConstraintError(f"f^2 + |X|^2 deviates from 1 by {gap:.3e}")
    grad_f_sq = df(r) ** 2 / (k * k)
    return _out(4.0 * (grad_norm_sq_radial_field(profile, a, da, r) + grad_f_sq))


def soliton_residual(case: BackgroundCase, u, du, d2u, r):
    """Left-hand side of the case's soliton ODE in the angle variable ``u``.

    Flat and cone: ``r²u'' + (6 - c r²) r u' - 6 sin u``.
    Calabi-Yau cylinder: ``u'' - b u'``.
    Bryant-Salamon: the two displayed ODEs with scale ``lam``.
    """
    r = _radius(r)
    u, du, d2u = (np.asarray(v, dtype=float) for v in (u, du, d2u))
    if case.is_cone:
        res = r * r * d2u + (6.0 - case.c * r * r) * r * du - 6.0 * np.sin(u)
    elif case.kind is CaseKind.CYLINDER_CY:
        res = d2u - case.b * du
    elif case.kind is CaseKind.BRYANT_SALAMON_A:
        lam, r2 = case.lam, r * r
        w = lam + r2
        res = (r2 * d2u + (4 * lam + 7 * r2) / (2 * w) * r * du
               - (4 * lam**2 + 4 * lam * r2 + 3 * r2 * r2) / (2 * w * w) * np.sin(u))
    else:
        lam, r2 = case.lam, r * r
        w = lam + r2
        res = (r2 * d2u + (9 * lam + 13 * r2) / (3 * w) * r * du
               - (9 * lam**2 + 12 * lam * r2 + 8 * r2 * r2) / (3 * w * w) * np.sin(u))
    return _out(res)
