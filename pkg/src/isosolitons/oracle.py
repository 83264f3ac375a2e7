"""Independent brute-force checks for the closed forms in :mod:`geometry`.

The flat oracles work in Cartesian coordinates on R^7 and know nothing
about warped products.  Double precision limits useful second-difference
steps to roughly 1e-4 and above.
"""

from __future__ import annotations

import numpy as np

from .cases import WarpProfile
from .geometry import christoffel_traces, laplacian_radial_field_coeffs, laplacian_scalar

DEFAULT_STEP = 1e-3


def _check_point(point, step):
    point = np.asarray(point, dtype=float)
    if point.shape != (7,):
        raise ValueError("point must be a 7-vector")
    if np.linalg.norm(point) <= 10 * step:
        raise ValueError("point too close to the origin for this step")
    return point


def fd_laplacian_flat7(s, point, step=DEFAULT_STEP):
    """Seven-direction central-difference Laplacian of ``s(|x|)`` at ``point``."""
    point = _check_point(point, step)
    f0 = s(np.linalg.norm(point))
    total = 0.0
    for i in range(7):
        e = np.zeros(7)
        e[i] = step
        total += s(np.linalg.norm(point + e)) - 2.0 * f0 + s(np.linalg.norm(point - e))
    return float(total / step**2)


def fd_vector_laplacian_flat7(a, point, step=DEFAULT_STEP):
    """Componentwise FD Laplacian of ``X_i = a(|x|) x_i / |x|``."""
    point = _check_point(point, step)

    def field(x):
        r = np.linalg.norm(x)
        return a(r) * x / r

    x0 = field(point)
    total = np.zeros(7)
    for i in range(7):
        e = np.zeros(7)
        e[i] = step
        total += field(point + e) - 2.0 * x0 + field(point - e)
    return total / step**2


def fd_path_derivative(values, params):
    """Derivative of sampled values along a monotone parameter.

    Second-order centred differences inside, second-order one-sided at the
    ends (exact for quadratics on any grid).
    """
    values = np.asarray(values, dtype=float)
    params = np.asarray(params, dtype=float)
    if values.shape != params.shape or values.size < 3:
        raise ValueError("need at least three matching samples")
    steps = np.diff(params)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("parameter samples must be strictly monotone")
    return np.gradient(values, params, edge_order=2)


# 7-point central first-derivative weights, error O(step**6)
_D1_WEIGHTS = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0


def _d1_7pt(fn, r, step):
    offsets = np.arange(-3, 4) * step
    return sum(w * fn(r + o) for w, o in zip(_D1_WEIGHTS, offsets) if w) / step


def fd_radial_laplacian(profile: WarpProfile, s, r, step=1e-3):
    """Divergence-form Laplacian of ``s(r)`` by nested 7-point differences.

    Uses ``Δs = V⁻¹ d/dr (V k⁻² s')`` with volume density
    ``V = h^n k^m r^(m-1)``; nothing is shared with the closed form.
    """
    n, m = profile.n, profile.m

    def volume(x):
        return profile.h(x) ** n * profile.k(x) ** m * x ** (m - 1)

    def flux(x):
        return volume(x) * _d1_7pt(s, x, step) / profile.k(x) ** 2

    r = float(r)
    if r <= 3 * step:
        raise ValueError("r too close to the origin for this step")
    return float(_d1_7pt(flux, r, 3 * step) / volume(r))


def laplacian_from_christoffel(profile: WarpProfile, ds, d2s, r):
    """Assemble ``Δs`` from the vertical Christoffel traces.

    ``Δs = k⁻²(s'' + (m-1) s'/r) - (H + V) r s'`` where ``H``, ``V`` are the
    horizontal and vertical trace coefficients.
    """
    horizontal, vertical, _ = christoffel_traces(profile, r)
    k = profile.k(r)
    return (d2s(r) + (profile.m - 1) * ds(r) / r) / k**2 - (horizontal + vertical) * r * ds(r)


def grad_norm_sq_identity(profile: WarpProfile, s, ds, d2s, r):
    """``|∇X|²`` via ``½Δ|X|² - <X, ΔX>`` using the scalar and vector Laplacians."""
    k, dk, d2k = profile.k(r), profile.dk(r), profile.d2k(r)
    sv, dsv, d2sv = s(r), ds(r), d2s(r)
    sq = lambda x: s(x) ** 2 * profile.k(x) ** 2  # noqa: E731
    dsq = 2 * sv * dsv * k * k + 2 * sv * sv * k * dk
    d2sq = (2 * dsv**2 * k * k + 2 * sv * d2sv * k * k + 8 * sv * dsv * k * dk
            + 2 * sv * sv * dk**2 + 2 * sv * sv * k * d2k)
    lap_sq = laplacian_scalar(profile, sq, lambda _: dsq, lambda _: d2sq, r)
    c2, c1, c0 = laplacian_radial_field_coeffs(profile, r)
    x_dot_lap_x = sv * k * k * (c2 * d2sv + c1 * dsv + c0 * sv)
    return 0.5 * lap_sq - x_dot_lap_x
