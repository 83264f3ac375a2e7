"""Torsion functionals, Lyapunov diagnostics and asymptotic classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .cases import BackgroundCase, CaseKind
from .errors import DomainError, SingularEvaluationError, UnsupportedCaseError
from .geometry import soliton_residual
from .integrator import LogState, Trajectory, _dense_derivative
from .series import SolitonOdeParams

DECAY_THRESHOLD = 1e-3
BLOWUP_THRESHOLD = 1e6
DECAY_SLOPE = -0.25
Q_MIN_DA = 1e-8


class Classification(str, enum.Enum):
    DECAY = "DecayToZero"
    BLOWUP = "Blowup"
    INCONCLUSIVE = "Inconclusive"


def torsion_norm_sq_case(case: BackgroundCase, u, du, r):
    """``|T|²`` of the soliton ansatz in the angle variable of each background."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise DomainError("r must be strictly positive")
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    if case.is_cone:
        out = du**2 + 24 * np.sin(u / 2) ** 2 / r**2
    elif case.kind is CaseKind.CYLINDER_CY:
        out = 4 * du**2
    else:
        lam, r2 = case.lam, r * r
        w = lam + r2
        if case.kind is CaseKind.BRYANT_SALAMON_A:
            out = np.sqrt(w) * (du**2 + (4 * lam**2 + 4 * lam * r2 + 3 * r2 * r2)
                                * (1 - np.cos(u)) / (r2 * w * w))
        else:
            out = np.cbrt(w) * (du**2 / 4 + (9 * lam**2 + 12 * lam * r2 + 8 * r2 * r2)
                                * (1 - np.cos(u)) / (6 * r2 * w * w))
    return float(out) if out.ndim == 0 else out


def _ab(params: SolitonOdeParams, x):
    r2 = np.exp(2 * np.asarray(x, dtype=float))
    A = 1 + params.b * r2
    B = params.d + params.e * r2 + params.f * r2 * r2
    A_x = 2 * params.b * r2
    B_x = 2 * params.e * r2 + 4 * params.f * r2 * r2
    return A, B, A_x, B_x


def lyapunov(params: SolitonOdeParams, state: LogState):
    """``L = ½ A² z² + B cos u`` with ``A = 1 + b r²``, ``B = d + e r² + f r⁴``."""
    return lyapunov_arrays(params, state.x, state.u, state.z)


def lyapunov_arrays(params: SolitonOdeParams, x, u, z):
    A, B, _, _ = _ab(params, x)
    out = 0.5 * A * A * np.asarray(z) ** 2 + B * np.cos(u)
    return float(out) if np.ndim(out) == 0 else out


def bracket_coefficient(params: SolitonOdeParams, x):
    """Coefficient of ``A² z²`` in ``dL/dx``; tends to ``1 + c/b`` when ``b > 0``."""
    A, B, A_x, B_x = _ab(params, x)
    return A_x / A + 1 - params.damping(np.exp(x)) - B_x / (2 * B)


def lyapunov_derivative(params: SolitonOdeParams, state: LogState):
    """Analytic ``dL/dx`` at a state."""
    return lyapunov_derivative_arrays(params, state.x, state.u, state.z)


def lyapunov_derivative_arrays(params: SolitonOdeParams, x, u, z):
    A, B, _, B_x = _ab(params, x)
    L = 0.5 * A * A * np.asarray(z) ** 2 + B * np.cos(u)
    out = A * A * np.asarray(z) ** 2 * bracket_coefficient(params, x) + B_x / B * L
    return float(out) if np.ndim(out) == 0 else out


# -- asymptotics ---------------------------------------------------------------

def torsion_along(traj: Trajectory, case: BackgroundCase | None = None):
    case = case or traj.case
    r = traj.r
    return torsion_norm_sq_case(case, traj.u, traj.z / r, r)


def _tail_torsion(traj: Trajectory, case, decades=1.0, n=64):
    r = np.geomspace(traj.r_end * 10.0 ** (-decades), traj.r_end, n)
    u, z = traj.state(np.log(r))
    return r, torsion_norm_sq_case(case, u, z / r, r)


def classify_asymptotics(traj: Trajectory, case: BackgroundCase | None = None, *,
                         decay_threshold=DECAY_THRESHOLD, blowup_threshold=BLOWUP_THRESHOLD,
                         decay_slope=DECAY_SLOPE):
    """Label a trajectory DecayToZero, Blowup or Inconclusive.

    Blowup: the run was truncated by the integrator's cap, or ``r³|u'|``
    passes ``blowup_threshold`` while still growing.  DecayToZero: ``|T|²``
    (sampled from the dense output) decreases monotonically over the last
    decade of radius and either ends below ``decay_threshold`` or falls
    like ``r^p`` with ``p <= decay_slope`` over the final half decade.
    The slope clause covers tails that decay to zero too slowly to cross
    the threshold by the end of the run.
    """
    case = case or traj.case
    r3du = traj.r * traj.r * np.abs(traj.z)  # r³|u'| = r²|z|
    if traj.truncated:
        return Classification.BLOWUP
    over = np.nonzero(r3du > blowup_threshold)[0]
    if over.size and r3du[-1] >= r3du[over[0]]:
        return Classification.BLOWUP
    if traj.r_end < 50:
        return Classification.INCONCLUSIVE
    r, t = _tail_torsion(traj, case)
    if np.all(t == 0):
        return Classification.DECAY  # trivial soliton
    if not np.all(np.diff(t) < 0):
        return Classification.INCONCLUSIVE
    if t[-1] < decay_threshold:
        return Classification.DECAY
    if decay_slope_estimate(traj, case) <= decay_slope:
        return Classification.DECAY
    return Classification.INCONCLUSIVE


def decay_slope_estimate(traj: Trajectory, case: BackgroundCase | None = None, decades=0.5):
    """Least-squares log-log slope of ``|T|²`` over the final ``decades`` of radius."""
    case = case or traj.case
    r, t = _tail_torsion(traj, case, decades)
    if np.any(t <= 0):
        return float("nan")
    return float(np.polyfit(np.log(r), np.log(t), 1)[0])


# -- the first integral Q --------------------------------------------------------

def q_invariant(case: BackgroundCase, a, da, d2a, f, r):
    """``Q = a''/(r a') + a a'/(f² r) + 6/r² - 6 f² a/(r³ a')``; equals ``c`` on solitons."""
    if not case.is_cone:
        raise UnsupportedCaseError("Q is defined for the flat and cone backgrounds only")
    r = float(r)
    if not r > 0:
        raise DomainError("r must be strictly positive")
    if da == 0:
        raise SingularEvaluationError("a' vanishes; Q is undefined here")
    return a * da / (f * f * r) + d2a / (r * da) + 6 / r**2 - 6 * f * f * a / (r**3 * da)


def q_from_angle(u, du, d2u, r):
    """``Q`` in the angle variable: ``(r² u'' + 6 r u' - 6 sin u)/(r³ u')``."""
    return (r * r * d2u + 6 * r * du - 6 * np.sin(u)) / (r**3 * du)


def angle_to_field(u, du, d2u):
    """``(a, a', a'', f)`` for ``a = sin(u/2)``, ``f = cos(u/2)``."""
    s, c = np.sin(u / 2), np.cos(u / 2)
    return s, c * du / 2, -s * du * du / 4 + c * d2u / 2, c


def dense_angle_derivatives(traj: Trajectory, r):
    """``(u, u', u'')`` from the interpolant, with ``u''`` from its own derivative."""
    r = np.asarray(r, dtype=float)
    x = np.log(r)
    if np.any(x < traj.x_switch - 1e-12) or np.any(x > traj.x_end + 1e-12):
        raise DomainError("interpolant derivatives exist only on the integrated range")
    u, z = traj.dense(x)
    z_x = _dense_derivative(traj.dense, np.atleast_1d(x))[1].reshape(x.shape)
    return u, z / r, (z_x - z) / (r * r)


def q_profile(traj: Trajectory, r, *, min_da=Q_MIN_DA):
    """``Q`` along a trajectory; NaN where ``|a'| <= min_da`` (reported as gaps)."""
    case = traj.case
    u, du, d2u = dense_angle_derivatives(traj, r)
    a, da, d2a, f = angle_to_field(u, du, d2u)
    out = np.full(np.shape(r), np.nan)
    ok = np.abs(da) > min_da
    for i in np.nonzero(ok)[0]:
        out[i] = q_invariant(case, a[i], da[i], d2a[i], f[i], r[i])
    return out


# -- Bryant-Salamon Lyapunov lemmas --------------------------------------------

@dataclass(frozen=True)
class LyapunovBounds:
    eps: float
    delta: float
    m: float
    M: float
    stated_coeff: float
    proof_coeff: float


def _last_failure(mask, xs):
    bad = np.nonzero(~mask)[0]
    if bad.size == 0:
        return xs[0]
    if bad[-1] == xs.size - 1:
        raise ValueError("bounds still fail at the end of the search window")
    return xs[bad[-1] + 1]


def lemma_bounds(params: SolitonOdeParams, eps=0.5, delta=0.5, *, x_lo=-5.0, x_hi=40.0, n=200001):
    """``m``, ``M`` and the two decrease coefficients for ``b, f > 0``.

    ``M`` is the first grid point after which the three tail bounds on
    ``B_x/B``, the bracket coefficient and ``B/A²`` all hold.  The stated
    coefficient is ``(1+ε)[4 + 2(1-δ)(1+c/b)]``; ``proof_coeff`` is what
    the chain of inequalities delivers, ``2(1-δ)(1-ε)(1+c/b) + 4(1+ε)``.
    """
    b, c, f = params.b, params.c, params.f
    if not (b > 0 and f > 0):
        raise UnsupportedCaseError("needs b > 0 and f > 0")
    xs = np.linspace(x_lo, x_hi, n)
    A, B, _, B_x = _ab(params, xs)
    k = 1 + c / b
    ratio = B_x / B
    br = bracket_coefficient(params, xs)
    lo, hi = sorted((k * (1 + eps), k * (1 - eps)))
    ok = ((4 * (1 - eps) <= ratio) & (ratio <= 4 * (1 + eps))
          & (lo <= br) & (br <= hi)
          & (B / A**2 <= (1 + eps) * f / b**2))
    M = float(_last_failure(ok, xs))
    m = 2 * (1 - delta) / delta * (1 + eps) * f / b**2
    stated = (1 + eps) * (4 + 2 * (1 - delta) * k)
    proof = 2 * (1 - delta) * (1 - eps) * k + 4 * (1 + eps)
    return LyapunovBounds(eps, delta, m, M, stated, proof)


def lemma_decrease_violations(params: SolitonOdeParams, bounds: LyapunovBounds, x, u, z, *, use="stated"):
    """Points with ``x >= M`` and ``z² >= m`` where ``dL/dx > coeff · L``.

    Returns ``(n_tested, indices_of_violations)``.
    """
    x, u, z = (np.asarray(v, dtype=float) for v in (x, u, z))
    coeff = bounds.stated_coeff if use == "stated" else bounds.proof_coeff
    sel = (x >= bounds.M) & (z * z >= bounds.m)
    L = lyapunov_arrays(params, x, u, z)
    dL = lyapunov_derivative_arrays(params, x, u, z)
    slack = 1e-12 * np.maximum(1.0, np.abs(L))
    bad = sel & (dL > coeff * L + slack)
    return int(sel.sum()), np.nonzero(bad)[0]


def lemma_z_bound(params: SolitonOdeParams, bounds: LyapunovBounds, z_at_start, M_prime=None):
    """``m' = (c₂ m₀ + 2 c₄)/c₁`` for ``x >= M'`` (default ``M' = M``).

    On ``x >= M'``, ``½A²e^{-4x}`` and ``B e^{-4x}`` decrease to ``b²/2``
    and ``f``, so ``c₁ = b²/2``, ``c₂`` and ``c₄`` are their values at ``M'``.
    ``m₀`` is ``max(m, z(M')²)``.
    """
    Mp = bounds.M if M_prime is None else max(float(M_prime), bounds.M)
    A, B, _, _ = _ab(params, Mp)
    c1 = 0.5 * params.b**2
    c2 = float(0.5 * A * A * math.exp(-4 * Mp))
    c4 = float(B * math.exp(-4 * Mp))
    m0 = max(bounds.m, float(z_at_start) ** 2)
    return Mp, (c2 * m0 + 2 * c4) / c1, (c1, c2, params.f, c4)


# -- per-trajectory summary ----------------------------------------------------

def residual_monitor(traj: Trajectory):
    """Case residual at step midpoints with ``u''`` from the interpolant derivative."""
    xi = traj.x[traj.integrated]
    if xi.size < 2:
        return np.zeros(0)
    r = np.exp(0.5 * (xi[1:] + xi[:-1]))
    u, du, d2u = dense_angle_derivatives(traj, r)
    return np.asarray(soliton_residual(traj.case, u, du, d2u, r))


def trajectory_diagnostics(traj: Trajectory):
    """Arrays and scalars attached to solved trajectories."""
    case = traj.case
    params = traj.params
    r = traj.r
    torsion = torsion_along(traj, case)
    L = lyapunov_arrays(params, traj.x, traj.u, traj.z)
    dL = lyapunov_derivative_arrays(params, traj.x, traj.u, traj.z)
    q = np.full(r.shape, np.nan)
    if case.is_cone:
        mask = traj.integrated
        q[mask] = q_profile(traj, r[mask])
    res = residual_monitor(traj)
    return {
        "torsion_norm_sq": torsion,
        "lyapunov": L,
        "lyapunov_derivative": dL,
        "q": q,
        "residual_max": float(np.max(np.abs(res))) if res.size else 0.0,
        "classification": classify_asymptotics(traj, case),
    }
