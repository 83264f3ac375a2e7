"""Global solutions of the soliton ODE family in log-radius coordinates.

With ``x = ln r`` and ``z = r u'`` the family becomes the autonomous-looking
system ``u_x = z``, ``z_x = Q sin u + (1 - P) z`` which has no singular
point at finite ``x``.  Integration starts from the odd series at a small
handoff radius and is carried out with scipy's Dormand-Prince 5(4) pair,
driven one step at a time so blow-up can be caught and recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate as spi

from .cases import BackgroundCase
from .errors import DomainError, StiffnessError
from .series import (DEFAULT_ORDER, OddSeries, SolitonOdeParams, case_params,
                     choose_switch_radius, eval_series, frobenius_coeffs)

DEFAULT_TOL = 1e-10
DEFAULT_RMAX = 100.0
BLOWUP_Z = 1e8
MIN_STEP = 1e-14
SERIES_SAMPLES = 12


@dataclass(frozen=True)
class LogState:
    x: float
    u: float
    z: float

    @property
    def r(self):
        return math.exp(self.x)

    @property
    def du_dr(self):
        return self.z / self.r

    @classmethod
    def from_radial(cls, r, u, du):
        if not r > 0:
            raise DomainError("log-radius state needs r > 0")
        return cls(math.log(r), float(u), float(r * du))


def _field(params: SolitonOdeParams, forcing):
    def rhs(x, y):
        r = np.exp(x)
        return np.array([y[1], params.forcing(r) * forcing(y[0]) + (1.0 - params.damping(r)) * y[1]])
    return rhs


def rhs_log(params: SolitonOdeParams, state: LogState):
    """``(du/dx, dz/dx)`` at a state."""
    r = math.exp(state.x)
    dz = float(params.forcing(r) * math.sin(state.u) + (1.0 - params.damping(r)) * state.z)
    return state.z, dz


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Trajectory:
    """Samples of ``(x, u, z)`` plus the dense interpolant of the integrated part.

    Samples with ``x < x_switch`` come from the odd series; the rest are
    integrator step points.  ``truncated`` marks a run stopped because
    ``|z|`` exceeded the blow-up cap.
    """

    x: np.ndarray
    u: np.ndarray
    z: np.ndarray
    params: SolitonOdeParams
    a1: float
    tol: float
    dense: Optional[spi.OdeSolution]
    x_switch: float
    series: Optional[OddSeries] = None
    case: Optional[BackgroundCase] = None
    truncated: bool = False
    n_steps: int = 0
    nfev: int = 0
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def r(self):
        return np.exp(self.x)

    @property
    def x_end(self):
        return float(self.x[-1])

    @property
    def r_end(self):
        return math.exp(self.x_end)

    @property
    def integrated(self):
        """Mask of the samples produced by the integrator."""
        return self.x >= self.x_switch

    def state(self, x):
        """Interpolated ``(u, z)`` at log-radius ``x`` (array or scalar)."""
        x = np.asarray(x, dtype=float)
        if np.any(x > self.x_end + 1e-12):
            raise DomainError("requested point beyond the end of the trajectory")
        u = np.empty_like(x)
        z = np.empty_like(x)
        inner = x < self.x_switch
        if np.any(inner):
            if self.series is None:
                raise DomainError("requested point before the start of the trajectory")
            r = np.exp(x[inner])
            v = eval_series(self.series, r, guard=np.inf)
            u[inner], z[inner] = v.u, r * v.du
        if np.any(~inner):
            y = self.dense(x[~inner])
            u[~inner], z[~inner] = y[0], y[1]
        return u, z

    def evaluate(self, r):
        """``(u, u', u'')`` at radius ``r`` with ``u''`` taken from the ODE."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise DomainError("r must be positive")
        x = np.log(r)
        u, z = self.state(x)
        dz = self.params.forcing(r) * np.sin(u) + (1.0 - self.params.damping(r)) * z
        return u, z / r, (dz - z) / (r * r)

    def dense_defect(self, x):
        """``z_x`` of the interpolant minus the vector field, on the integrated part.

        Zero at step points by construction; between them it measures the
        quality of the quartic interpolant.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < self.x_switch) or np.any(x > self.x_end):
            raise DomainError("defect is only defined on the integrated part")
        deriv = _dense_derivative(self.dense, x)
        u, z = self.dense(x)
        r = np.exp(x)
        rhs = self.params.forcing(r) * np.sin(u) + (1.0 - self.params.damping(r)) * z
        return deriv[1] - rhs


def _dense_derivative(sol: spi.OdeSolution, x):
    # derivative of scipy's RK dense polynomial y_old + h Q [s, s^2, ...]
    out = np.empty((2, x.size))
    idx = np.clip(np.searchsorted(sol.ts, x, side="right") - 1, 0, len(sol.interpolants) - 1)
    for j, (xi, i) in enumerate(zip(x, idx)):
        seg = sol.interpolants[i]
        s = (xi - seg.t_old) / seg.h
        powers = np.arange(1, seg.order + 2)
        dp = powers * s ** (powers - 1)
        out[:, j] = seg.Q @ dp
    return out


def integrate(params: SolitonOdeParams, initial: LogState, x_end, tol=DEFAULT_TOL, *,
              forcing: Callable = np.sin, blowup_z=BLOWUP_Z) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) integration from ``initial`` to ``x_end``.

    ``forcing`` replaces ``sin u`` (the envelope tests use constants).
    Raises :class:`StiffnessError` if the step size collapses below 1e-14.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not x_end > initial.x:
        raise ValueError("x_end must exceed the initial log-radius")
    solver = spi.RK45(_field(params, forcing), initial.x, [initial.u, initial.z], x_end,
                      rtol=tol, atol=tol, first_step=None)
    xs, ys, interps = [initial.x], [np.array([initial.u, initial.z])], []
    truncated = False
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise StiffnessError(f"integration failed at x={solver.t:.6g}: {msg}")
        if solver.t < x_end and solver.step_size < MIN_STEP:
            raise StiffnessError(f"step size {solver.step_size:.2e} underflow at x={solver.t:.6g}")
        interps.append(solver.dense_output())
        xs.append(solver.t)
        ys.append(solver.y.copy())
        if abs(solver.y[1]) > blowup_z:
            truncated = True
            break
    ys = np.array(ys)
    dense = spi.OdeSolution(np.array(xs), interps)
    return Trajectory(_frozen(xs), _frozen(ys[:, 0]), _frozen(ys[:, 1]), params, float("nan"), tol,
                      dense, float(initial.x), truncated=truncated,
                      n_steps=len(interps), nfev=solver.nfev)


def solve_soliton(case: BackgroundCase, a1, r_max=DEFAULT_RMAX, tol=DEFAULT_TOL, *,
                  order=DEFAULT_ORDER, r_switch=None, diagnostics=True) -> Trajectory:
    """Series start at ``r_switch`` followed by integration to ``r_max``."""
    params = case_params(case)
    series = frobenius_coeffs(params, float(a1), order)
    if r_switch is None:
        r_switch = choose_switch_radius(series)
    else:
        eval_series(series, r_switch)  # guard check
    if not r_max > r_switch:
        raise ValueError("r_max must exceed the handoff radius")
    v = eval_series(series, r_switch)
    start = LogState.from_radial(r_switch, v.u, v.du)
    core = integrate(params, start, math.log(r_max), tol)

    r_in = r_switch * np.geomspace(1e-3, 1.0, SERIES_SAMPLES + 1)[:-1]
    s_in = eval_series(series, r_in)
    x = np.concatenate([np.log(r_in), core.x])
    u = np.concatenate([s_in.u, core.u])
    z = np.concatenate([r_in * s_in.du, core.z])
    traj = Trajectory(_frozen(x), _frozen(u), _frozen(z), params, float(a1), tol, core.dense,
                      core.x_switch, series=series, case=case, truncated=core.truncated,
                      n_steps=core.n_steps, nfev=core.nfev)
    if diagnostics:
        from .analysis import trajectory_diagnostics
        traj.diagnostics.update(trajectory_diagnostics(traj))
    return traj


def _log_integrating_factor(params: SolitonOdeParams, x):
    """``G(x) = ∫ (1 - P(e^x)) dx`` up to a constant, in closed form."""
    b, c, d = params.b, params.c, params.d
    x = np.asarray(x, dtype=float)
    if b == 0:
        int_p = d * x - c * np.exp(2 * x) / 2
    else:
        int_p = -(c / b) * x + (d + c / b) * (x - 0.5 * np.log1p(b * np.exp(2 * x)))
    return x - int_p


def comparison_envelope(params: SolitonOdeParams, x0, z0, xs):
    """Solutions of ``z' = (1-P) z ∓ Q`` through ``(x0, z0)`` at the sample points.

    Computed by integrating factor and adaptive quadrature, independently
    of the Runge-Kutta code.  Every true ``z`` lies between the two.
    """
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < x0):
        raise ValueError("samples must not precede x0")
    order = np.argsort(xs)
    G = lambda s: _log_integrating_factor(params, s)  # noqa: E731
    lo = np.empty_like(xs)
    hi = np.empty_like(xs)
    prev, z_lo, z_hi = float(x0), float(z0), float(z0)
    for i in order:
        xi = xs[i]
        if xi > prev:
            gx = G(xi)
            push, _ = spi.quad(lambda s: np.exp(gx - G(s)) * params.forcing(np.exp(s)), prev, xi,
                               epsabs=0.0, epsrel=1e-13, limit=200)
            growth = np.exp(gx - G(prev))
            z_lo, z_hi = growth * z_lo - push, growth * z_hi + push
            prev = xi
        lo[i], hi[i] = z_lo, z_hi
    return lo, hi
