"""Oracle and invariant suites behind the ``verify`` subcommand.

Each suite returns a list of :class:`Check` rows; a suite passes when
every row does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis, geometry, oracle
from .cases import ALL_KINDS, BackgroundCase, CaseKind
from .integrator import comparison_envelope, solve_soliton
from .series import SolitonOdeParams, case_params, frobenius_coeffs, residual_polynomial

SAMPLE_RADII = (0.25, 0.5, 1.0, 2.0, 5.0, 10.0)
ORACLE_STEPS = (0.02, 0.01, 0.005)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""


def _le(name, value, limit, detail=""):
    return Check(name, bool(value <= limit), float(value), float(limit), detail)


def _ge(name, value, limit, detail=""):
    return Check(name, bool(value >= limit), float(value), float(limit), detail)


def default_case(kind):
    if kind in (CaseKind.BRYANT_SALAMON_A, CaseKind.BRYANT_SALAMON_B):
        return BackgroundCase(kind, lam=1.0)
    if kind is CaseKind.CYLINDER_CY:
        return BackgroundCase.cylinder(1.0)
    return BackgroundCase(kind, c=-1.0)


TEST_FUNCTIONS = {
    "r^2": (lambda r: r * r, lambda r: 2 * r, lambda r: 2 + 0 * r),
    "sin r": (np.sin, np.cos, lambda r: -np.sin(r)),
    "r^3 e^-r": (lambda r: r**3 * np.exp(-r),
                 lambda r: (3 * r**2 - r**3) * np.exp(-r),
                 lambda r: (6 * r - 6 * r**2 + r**3) * np.exp(-r)),
}


def identity_errors():
    """Relative gaps between the closed-form ``|∇X|²`` and the Laplacian identity route."""
    out = []
    for kind in ALL_KINDS:
        prof = default_case(kind).profile()
        for fname, (s, ds, d2s) in TEST_FUNCTIONS.items():
            for r in SAMPLE_RADII:
                closed = geometry.grad_norm_sq_radial_field(prof, s, ds, r)
                ident = oracle.grad_norm_sq_identity(prof, s, ds, d2s, r)
                out.append((kind.value, fname, r, abs(closed - ident) / max(abs(closed), 1e-300)))
    return out


def suite_geometry():
    checks = []
    errs = identity_errors()
    checks.append(_le(f"|grad X|^2 identity route ({len(errs)} points)", max(e[-1] for e in errs), 1e-8))
    worst = 0.0
    for kind in ALL_KINDS:
        prof = default_case(kind).profile()
        for s, ds, d2s in TEST_FUNCTIONS.values():
            for r in SAMPLE_RADII:
                a = geometry.laplacian_scalar(prof, s, ds, d2s, r)
                b = oracle.laplacian_from_christoffel(prof, ds, d2s, r)
                worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    checks.append(_le("Laplacian from Christoffel traces", worst, 1e-12))
    prof = BackgroundCase.bs_a(1.0).profile()
    worst = 0.0
    for r in (0.5, 1.0, 2.0):
        a = geometry.laplacian_scalar(prof, lambda x: x * x, lambda x: 2 * x, lambda x: 2.0, r)
        b = oracle.fd_radial_laplacian(prof, lambda x: x * x, r)
        worst = max(worst, abs(a - b) / abs(a))
    checks.append(_le("BS-A Laplacian vs divergence-form differences", worst, 1e-6))
    worst = 0.0
    for case in (BackgroundCase.bs_a(1.0), BackgroundCase.bs_b(1.0)):
        prof = case.profile()
        u, du = (lambda r: 0.7 * np.tanh(r)), (lambda r: 0.7 / np.cosh(r) ** 2)
        for r in SAMPLE_RADII:
            a_fn = lambda x: np.sin(u(x) / 2) / prof.k(x)  # noqa: E731
            da_fn = lambda x: (np.cos(u(x) / 2) * du(x) / 2 * prof.k(x) - np.sin(u(x) / 2) * prof.dk(x)) / prof.k(x) ** 2  # noqa: E731
            geo = geometry.torsion_norm_sq(prof, lambda x: np.cos(u(x) / 2),
                                           lambda x: -np.sin(u(x) / 2) * du(x) / 2, a_fn, da_fn, r)
            disp = analysis.torsion_norm_sq_case(case, u(r), du(r), r)
            worst = max(worst, abs(geo - disp) / abs(disp))
    checks.append(_le("BS torsion: displayed form vs general formula", worst, 1e-9))
    return checks


def _order(errors):
    return min(math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1))


def suite_flat_oracle():
    prof = BackgroundCase.flat(0.0).profile()
    checks = []
    rng = np.random.default_rng(7)
    direction = rng.normal(size=7)
    direction /= np.linalg.norm(direction)
    for r in (1.0, 2.0, 5.0):
        pt = r * direction
        exact = geometry.laplacian_scalar(prof, np.sin, np.cos, lambda x: -np.sin(x), r)
        errs = [abs(oracle.fd_laplacian_flat7(np.sin, pt, h) - exact) for h in ORACLE_STEPS]
        checks.append(_ge(f"scalar Laplacian order at r={r:g}", _order(errs), 1.9))
        c2, c1, c0 = geometry.laplacian_radial_field_coeffs(prof, r)
        vex = -c2 * np.sin(r) + c1 * np.cos(r) + c0 * np.sin(r)
        errs = [np.linalg.norm(oracle.fd_vector_laplacian_flat7(np.sin, pt, h) - vex * direction)
                for h in ORACLE_STEPS]
        checks.append(_ge(f"vector Laplacian order at r={r:g}", _order(errs), 1.9))
    return checks


def suite_series():
    checks = []
    worst_res, worst_a3, odd = 0.0, 0.0, True
    cases = [BackgroundCase.flat(c) for c in (-1.0, 0.0, 1.0)] + [BackgroundCase.bs_a(1.0), BackgroundCase.bs_b(1.0)]
    for case in cases:
        p = case_params(case)
        for a1 in (0.1, 1.0):
            s = frobenius_coeffs(p, a1, 21)
            odd &= bool(np.all(s.coefficients[0::2] == 0.0))
            worst_res = max(worst_res, float(np.max(np.abs(residual_polynomial(s)))))
            if case.is_cone:
                worst_a3 = max(worst_a3, abs(s.odd_coeffs[0] - (p.c * a1 - a1**3) / 18))
    checks.append(Check("even coefficients identically zero", odd, 0.0, 0.0))
    checks.append(_le("residual polynomial through degree 21", worst_res, 1e-12))
    checks.append(_le("flat a3 = (c a1 - a1^3)/18", worst_a3, 1e-14))
    return checks


def random_family_params(rng):
    """A random member of the family (b, e, f >= 0, d > 0, moderate c)."""
    return SolitonOdeParams(b=float(rng.uniform(0, 1.5)), c=float(rng.uniform(-3, 0.5)),
                            d=float(rng.uniform(1, 7)), e=float(rng.uniform(0, 3)),
                            f=float(rng.uniform(0, 3)))


def envelope_gap(params, a1, tol=1e-10, r_max=10.0, n=50):
    """Worst excursion of ``z`` outside its comparison envelope (<= 0 means inside)."""
    from .integrator import LogState, integrate
    from .series import choose_switch_radius, eval_series
    s = frobenius_coeffs(params, a1)
    rs = choose_switch_radius(s)
    v = eval_series(s, rs)
    start = LogState.from_radial(rs, v.u, v.du)
    traj = integrate(params, start, math.log(r_max), tol)
    xs = np.linspace(start.x, traj.x_end, n + 1)[1:]
    lo, hi = comparison_envelope(params, start.x, start.z, xs)
    _, z = traj.state(xs)
    return float(max(np.max(lo - z), np.max(z - hi)))


def suite_envelope(n=6, seed=11, tol=1e-10):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(n):
        worst = max(worst, envelope_gap(random_family_params(rng), float(rng.uniform(-2, 2)), tol))
    return [_le(f"trajectory inside comparison envelope ({n} random)", worst, 10 * tol)]


def q_deviation(c, a1=1.0, tol=1e-12, n=400):
    """Max ``|Q - c|`` on ``[0.5, 20]``, cut at the end of a blow-up-truncated run."""
    traj = solve_soliton(BackgroundCase.flat(c), a1, r_max=20.5, tol=tol)
    r = np.linspace(0.5, min(20.0, traj.r_end), n)
    q = analysis.q_profile(traj, r)
    return float(np.nanmax(np.abs(q - c)))


def suite_q():
    return [_le(f"Q = c along flat soliton, c={c:g}", q_deviation(c), 1e-6) for c in (-1.0, 0.0, 1.0)]


def lyapunov_fd_errors(case, a1, steps=(0.01, 0.005)):
    traj = solve_soliton(case, a1, r_max=20.0, diagnostics=False)
    errs = []
    for h in steps:
        x = np.arange(math.log(0.5), math.log(19.0), h)
        u, z = traj.state(x)
        fd = oracle.fd_path_derivative(analysis.lyapunov_arrays(traj.params, x, u, z), x)
        an = analysis.lyapunov_derivative_arrays(traj.params, x, u, z)
        errs.append(float(np.max(np.abs(fd - an)[1:-1])))
    return errs


def suite_lyapunov(tol=1e-10):
    checks = []
    errs = lyapunov_fd_errors(BackgroundCase.bs_a(1.0), 0.5)
    checks.append(_ge("BS-A dL/dx: centred differences converge at order 2", math.log2(errs[0] / errs[1]), 1.8))
    worst = -math.inf
    for c in (-1.0, 0.0):
        traj = solve_soliton(BackgroundCase.flat(c), 1.0)
        worst = max(worst, float(np.max(np.diff(traj.diagnostics["lyapunov"]))))
    checks.append(_le("flat c<=0: L non-increasing", worst, 10 * tol))
    return checks


SUITES = {
    "geometry": suite_geometry,
    "flat-oracle": suite_flat_oracle,
    "series": suite_series,
    "envelope": suite_envelope,
    "q": suite_q,
    "lyapunov": suite_lyapunov,
}


def run_suite(name):
    if name == "all":
        return {k: fn() for k, fn in SUITES.items()}
    if name not in SUITES:
        raise KeyError(name)
    return {name: SUITES[name]()}
