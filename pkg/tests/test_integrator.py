import math

import numpy as np
import pytest

from isosolitons import integrator
from isosolitons.cases import BackgroundCase
from isosolitons.errors import DomainError, StiffnessError, UnsupportedCaseError
from isosolitons.geometry import soliton_residual
from isosolitons.integrator import LogState, comparison_envelope, integrate, rhs_log, solve_soliton
from isosolitons.series import SWITCH_CANDIDATES, SolitonOdeParams, case_params
from isosolitons.verification import envelope_gap, random_family_params

FLAT = case_params(BackgroundCase.flat(0.0))
LINEAR = SolitonOdeParams(0.5, -1.0, 3.0, 1.0, 0.5)


def ones(u):
    return np.ones_like(u)


def test_rhs_fixed_points_and_flat_form():
    assert rhs_log(FLAT, LogState(0.3, 0.0, 0.0)) == (0.0, 0.0)
    du, dz = rhs_log(FLAT, LogState(0.3, math.pi, 0.0))
    assert du == 0.0 and abs(dz) < 1e-14
    c = -1.3
    p = case_params(BackgroundCase.flat(c))
    x, u, z = 0.7, 0.4, -0.2
    assert rhs_log(p, LogState(x, u, z))[1] == pytest.approx((c * math.exp(2 * x) - 5) * z + 6 * math.sin(u), rel=1e-14)


def test_logstate_conversions():
    s = LogState.from_radial(2.0, 0.1, 0.3)
    assert s.r == pytest.approx(2.0) and s.z == pytest.approx(0.6) and s.du_dr == pytest.approx(0.3)
    with pytest.raises(DomainError):
        LogState.from_radial(0.0, 0.0, 1.0)


def test_fixed_point_trajectory_is_constant():
    t = integrate(FLAT, LogState(-1.0, 0.0, 0.0), 3.0)
    assert np.all(t.u == 0) and np.all(t.z == 0) and not t.truncated


@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_linear_problem_matches_quadrature(sign):
    x0, z0, xe = math.log(0.2), 0.3, math.log(20.0)
    xs = np.linspace(x0, xe, 21)[1:]
    lo, hi = comparison_envelope(LINEAR, x0, z0, xs)
    t = integrate(LINEAR, LogState(x0, 0.0, z0), xe, 1e-12, forcing=lambda u: sign * ones(u))
    _, z = t.state(xs)
    ref = hi if sign > 0 else lo
    assert np.max(np.abs(z - ref) / np.maximum(1.0, np.abs(ref))) <= 1e-9


def test_global_order_on_linear_problem():
    x0, z0, xe = math.log(0.2), 0.3, math.log(20.0)
    _, hi = comparison_envelope(LINEAR, x0, z0, [xe])
    steps, errs = [], []
    for tol in (1e-7, 1e-8, 1e-9, 1e-10, 1e-11):
        t = integrate(LINEAR, LogState(x0, 0.0, z0), xe, tol, forcing=ones)
        steps.append(t.n_steps)
        errs.append(abs(t.z[-1] - hi[0]))
    slope = -np.polyfit(np.log(steps), np.log(errs), 1)[0]
    assert slope >= 4.0


def test_trivial_soliton():
    t = solve_soliton(BackgroundCase.bs_a(1.0), 0.0, r_max=60.0)
    assert np.all(t.u == 0) and np.all(t.z == 0)
    assert t.diagnostics["residual_max"] == 0.0


def test_residual_monitor_flat_steady():
    tol = 1e-10
    t = solve_soliton(BackgroundCase.flat(0.0), 0.5, tol=tol)
    assert t.diagnostics["residual_max"] <= 100 * tol
    assert t.r_end == pytest.approx(100.0)


def test_handoff_independence():
    tol = 1e-10
    ends = [solve_soliton(BackgroundCase.flat(0.0), 0.5, tol=tol, r_switch=rs, diagnostics=False).u[-1]
            for rs in SWITCH_CANDIDATES]
    assert max(ends) - min(ends) <= 100 * tol


@pytest.mark.parametrize("case", [BackgroundCase.flat(-1.0), BackgroundCase.bs_b(1.0)], ids=lambda c: c.label)
def test_sign_symmetry(case):
    tp = solve_soliton(case, 0.8, r_max=50.0, diagnostics=False)
    tm = solve_soliton(case, -0.8, r_max=50.0, diagnostics=False)
    x = np.linspace(tp.x[0], tp.x_end, 200)
    up, _ = tp.state(x)
    um, _ = tm.state(x)
    assert np.max(np.abs(up + um)) <= 100 * tp.tol


def test_chain_rule_on_dense_output():
    t = solve_soliton(BackgroundCase.bs_a(1.0), 0.5, r_max=30.0, diagnostics=False)
    x = np.linspace(t.x_switch, t.x_end, 300)
    du_dx = integrator._dense_derivative(t.dense, x)[0]
    _, z = t.state(x)
    assert np.max(np.abs(du_dx - z)) <= 1e-8


def test_interpolant_midpoints_against_tight_reference():
    case = BackgroundCase.flat(-1.0)
    tol = 1e-8
    t = solve_soliton(case, 1.0, r_max=50.0, tol=tol, diagnostics=False)
    ref = solve_soliton(case, 1.0, r_max=50.0, tol=1e-13, diagnostics=False)
    xi = t.x[t.integrated]
    mid = 0.5 * (xi[1:] + xi[:-1])
    u, z = t.state(mid)
    ur, zr = ref.state(mid)
    # global error, so allow some accumulation over the run
    assert np.max(np.abs(u - ur)) <= 100 * tol
    assert np.max(np.abs(z - zr)) <= 100 * tol


def test_flat_negative_c_bounded_and_positive_c_blows_up():
    dec = solve_soliton(BackgroundCase.flat(-1.0), 1.0)
    assert np.max(np.abs(dec.z[dec.integrated])) < 10
    assert dec.diagnostics["torsion_norm_sq"][-1] < dec.diagnostics["torsion_norm_sq"][len(dec.x) // 2]
    up = solve_soliton(BackgroundCase.flat(1.0), 1.0)
    assert up.truncated
    assert abs(up.z[-1]) > integrator.BLOWUP_Z
    assert up.r_end < 30


def test_state_range_and_errors():
    t = solve_soliton(BackgroundCase.flat(-1.0), 1.0, r_max=5.0)
    with pytest.raises(DomainError):
        t.state(math.log(6.0))
    with pytest.raises(DomainError):
        t.evaluate(0.0)
    with pytest.raises(UnsupportedCaseError):
        solve_soliton(BackgroundCase.cylinder(1.0), 1.0)
    with pytest.raises(ValueError):
        solve_soliton(BackgroundCase.flat(0.0), 1.0, r_max=0.3)
    with pytest.raises(ValueError):
        integrate(FLAT, LogState(0.0, 0.0, 1.0), 1.0, tol=0.0)


def test_step_underflow_is_reported(monkeypatch):
    monkeypatch.setattr(integrator, "MIN_STEP", 10.0)
    with pytest.raises(StiffnessError):
        integrate(FLAT, LogState(0.0, 0.1, 0.1), 5.0)


def test_evaluate_is_consistent_with_residual():
    case = BackgroundCase.bs_b(1.0)
    t = solve_soliton(case, 1.0, r_max=20.0, diagnostics=False)
    r = np.geomspace(0.01, 19.0, 50)  # crosses the series zone
    u, du, d2u = t.evaluate(r)
    assert np.max(np.abs(soliton_residual(case, u, du, d2u, r))) < 1e-9


def test_trajectory_is_immutable():
    t = solve_soliton(BackgroundCase.flat(0.0), 0.5, r_max=5.0, diagnostics=False)
    with pytest.raises(ValueError):
        t.u[0] = 1.0
    with pytest.raises(AttributeError):
        t.a1 = 2.0


def test_envelope_properties():
    xs = np.linspace(0.1, 3.0, 12)
    lo, hi = comparison_envelope(LINEAR, 0.0, 0.0, xs)
    assert np.all(lo < 0) and np.all(hi > 0)
    lo2, hi2 = comparison_envelope(LINEAR, 0.0, 1.7, xs)
    np.testing.assert_allclose(hi2 - lo2, hi - lo, rtol=1e-12)
    with pytest.raises(ValueError):
        comparison_envelope(LINEAR, 0.0, 0.0, [-1.0])


def test_envelope_contains_flat_trajectory():
    assert envelope_gap(case_params(BackgroundCase.flat(-1.0)), 1.0, r_max=50.0) <= 1e-9


def test_envelope_contains_random_trajectories():
    rng = np.random.default_rng(2024)
    for _ in range(4):
        assert envelope_gap(random_family_params(rng), float(rng.uniform(-2, 2))) <= 1e-9
