import math

import numpy as np
import pytest

from isosolitons import analysis, geometry
from isosolitons.analysis import Classification
from isosolitons.cases import ALL_KINDS, BackgroundCase
from isosolitons.errors import DomainError, SingularEvaluationError, UnsupportedCaseError
from isosolitons.integrator import LogState, solve_soliton
from isosolitons.series import case_params
from isosolitons.verification import default_case, lyapunov_fd_errors, q_deviation

FLAT = case_params(BackgroundCase.flat(-1.0))
RADII = np.array([0.25, 0.5, 1.0, 2.0, 5.0, 10.0])


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_torsion_zero_for_trivial_structure(kind):
    assert np.all(analysis.torsion_norm_sq_case(default_case(kind), 0.0, 0.0, RADII) == 0)


def test_torsion_cylinder_closed_form():
    rng = np.random.default_rng(9)
    for _ in range(10):
        b, c0, c1 = rng.uniform(-1.5, 1.5, 3)
        r = RADII
        du = c1 * b * np.exp(b * r)
        t = analysis.torsion_norm_sq_case(BackgroundCase.cylinder(b), c0 + c1 * np.exp(b * r), du, r)
        np.testing.assert_allclose(t / 4, c1**2 * b**2 * np.exp(2 * b * r), rtol=1e-10)


@pytest.mark.parametrize("case", [BackgroundCase.bs_a(1.0), BackgroundCase.bs_b(1.0), BackgroundCase.bs_b(2.5),
                                  BackgroundCase.flat(0.0)], ids=lambda c: c.label)
def test_torsion_cross_module(case):
    p = case.profile()
    u, du = (lambda x: 1.1 * np.tanh(x / 2)), (lambda x: 0.55 / np.cosh(x / 2) ** 2)
    f = lambda x: np.cos(u(x) / 2)  # noqa: E731
    df = lambda x: -np.sin(u(x) / 2) * du(x) / 2  # noqa: E731
    a = lambda x: np.sin(u(x) / 2) / p.k(x)  # noqa: E731
    da = lambda x: (np.cos(u(x) / 2) * du(x) / 2 * p.k(x) - np.sin(u(x) / 2) * p.dk(x)) / p.k(x) ** 2  # noqa: E731
    geo = geometry.torsion_norm_sq(p, f, df, a, da, RADII)
    disp = analysis.torsion_norm_sq_case(case, u(RADII), du(RADII), RADII)
    np.testing.assert_allclose(disp, geo, rtol=1e-9)


def test_torsion_domain():
    with pytest.raises(DomainError):
        analysis.torsion_norm_sq_case(BackgroundCase.flat(0), 0.1, 0.1, 0.0)


def test_lyapunov_flat_values():
    p = case_params(BackgroundCase.flat(0.0))
    assert analysis.lyapunov(p, LogState(1.3, 0.0, 0.0)) == 6.0
    x, u, z = 0.4, 0.9, -0.7
    assert analysis.lyapunov(p, LogState(x, u, z)) == pytest.approx(0.5 * z * z + 6 * math.cos(u), rel=1e-15)
    assert analysis.lyapunov_derivative(p, LogState(x, u, 0.0)) == 0.0
    assert analysis.lyapunov_derivative(FLAT, LogState(0.0, 0.3, 0.5)) == pytest.approx(-6 * 0.25, rel=1e-14)


@pytest.mark.parametrize("c", [-1.0, 0.0])
def test_flat_lyapunov_non_increasing(c):
    t = solve_soliton(BackgroundCase.flat(c), 1.0)
    assert np.max(np.diff(t.diagnostics["lyapunov"])) <= 10 * t.tol


def test_lyapunov_derivative_fd_order():
    errs = lyapunov_fd_errors(BackgroundCase.bs_a(1.0), 0.5, steps=(0.01, 0.005))
    assert math.log2(errs[0] / errs[1]) >= 1.8
    errs = lyapunov_fd_errors(BackgroundCase.bs_b(1.0), 1.0, steps=(0.01, 0.005))
    assert math.log2(errs[0] / errs[1]) >= 1.8


def test_bracket_tends_to_one_plus_c_over_b():
    for case in (BackgroundCase.bs_a(1.0), BackgroundCase.bs_b(2.0)):
        p = case_params(case)
        assert analysis.bracket_coefficient(p, 30.0) == pytest.approx(1 + p.c / p.b, rel=1e-10)


def test_classification_examples():
    assert solve_soliton(BackgroundCase.flat(-1.0), 1.0).diagnostics["classification"] is Classification.DECAY
    assert solve_soliton(BackgroundCase.flat(1.0), 1.0).diagnostics["classification"] is Classification.BLOWUP
    assert solve_soliton(BackgroundCase.bs_a(1.0), 0.5).diagnostics["classification"] is Classification.DECAY
    assert solve_soliton(BackgroundCase.flat(0.0), 0.0).diagnostics["classification"] is Classification.DECAY


def test_classification_short_run_is_inconclusive():
    t = solve_soliton(BackgroundCase.flat(-1.0), 1.0, r_max=20.0)
    assert analysis.classify_asymptotics(t) is Classification.INCONCLUSIVE


def test_classification_thresholds_are_parameters():
    t = solve_soliton(BackgroundCase.bs_a(1.0), 1.0)
    # too slow for the strict threshold alone
    strict = analysis.classify_asymptotics(t, decay_slope=-10.0)
    assert strict is Classification.INCONCLUSIVE
    assert analysis.decay_slope_estimate(t) < -0.5


def test_q_invariant_errors():
    with pytest.raises(SingularEvaluationError):
        analysis.q_invariant(BackgroundCase.flat(0), 0.1, 0.0, 0.0, 1.0, 1.0)
    with pytest.raises(UnsupportedCaseError):
        analysis.q_invariant(BackgroundCase.bs_a(1), 0.1, 0.1, 0.0, 1.0, 1.0)


def test_q_field_and_angle_forms_agree():
    rng = np.random.default_rng(1)
    for _ in range(20):
        u, du, d2u = rng.uniform(-1, 1, 3)
        r = rng.uniform(0.2, 5)
        a, da, d2a, f = analysis.angle_to_field(u, du, d2u)
        q1 = analysis.q_invariant(BackgroundCase.flat(0), a, da, d2a, f, r)
        assert q1 == pytest.approx(analysis.q_from_angle(u, du, d2u, r), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("c", [-1.0, 0.0, 1.0])
def test_q_constant_along_flat_solitons(c):
    assert q_deviation(c) <= 1e-6


def test_q_perturbed_trajectory_is_not_constant():
    t = solve_soliton(BackgroundCase.flat(0.0), 1.0, r_max=21.0, tol=1e-12)
    r = np.linspace(0.5, 20.0, 400)
    u, du, d2u = analysis.dense_angle_derivatives(t, r)
    q = analysis.q_from_angle(1.01 * u, 1.01 * du, 1.01 * d2u, r)
    assert np.max(q) - np.min(q) > 1e-2
    assert np.max(np.abs(q)) > 1e-2


def test_q_profile_gaps_and_range():
    t = solve_soliton(BackgroundCase.flat(0.0), 0.0, r_max=10.0)
    assert np.all(np.isnan(analysis.q_profile(t, np.array([1.0, 2.0]))))
    t = solve_soliton(BackgroundCase.flat(0.0), 1.0, r_max=10.0)
    with pytest.raises(DomainError):
        analysis.q_profile(t, np.array([20.0]))


@pytest.mark.parametrize("case", [BackgroundCase.bs_a(1.0), BackgroundCase.bs_b(1.0)], ids=lambda c: c.label)
def test_lemma_bounds_constants(case):
    p = case_params(case)
    b = analysis.lemma_bounds(p)
    assert b.m == pytest.approx(2 * 1.0 * 1.5 * p.f / p.b**2)
    assert b.stated_coeff == pytest.approx(1.5 * (4 + (1 + p.c / p.b)))
    assert b.proof_coeff == pytest.approx((1 + p.c / p.b) * 0.5 + 6)
    assert -5 < b.M < 5


@pytest.mark.parametrize("case", [BackgroundCase.bs_a(1.0), BackgroundCase.bs_b(1.0)], ids=lambda c: c.label)
def test_lemma_decrease_on_random_states(case):
    p = case_params(case)
    bounds = analysis.lemma_bounds(p)
    rng = np.random.default_rng(17)
    n = 50000
    x = rng.uniform(bounds.M, bounds.M + 8, n)
    u = rng.uniform(-math.pi, math.pi, n)
    z = rng.choice([-1, 1], n) * np.sqrt(bounds.m + rng.exponential(5.0, n))
    for use in ("stated", "proof"):
        tested, bad = analysis.lemma_decrease_violations(p, bounds, x, u, z, use=use)
        assert tested == n and bad.size == 0


@pytest.mark.parametrize("case", [BackgroundCase.bs_a(1.0), BackgroundCase.bs_b(1.0)], ids=lambda c: c.label)
def test_lemma_z_bound_along_trajectory(case):
    p = case_params(case)
    bounds = analysis.lemma_bounds(p)
    t = solve_soliton(case, 1.0)
    Mp = max(bounds.M, t.x_switch)
    _, z0 = t.state(np.array([Mp]))
    Mp, m_prime, consts = analysis.lemma_z_bound(p, bounds, z0[0], Mp)
    c1, c2, f, c4 = consts
    xs = np.linspace(Mp, t.x_end, 50)
    A, B, _, _ = analysis._ab(p, xs)
    assert np.all(c1 <= 0.5 * A * A * np.exp(-4 * xs) + 1e-15)
    assert np.all(0.5 * A * A * np.exp(-4 * xs) <= c2 + 1e-15)
    assert np.all(B * np.exp(-4 * xs) <= c4 + 1e-15) and np.all(B * np.exp(-4 * xs) >= f - 1e-15)
    tail = t.x >= Mp
    assert np.isfinite(m_prime)
    assert np.max(t.z[tail] ** 2) <= m_prime


def test_lemma_bounds_need_positive_b_f():
    with pytest.raises(UnsupportedCaseError):
        analysis.lemma_bounds(FLAT)


def test_diagnostics_shapes():
    t = solve_soliton(BackgroundCase.flat(-1.0), 1.0, r_max=60.0)
    d = t.diagnostics
    for key in ("torsion_norm_sq", "lyapunov", "lyapunov_derivative", "q"):
        assert d[key].shape == t.x.shape
    assert np.all(d["torsion_norm_sq"] >= 0)
    assert np.all(np.isnan(d["q"][~t.integrated]))
    bs = solve_soliton(BackgroundCase.bs_a(1.0), 1.0, r_max=10.0)
    assert np.all(np.isnan(bs.diagnostics["q"]))
