import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abcdwaves.analysis import (
    stationary_identities,
    constant_states,
    fast_front_limit,
    fast_front_obstruction,
    front_limit_slow,
    g_polynomial,
    g_z,
    g_zz,
    reduced_obstruction_fast,
    slow_B,
    slow_front_excluded,
    slow_front_lower_bound,
    threshold_constants,
)
from abcdwaves.discretize import Grid
from abcdwaves.model import WaveProfile, SlowFamily, stationary_exact


def constant_residual(u, eta, lam):
    """Traveling-wave equations with all derivatives dropped."""
    return abs(u - lam * eta + eta * u), abs(-lam * u + eta + 0.5 * u * u)


# -- constant states ------------------------------------------------------------------

@given(st.floats(0.0, 10.0))
def test_constant_states_solve_system(lam):
    for u, eta in constant_states(lam):
        r1, r2 = constant_residual(u, eta, lam)
        scale = 1 + abs(u) ** 2 + abs(eta) * abs(u)
        assert r1 < 1e-12 * scale and r2 < 1e-12 * scale


def test_constant_states_at_rest():
    states = constant_states(0.0)
    assert states[0] == pytest.approx((math.sqrt(2), -1.0))
    assert states[1] == pytest.approx((-math.sqrt(2), -1.0))


@pytest.mark.parametrize("lam", [1.2, 2.0, 5.0])
def test_fast_front_limit_is_constant_state(lam):
    f = fast_front_limit(lam)
    assert any(abs(u - f.ubar) < 1e-12 and abs(e - f.etabar) < 1e-12 for u, e in constant_states(lam))


def test_fast_front_limit_example():
    f = fast_front_limit(2.0)
    assert f.ubar == pytest.approx(3 - math.sqrt(3))
    assert f.etabar == pytest.approx(math.sqrt(3))


# -- slow front algebra ------------------------------------------------------------------

@given(st.floats(0.2, 3.0), st.floats(0.01, 0.99))
def test_front_limit_slow_solves_its_quadratic(beta, frac):
    lam = frac * SlowFamily(beta).critical_speed
    f = front_limit_slow(lam, beta)
    assert f.ubar > 0
    assert f.quadratic_residual < 1e-12 * (1 + f.ubar**2)
    assert f.B == pytest.approx(slow_B(lam, beta))


def test_front_limit_slow_matches_rest_state_as_speed_vanishes():
    f = front_limit_slow(1e-9, 0.5)
    assert f.ubar == pytest.approx(math.sqrt(2), abs=1e-7)
    assert f.etabar == pytest.approx(-1.0, abs=1e-7)


def test_front_limit_slow_is_not_a_constant_state_for_positive_speed():
    f = front_limit_slow(0.3, 0.5)
    assert f.ubar == pytest.approx(0.99653, abs=1e-5)
    assert max(constant_residual(f.ubar, f.etabar, 0.3)) > 1e-2
    assert constant_states(0.3)[0] == pytest.approx((1.87215, -1.19082), abs=1e-5)


def test_front_limit_slow_validation():
    with pytest.raises(ValueError):
        front_limit_slow(0.0, 0.5)
    with pytest.raises(ValueError):
        front_limit_slow(0.7, 0.5)
    with pytest.raises(ValueError):
        front_limit_slow(0.3, 0.0)


def test_g_at_zero():
    for t in (1.01, 7 / 3, 2.5, 10.0):
        assert g_polynomial(0.0, t) == -9.0


@given(st.floats(0.0, 1.0), st.floats(1.01, 10.0))
def test_g_derivatives_consistent(z, t):
    h = 1e-5
    fd1 = (g_polynomial(z + h, t) - g_polynomial(z - h, t)) / (2 * h)
    fd2 = (g_z(z + h, t) - g_z(z - h, t)) / (2 * h)
    assert fd1 == pytest.approx(g_z(z, t), rel=1e-6, abs=1e-6)
    assert fd2 == pytest.approx(g_zz(z, t), rel=1e-6, abs=1e-6)


def test_g_vectorised():
    z = np.linspace(0, 0.2, 5)
    out = g_polynomial(z, 2.0)
    assert out.shape == (5,)
    assert out[2] == g_polynomial(float(z[2]), 2.0)


def test_slow_front_excluded_quarter():
    excluded, scan = slow_front_excluded(0.5, 10_000)
    assert excluded
    assert scan.t == pytest.approx(7 / 3, abs=1e-15)
    assert scan.max_G < 0
    assert 0 < scan.argmax_z < scan.z_max


def test_slow_front_scan_threshold():
    b2 = threshold_constants()[2].recomputed
    # the scan excludes fronts for beta^2 up to the threshold and stops doing so beyond it
    assert slow_front_excluded(math.sqrt(b2 - 0.01))[0]
    assert slow_front_excluded(0.5)[0]
    assert not slow_front_excluded(math.sqrt(b2 + 0.01))[0]


def test_slow_front_excluded_validation():
    with pytest.raises(ValueError):
        slow_front_excluded(0.5, 0)


def test_threshold_constants_agree():
    th = {t.name: t for t in threshold_constants()}
    assert th["t_g"].agrees and th["beta_sq"].agrees
    assert th["t_g"].recomputed == pytest.approx(2.26371, abs=1e-5)
    assert th["beta_sq"].recomputed == pytest.approx(0.26377, abs=1e-5)
    # the published 1.68 is off by 0.012
    assert th["t_gzz"].recomputed == pytest.approx(1.66805, abs=1e-5)
    assert not th["t_gzz"].agrees
    assert g_zz(1 / th["t_gzz"].recomputed ** 2, th["t_gzz"].recomputed) == pytest.approx(0, abs=1e-10)
    assert g_polynomial(1 / th["t_g"].recomputed ** 2, th["t_g"].recomputed) == pytest.approx(0, abs=1e-10)
    assert th["beta_sq"].recomputed == pytest.approx(1 / (3 * (th["t_g"].recomputed - 1)))


@pytest.mark.xfail(strict=True, reason="G < 0 on the scan range does not force the lower bound above the root")
def test_lower_bound_exceeds_root_where_G_negative():
    beta = 0.5
    t = 1 + 1 / (3 * beta**2)
    for lam in np.linspace(0.01, 1 / t, 200, endpoint=False)[1:]:
        if g_polynomial(lam**2, t) < 0:
            f = front_limit_slow(float(lam), beta)
            assert slow_front_lower_bound(float(lam), f.B) > f.ubar


def test_lower_bound_below_root_example():
    # concrete counterexample to the implication above
    f = front_limit_slow(0.3, 0.5)
    assert g_polynomial(0.09, 7 / 3) < 0
    assert slow_front_lower_bound(0.3, f.B) < f.ubar


# -- fast front algebra ------------------------------------------------------------------

@given(st.floats(1.0 + 1e-6, 50.0))
def test_fast_obstruction_negative(lam):
    assert fast_front_obstruction(lam) < 0
    assert reduced_obstruction_fast(lam) < 0


def test_fast_obstruction_boundary():
    assert fast_front_obstruction(1.0, allow_boundary=True) == pytest.approx(0.0, abs=1e-15)
    assert reduced_obstruction_fast(1.0) == pytest.approx(0.0, abs=1e-15)
    assert abs(fast_front_obstruction(1 + 1e-6)) < 1e-4
    with pytest.raises(ValueError):
        fast_front_obstruction(1.0)
    with pytest.raises(ValueError):
        reduced_obstruction_fast(0.5)


def test_reduced_obstruction_same_sign():
    for lam in (1.01, 1.5, 3.0, 10.0):
        ratio = fast_front_obstruction(lam) / reduced_obstruction_fast(lam)
        assert ratio > 0


# -- stationary identities ------------------------------------------------------------------

@pytest.mark.parametrize("branch", ["+", "-"])
def test_stationary_identities(branch, grid30):
    rep = stationary_identities(stationary_exact(1.0, branch, grid30), branch, 1.0)
    assert rep.branch == branch
    assert rep.combination < 1e-12
    assert rep.combination_ode < 1e-10
    assert rep.kdv < 1e-7


def test_stationary_identities_detect_wrong_branch(grid30):
    rep = stationary_identities(stationary_exact(1.0, "+", grid30), "-", 1.0)
    assert rep.combination > 1.0


def test_stationary_identities_require_rest(grid30):
    prof = stationary_exact(1.0, "+", grid30).replace(lam=0.1)
    with pytest.raises(ValueError):
        stationary_identities(prof, "+", 1.0)


def test_g_examples():
    assert g_z(0.0, 7 / 3) == pytest.approx(43.38, abs=5e-3)
    assert g_zz(0.0, 7 / 3) > 0
    assert g_polynomial(1 / 2.5**2, 2.5) == pytest.approx(-0.4987, abs=1e-4)


@pytest.mark.parametrize("b2,expected", [(0.25, True), (0.26, True), (10.0, False)])
def test_slow_front_excluded_examples(b2, expected):
    assert slow_front_excluded(math.sqrt(b2))[0] is expected


@given(st.floats(1.7, 20.0))
def test_g_convex_on_scan_range_beyond_threshold(t):
    # G_zz is linear in z, so its endpoint values on [0, 1/t^2] decide the sign
    assert g_zz(0.0, t) > 0 and g_zz(1 / t**2, t) > 0


def test_lower_bound_finite_near_origin():
    lam = 1e-4
    val = slow_front_lower_bound(lam, slow_B(lam, 0.5))
    assert math.isfinite(val) and val > 0


@pytest.mark.xfail(strict=True, reason="at beta = 0.5, lam = 0.3 the lower bound is below the root")
def test_lower_bound_exceeds_root_example():
    f = front_limit_slow(0.3, 0.5)
    assert slow_front_lower_bound(0.3, f.B) > f.ubar
