import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abcdwaves.oracle import (
    FastQuadrature,
    ShootingBlowup,
    ShootingState,
    cross_validate,
    fast_crest,
    fast_profile_quadrature,
    shoot_stationary,
    tune_stationary,
)

SQ2 = math.sqrt(2.0)


def exact(beta, x):
    s = 1.0 / np.cosh(x / (2 * beta)) ** 2
    return 1.5 * SQ2 * s, -1.5 * s


# -- shooting ----------------------------------------------------------------------------

def test_shooting_follows_exact_wave():
    traj = shoot_stationary(1.0, 1.5 * SQ2, -1.5, 20.0)
    u, eta = exact(1.0, traj.x)
    assert np.max(np.abs(traj.u - u)) < 1e-4
    assert np.max(np.abs(traj.eta - eta)) < 1e-4
    assert traj.tail_norm < 1e-5


def test_shooting_conserves_first_integral():
    traj = shoot_stationary(1.0, 1.5 * SQ2, -1.5, 10.0)
    assert np.max(np.abs(traj.first_integral())) < 1e-12


def test_rk4_fourth_order():
    errs = []
    for h in (0.04, 0.02, 0.01):
        traj = shoot_stationary(1.0, 1.5 * SQ2, -1.5, 4.0, step=h)
        errs.append(abs(traj.u[-1] - exact(1.0, 4.0)[0]))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(12 < r < 22 for r in ratios)


def test_shooting_blowup():
    with pytest.raises(ShootingBlowup):
        shoot_stationary(1.0, 3.0, -1.0, 40.0, step=1e-2, blowup=1e3)
    traj = shoot_stationary(1.0, 3.0, -1.0, 40.0, step=1e-2, blowup=1e3, stop_on_blowup=True)
    assert traj.x[-1] < 40.0
    assert abs(traj.u[-1]) + abs(traj.eta[-1]) > 1e3


def test_shooting_validation():
    with pytest.raises(ValueError):
        shoot_stationary(0.0, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        shoot_stationary(1.0, 1.0, -1.0, -1.0)
    with pytest.raises(ValueError):
        ShootingState(0.0, math.nan, 0.0, 0.0, 0.0, 0.1)


def test_final_state():
    traj = shoot_stationary(1.0, 1.5 * SQ2, -1.5, 1.0, step=0.1)
    st_ = traj.final_state
    assert st_.x == pytest.approx(1.0)
    assert st_.step == pytest.approx(0.1)


@pytest.mark.parametrize("branch,sign", [("+", 1.0), ("-", -1.0)])
def test_tuning_recovers_crest(branch, sign):
    res = tune_stationary(1.0, branch, step=5e-3)
    assert res.eta0 == pytest.approx(-1.5, abs=1e-6)
    assert res.u0 == pytest.approx(sign * 1.5 * SQ2, abs=1e-6)
    assert res.valid_until > 10.0


def test_tuning_bad_bracket():
    with pytest.raises(ValueError):
        tune_stationary(1.0, "+", bracket=(1.6, 2.0), step=1e-2)
    with pytest.raises(ValueError):
        tune_stationary(1.0, "sideways")


# -- fast quadrature ----------------------------------------------------------------------

def phi(u, lam):
    return -(u**3) + 3 * lam * u**2 + 6 * u + 6 * lam * np.log1p(-u / lam)


@pytest.mark.parametrize("lam", [1.1, 1.5, 2.0, 4.0])
def test_fast_crest_root(lam):
    u = fast_crest(lam)
    lo = (3 * lam - math.sqrt(lam**2 + 8)) / 2
    assert lo < u < lam
    assert abs(phi(u, lam)) < 1e-10 * lam**3


def test_fast_crest_validation():
    with pytest.raises(ValueError):
        fast_crest(1.0)


@settings(max_examples=10)
@given(st.floats(1.05, 3.0))
def test_quadrature_profile_satisfies_ode(lam):
    x = np.linspace(0, 10, 20001)
    q = fast_profile_quadrature(lam, x, panels=400)
    assert isinstance(q, FastQuadrature)
    assert q.u[0] == pytest.approx(q.crest, abs=1e-12)
    assert np.all(np.diff(q.u) < 0)
    up = np.gradient(q.u, x, edge_order=2)
    fi = lam * up**2 - phi(q.u, lam)
    assert np.max(np.abs(fi[5:-5])) < 1e-4 * lam**3
    np.testing.assert_allclose(q.eta, q.u / (lam - q.u))


def test_quadrature_self_convergence():
    x = np.linspace(0, 15, 301)
    a = fast_profile_quadrature(1.5, x, panels=1200).u
    b = fast_profile_quadrature(1.5, x, panels=2400).u
    assert np.max(np.abs(a - b)) < 1e-8


def test_quadrature_even():
    x = np.array([-2.0, 2.0])
    q = fast_profile_quadrature(1.5, x, panels=200)
    assert q.u[0] == q.u[1]


# -- cross validation --------------------------------------------------------------------

class Box:
    def __init__(self, x, u, eta):
        self.x, self.u, self.eta = x, u, eta


def test_cross_validate_identical():
    x = np.linspace(0, 5, 50)
    a = Box(x, np.sin(x), np.cos(x))
    assert cross_validate(a, a) == 0.0


def test_cross_validate_interpolates():
    x = np.linspace(0, 5, 401)
    xo = np.linspace(0, 6, 1001)
    main = Box(x, np.exp(-x), -np.exp(-x))
    orc = Box(xo, np.exp(-xo), -np.exp(-xo))
    assert cross_validate(main, orc) < 1e-9
    shifted = Box(xo, np.exp(-xo) + 1e-3, -np.exp(-xo))
    assert cross_validate(main, shifted) == pytest.approx(1e-3, rel=1e-6)
    assert cross_validate(main, shifted, fields=("eta",)) < 1e-9


def test_cross_validate_disjoint():
    a = Box(np.linspace(0, 1, 10), np.zeros(10), np.zeros(10))
    b = Box(np.linspace(2, 3, 10), np.zeros(10), np.zeros(10))
    with pytest.raises(ValueError):
        cross_validate(a, b)
