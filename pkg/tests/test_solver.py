import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abcdwaves.discretize import Grid, derivative, second_derivative
from abcdwaves.model import (
    FastFamily,
    SlowFamily,
    WaveProfile,
    abcd_residual,
    boussinesq_fast_profile,
    fast_base_grid,
    fast_residual,
    slow_residual,
    stationary_exact,
)
from abcdwaves.solver import (
    EllipticityError,
    FastSystem,
    LinearSolveError,
    MaxIterationsError,
    NewtonError,
    NewtonSettings,
    RegimeError,
    SlowSystem,
    StagnationError,
    jacobian_fast,
    jacobian_slow,
    make_system,
    newton_iterate,
    newton_solve,
    smallest_singular_value,
    translation_residual,
)


def fd_check(residual, jac, u, eta, rng, eps=1e-6):
    n = u.size
    v, z = rng.standard_normal((2, n))
    a1, a2 = residual(u + eps * v, eta + eps * z)
    b1, b2 = residual(u - eps * v, eta - eps * z)
    fd = np.concatenate([a1 - b1, a2 - b2]) / (2 * eps)
    j1, j2 = jac.apply(v, z)
    ex = np.concatenate([j1, j2])
    return np.max(np.abs(fd - ex)) / np.max(np.abs(ex))


# -- Jacobians --------------------------------------------------------------------

def test_slow_jacobian_matches_finite_differences(rng):
    g = Grid(20.0, 256)
    base = stationary_exact(1.0, "+", g)
    u = base.u + 0.05 * np.exp(-g.x**2)
    eta = base.eta
    jac = jacobian_slow(u, eta, 0.1, 1.0, g)
    rel = fd_check(lambda a, b: slow_residual(a, b, 0.1, 1.0, g), jac, u, eta, rng)
    assert rel < 1e-6


def test_fast_jacobian_matches_finite_differences(rng):
    g = Grid(20.0, 256)
    prof = boussinesq_fast_profile(1.5, g)
    jac = jacobian_fast(prof.u, prof.eta, 0.01, 0.5, 1.5, g)
    rel = fd_check(lambda a, b: fast_residual(a, b, 0.01, 0.5, 1.5, g), jac, prof.u, prof.eta, rng)
    assert rel < 1e-6


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.floats(0.3, 2.0), st.floats(0.0, 0.95))
def test_slow_jacobian_fd_property(seed, beta, lamfrac):
    rng = np.random.default_rng(seed)
    g = Grid(10.0, 64)
    lam = lamfrac * SlowFamily(beta).critical_speed
    u, eta = rng.uniform(-1, 1, (2, g.n))
    jac = jacobian_slow(u, eta, lam, beta, g)
    assert fd_check(lambda a, b: slow_residual(a, b, lam, beta, g), jac, u, eta, rng) < 1e-6


def test_slow_dparam_matches_finite_differences():
    g = Grid(20.0, 256)
    sysm = SlowSystem(SlowFamily(0.7), g)
    u = stationary_exact(0.7, "+", g).u
    eta = stationary_exact(0.7, "+", g).eta
    lam, eps = 0.2, 1e-6
    a1, a2 = sysm.residual(u, eta, lam + eps)
    b1, b2 = sysm.residual(u, eta, lam - eps)
    d1, d2 = sysm.dparam(u, eta, lam)
    assert np.max(np.abs((a1 - b1) / (2 * eps) - d1)) < 1e-6 * np.max(np.abs(d1))
    assert np.max(np.abs((a2 - b2) / (2 * eps) - d2)) < 1e-6 * np.max(np.abs(d2))


def test_fast_dparam_matches_finite_differences():
    g = Grid(20.0, 256)
    sysm = FastSystem(0.5, 1.5, g)
    prof = boussinesq_fast_profile(1.5, g)
    s, eps = 0.03, 1e-6
    a1, a2 = sysm.residual(prof.u, prof.eta, s + eps)
    b1, b2 = sysm.residual(prof.u, prof.eta, s - eps)
    d1, d2 = sysm.dparam(prof.u, prof.eta, s)
    assert np.max(np.abs((a1 - b1) / (2 * eps) - d1)) < 1e-6 * np.max(np.abs(d1))
    assert np.max(np.abs((a2 - b2) / (2 * eps) - d2)) < 1e-6 * np.max(np.abs(d2))


def test_jacobian_dimension_mismatch():
    g = Grid(10.0, 64)
    with pytest.raises(ValueError):
        jacobian_slow(np.zeros(10), np.zeros(10), 0.0, 1.0, g)
    with pytest.raises(ValueError):
        jacobian_fast(np.zeros(10), np.zeros(64), 0.0, 0.5, 1.5, g)


# -- kernel / translation ------------------------------------------------------------

def test_translation_mode_slow():
    g = Grid(30.0, 2048)
    U = stationary_exact(1.0, "+", g)
    assert translation_residual(SlowSystem(SlowFamily(1.0), g), U.u, U.eta, 0.0) < 1e-6


def test_translation_mode_fast():
    g = fast_base_grid(1.5)
    prof = boussinesq_fast_profile(1.5, g)
    assert translation_residual(FastSystem(0.5, 1.5, g), prof.u, prof.eta, 0.0) < 1e-5


def test_fast_reduced_kernel_equation():
    # at s = 0, eliminating z from J (v, z) = 0 leaves (lam/3) v'' + (lam/(lam-u)^2 - (lam-u)) v = 0
    lam = 1.5
    g = fast_base_grid(lam)
    u = boussinesq_fast_profile(lam, g).u
    D2 = second_derivative(Grid(g.half_length, 2 * g.n - 1, "full-line"))
    uf = np.concatenate([u[:0:-1], u])
    vf = derivative(uf, D2.grid)
    coeff = lam / (lam - uf) ** 2 - (lam - uf)
    res = lam / 3.0 * (D2 @ vf) + coeff * vf
    free = ~D2.grid.boundary_mask
    assert np.max(np.abs(res[free])) < 1e-5 * np.max(np.abs(vf))


def test_half_line_jacobian_invertible():
    g = Grid(30.0, 2048)
    U = stationary_exact(1.0, "+", g)
    sig = smallest_singular_value(jacobian_slow(U.u, U.eta, 0.0, 1.0, g))
    assert sig > 0.1


def test_weighted_symmetry_only_at_rest():
    g = Grid(20.0, 256)
    U = stationary_exact(1.0, "+", g)

    def asym(lam):
        op = jacobian_slow(U.u, U.eta, lam, 1.0, g)
        W = op.free_weights()
        A = (op.free_matrix().toarray()) * W[:, None]
        return np.max(np.abs(A - A.T)) / np.max(np.abs(A))

    assert asym(0.0) < 1e-12
    assert asym(0.3) > 1e-3


# -- Newton ---------------------------------------------------------------------------

def test_newton_at_exact_stationary_wave():
    g = Grid(30.0, 2048)
    res = newton_solve("slow", stationary_exact(1.0, "+", g), SlowFamily(1.0))
    assert res.residual <= 1e-10
    assert res.iterations <= 3
    assert res.report.smallest_singular_value > 0.1
    assert res.report.translation_residual < 1e-6
    r = abcd_residual(res.profile)
    assert max(np.max(np.abs(r[0])), np.max(np.abs(r[1]))) < 1e-9


def test_newton_slow_small_speed():
    g = Grid(30.0, 2048)
    init = stationary_exact(1.0, "+", g).replace(lam=0.05)
    res = newton_solve("slow", init, SlowFamily(1.0), NewtonSettings(report=False))
    prof = res.profile
    assert res.residual <= 1e-10
    assert prof.lam == 0.05
    assert np.all(prof.u[:-1] > 0) and np.all(prof.eta[:-1] < 0)


def test_newton_fast_small_s():
    lam, k = 1.5, 0.5
    g = fast_base_grid(lam)
    base = boussinesq_fast_profile(lam, g)
    res = newton_solve("fast", base, FastFamily(k, 0.005, lam), NewtonSettings(report=False))
    assert res.residual <= 1e-10
    u = res.profile.u
    assert 0 < u[0] < lam
    assert np.all(np.diff(u) <= 0)
    assert res.profile.params == FastFamily(k, 0.005, lam).params


def test_newton_residual_decreases():
    g = Grid(30.0, 1024)
    U = stationary_exact(1.0, "+", g)
    bump = np.exp(-(g.x / 4) ** 2)
    bump[-1] = 0.0
    u, eta, iters, hist = newton_iterate(SlowSystem(SlowFamily(1.0), g), U.u + 0.05 * bump, U.eta, 0.0,
                                         NewtonSettings())
    assert hist[-1] <= 1e-10
    assert all(b < a for a, b in zip(hist, hist[1:]))


def test_newton_error_hierarchy():
    assert issubclass(EllipticityError, RegimeError)
    assert issubclass(StagnationError, RegimeError)
    assert issubclass(RegimeError, NewtonError)
    assert issubclass(MaxIterationsError, NewtonError)
    assert issubclass(LinearSolveError, NewtonError)


def test_newton_rejects_nonelliptic_speed():
    g = Grid(20.0, 256)
    init = stationary_exact(0.5, "+", g).replace(lam=0.7)
    with pytest.raises(EllipticityError):
        newton_solve("slow", init, SlowFamily(0.5))


def test_newton_rejects_stagnant_initial():
    g = Grid(20.0, 256)
    sysm = FastSystem(0.5, 1.5, g)
    u = 1.6 * np.exp(-g.x**2)
    u[-1] = 0.0
    with pytest.raises(StagnationError):
        newton_iterate(sysm, u, np.zeros(g.n), 0.0, NewtonSettings())


def test_newton_max_iterations():
    g = Grid(30.0, 1024)
    U = stationary_exact(1.0, "+", g)
    with pytest.raises(MaxIterationsError):
        newton_iterate(SlowSystem(SlowFamily(1.0), g), 1.3 * U.u, U.eta, 0.0, NewtonSettings(max_iters=1))


def test_newton_nonfinite_initial():
    g = Grid(10.0, 64)
    u = np.zeros(g.n)
    u[3] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        newton_iterate(SlowSystem(SlowFamily(1.0), g), u, np.zeros(g.n), 0.0, NewtonSettings())


def test_newton_solve_requires_half_line():
    g = Grid(10.0, 65, "full-line")
    init = WaveProfile(g, np.zeros(g.n), np.zeros(g.n), 0.0, SlowFamily(1.0).params)
    with pytest.raises(ValueError):
        newton_solve("slow", init, SlowFamily(1.0))


def test_make_system_validation():
    g = Grid(10.0, 64)
    with pytest.raises(TypeError):
        make_system("slow", FastFamily(0.5, 0.0, 1.5), g)
    with pytest.raises(TypeError):
        make_system("fast", SlowFamily(1.0), g)
    with pytest.raises(ValueError):
        make_system("medium", SlowFamily(1.0), g)


def test_newton_settings_validation():
    with pytest.raises(ValueError):
        NewtonSettings(max_iters=0)
    with pytest.raises(ValueError):
        NewtonSettings(residual_tol=-1.0)


def test_solution_independent_of_residual_form():
    # the fast-family solution also zeroes the generic abcd residual
    lam, k = 1.5, 0.5
    g = fast_base_grid(lam)
    res = newton_solve("fast", boussinesq_fast_profile(lam, g), FastFamily(k, 0.01, lam), NewtonSettings(report=False))
    r = abcd_residual(res.profile)
    free = ~g.boundary_mask
    assert max(np.max(np.abs(r[0][free])), np.max(np.abs(r[1][free]))) < 1e-9


def test_newton_order_above_rounding_floor():
    from abcdwaves.verification import newton_order_history

    hist = newton_order_history(iterations=2)
    orders = [np.log(b) / np.log(a) for a, b in zip(hist, hist[1:])]
    assert all(o >= 1.8 for o in orders)
    assert hist[-1] < 1e-10


def test_domain_truncation_insensitive():
    # doubling L at fixed spacing moves interior values by less than the 1e-8 tail tolerance
    out = []
    for L, n in ((30.0, 2048), (60.0, 4095)):
        g = Grid(L, n)
        init = stationary_exact(1.0, "+", g).replace(lam=0.1)
        out.append(newton_solve("slow", init, SlowFamily(1.0), NewtonSettings(report=False)).profile)
    m = 1500  # x <= ~22
    assert np.max(np.abs(out[0].u[:m] - out[1].u[:m])) < 1e-8
    assert np.max(np.abs(out[0].eta[:m] - out[1].eta[:m])) < 1e-8
