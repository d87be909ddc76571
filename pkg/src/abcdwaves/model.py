"""Traveling-wave equations of the abcd Boussinesq system and their base solutions.

With U = (u, eta) and wave speed lam, solitary waves solve

    c eta'' + eta - lam u + d lam u'' + u^2 / 2 = 0
    a u''   + u - lam eta + b lam eta'' + eta u = 0

Two one-parameter families of coefficients are used: the slow family
a = c = -d = -beta^2, b = 1/3 + beta^2 (continued in the speed lam from the
stationary sech^2 waves) and the fast family a = c = k s, b = s,
d = 1/3 - (2k + 1) s (continued in s from the classical Boussinesq wave).

Every residual returns one array per equation over all grid nodes.  At
Dirichlet nodes the entry is the boundary condition residual, i.e. the
field value itself, so residuals vanish exactly where Newton's system does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .discretize import DEFAULT_ORDER, Grid, derivative, second_derivative

SQRT2 = np.sqrt(2.0)
SUM_TOL = 1e-12


@dataclass(frozen=True)
class ABCDParams:
    a: float
    b: float
    c: float
    d: float
    tau: float = 0.0

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d, self.tau)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("abcd coefficients must be finite")
        scale = 1.0 + sum(abs(v) for v in vals)
        if abs(self.a + self.b + self.c + self.d - (1.0 / 3.0 - self.tau)) > SUM_TOL * scale:
            raise ValueError("a + b + c + d must equal 1/3 - tau")


@dataclass(frozen=True)
class SlowFamily:
    """a = c = -d = -beta^2, b = 1/3 + beta^2."""

    beta: float

    def __post_init__(self):
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError("beta must be positive")

    @property
    def params(self) -> ABCDParams:
        b2 = self.beta**2
        return ABCDParams(a=-b2, b=1.0 / 3.0 + b2, c=-b2, d=b2)

    @property
    def t(self) -> float:
        """1 + 1/(3 beta^2), the coefficient multiplying lam^2 in the ellipticity gap."""
        return 1.0 + 1.0 / (3.0 * self.beta**2)

    def ellipticity_gap(self, lam: float) -> float:
        return 1.0 - lam**2 * self.t

    @property
    def critical_speed(self) -> float:
        """Speed at which the slow system loses ellipticity."""
        return 1.0 / np.sqrt(self.t)


@dataclass(frozen=True)
class FastFamily:
    """a = c = k s, b = s, d = 1/3 - (2k + 1) s at a fixed supercritical speed lam."""

    k: float
    s: float
    lam: float

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError("fast family needs lam > 1")
        if not 0 < self.k < self.lam:
            raise ValueError("fast family needs 0 < k < lam")
        if not self.s >= 0:
            raise ValueError("fast family needs s >= 0")
        if not self.ellipticity_gap() > 0:
            raise ValueError("s lies outside the ellipticity set (gap <= 0)")

    @property
    def params(self) -> ABCDParams:
        ks = self.k * self.s
        return ABCDParams(a=ks, b=self.s, c=ks, d=1.0 / 3.0 - (2.0 * self.k + 1.0) * self.s)

    def ellipticity_gap(self, s: float | None = None) -> float:
        s = self.s if s is None else s
        return fast_ellipticity_gap(s, self.k, self.lam)

    @property
    def s_critical(self) -> float:
        return fast_s_critical(self.k, self.lam)

    def with_s(self, s: float) -> "FastFamily":
        return FastFamily(self.k, s, self.lam)


def fast_ellipticity_gap(s: float, k: float, lam: float) -> float:
    return lam**2 / 3.0 - ((2.0 * k + 1.0) * lam**2 + k**2) * s


def fast_s_critical(k: float, lam: float) -> float:
    """Value of s where the fast system loses ellipticity."""
    return lam**2 / (3.0 * ((2.0 * k + 1.0) * lam**2 + k**2))


@dataclass(frozen=True, eq=False)
class WaveProfile:
    """Sampled (u, eta) on a grid together with the speed and coefficients."""

    grid: Grid
    u: np.ndarray
    eta: np.ndarray
    lam: float
    params: ABCDParams
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        eta = np.array(self.eta, dtype=float)
        if u.shape != (self.grid.n,) or eta.shape != (self.grid.n,):
            raise ValueError(
                f"profile arrays have shapes {u.shape}, {eta.shape}; grid has {self.grid.n} nodes"
            )
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(eta))):
            raise ValueError("profile contains non-finite values")
        if not np.isfinite(self.lam):
            raise ValueError("wave speed must be finite")
        u.setflags(write=False)
        eta.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "eta", eta)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def tail_norm(self, fraction: float = 0.1) -> float:
        """max |u|, |eta| over the outer ``fraction`` of the grid (both ends on a full line)."""
        m = max(1, int(np.ceil(fraction * self.grid.n)))
        parts = [self.u[-m:], self.eta[-m:]]
        if self.grid.symmetry != "even-half-line":
            parts += [self.u[:m], self.eta[:m]]
        return float(max(np.max(np.abs(p)) for p in parts))

    def decays(self, tail_tol: float = 1e-8) -> bool:
        return self.tail_norm() < tail_tol

    def replace(self, **changes) -> "WaveProfile":
        kw = dict(grid=self.grid, u=self.u, eta=self.eta, lam=self.lam, params=self.params, meta=dict(self.meta))
        kw.update(changes)
        return WaveProfile(**kw)

    def to_full_line(self) -> "WaveProfile":
        """Mirror an even half-line profile onto [-L, L] with the same spacing."""
        if self.grid.symmetry != "even-half-line":
            return self
        g = Grid(self.grid.half_length, 2 * self.grid.n - 1, "full-line")
        u = np.concatenate([self.u[:0:-1], self.u])
        eta = np.concatenate([self.eta[:0:-1], self.eta])
        return self.replace(grid=g, u=u, eta=eta)


def _fields(u, eta, grid: Grid):
    u = np.asarray(u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if u.shape != (grid.n,) or eta.shape != (grid.n,):
        raise ValueError(f"fields have shapes {u.shape}, {eta.shape}; grid has {grid.n} nodes")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(eta))):
        raise ValueError("non-finite field values")
    return u, eta


def _pin_boundary(grid: Grid, r1, r2, f1, f2):
    bnd = grid.boundary_mask
    r1[bnd] = f1[bnd]
    r2[bnd] = f2[bnd]
    return r1, r2


def abcd_residual(profile: WaveProfile, order: int = DEFAULT_ORDER):
    """Pointwise residuals of both traveling-wave equations.

    Returns ``(r_eta, r_u)``: the equation led by ``c eta''`` first, the one
    led by ``a u''`` second.
    """
    g = profile.grid
    u, eta = _fields(profile.u, profile.eta, g)
    p, lam = profile.params, profile.lam
    D2 = second_derivative(g, order=order)
    uxx, exx = D2 @ u, D2 @ eta
    r1 = p.c * exx + eta - lam * u + p.d * lam * uxx + 0.5 * u**2
    r2 = p.a * uxx + u - lam * eta + p.b * lam * exx + eta * u
    return _pin_boundary(g, r1, r2, eta, u)


def slow_residual(u, eta, lam: float, beta: float, grid: Grid, order: int = DEFAULT_ORDER):
    """Slow system written with L = 1 - beta^2 d^2/dx^2.

    F1 = L(u - lam t eta) + (lam / (3 beta^2) + u) eta,  F2 = L(eta - lam u) + u^2/2,
    t = 1 + 1/(3 beta^2).  F1 is the abcd ``a u''`` equation, F2 the ``c eta''`` one.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    u, eta = _fields(u, eta, grid)
    D2 = second_derivative(grid, order=order)
    t = 1.0 + 1.0 / (3.0 * beta**2)

    def L(f):
        return f - beta**2 * (D2 @ f)

    F1 = L(u - lam * t * eta) + (lam / (3.0 * beta**2) + u) * eta
    F2 = L(eta - lam * u) + 0.5 * u**2
    return _pin_boundary(grid, F1, F2, u, eta)


def fast_residual(u, eta, s: float, k: float, lam: float, grid: Grid, order: int = DEFAULT_ORDER):
    """Fast system: F1 = k s u'' + lam s eta'' + u - lam eta + eta u,
    F2 = d lam u'' + k s eta'' - lam u + eta + u^2/2 with d = 1/3 - (2k+1) s."""
    u, eta = _fields(u, eta, grid)
    D2 = second_derivative(grid, order=order)
    uxx, exx = D2 @ u, D2 @ eta
    d = 1.0 / 3.0 - (2.0 * k + 1.0) * s
    F1 = k * s * uxx + lam * s * exx + u - lam * eta + eta * u
    F2 = d * lam * uxx + k * s * exx - lam * u + eta + 0.5 * u**2
    return _pin_boundary(grid, F1, F2, u, eta)


def slow_reduced_residual(u, eta, lam: float, beta: float, grid: Grid, order: int = DEFAULT_ORDER):
    """Decoupled-principal-part form of the slow system, (eta equation, u equation).

    -beta^2 B eta'' + (1 - lam^2 + lam u) eta + u^2/2 = 0
    -beta^2 B u'' + [B + (lam t / 2) u] u + (lam / (3 beta^2) + u) eta = 0,  B = 1 - lam^2 t.
    """
    u, eta = _fields(u, eta, grid)
    D2 = second_derivative(grid, order=order)
    t = 1.0 + 1.0 / (3.0 * beta**2)
    B = 1.0 - lam**2 * t
    Re = -(beta**2) * B * (D2 @ eta) + (1.0 - lam**2 + lam * u) * eta + 0.5 * u**2
    Ru = -(beta**2) * B * (D2 @ u) + (B + 0.5 * lam * t * u) * u + (lam / (3.0 * beta**2) + u) * eta
    return _pin_boundary(grid, Re, Ru, eta, u)


def fast_reduced_residual(u, eta, s: float, k: float, lam: float, grid: Grid, order: int = DEFAULT_ORDER):
    """Scalar-principal-part form of the fast system, (u equation, eta equation)."""
    u, eta = _fields(u, eta, grid)
    D2 = second_derivative(grid, order=order)
    d = 1.0 / 3.0 - (2.0 * k + 1.0) * s
    gap = d * lam**2 - k**2 * s
    Ru = gap * (D2 @ u) - (k + lam**2 - 0.5 * lam * u) * u + (lam + k * (lam - u)) * eta
    Re = (
        s * gap * (D2 @ eta)
        - (d * lam**2 + k * s - d * lam * u) * eta
        + (d * lam + lam * k * s - 0.5 * k * s * u) * u
    )
    return _pin_boundary(grid, Ru, Re, u, eta)


def _branch_sign(branch) -> float:
    if branch in ("+", "plus", +1, "pos"):
        return 1.0
    if branch in ("-", "minus", -1, "neg"):
        return -1.0
    raise ValueError(f"branch must be '+' or '-', got {branch!r}")


def stationary_exact(beta: float, branch, grid: Grid) -> WaveProfile:
    """Closed-form lam = 0 wave: u = +-(3 sqrt2 / 2) sech^2(x / 2beta), eta = -(3/2) sech^2(x / 2beta)."""
    fam = SlowFamily(beta)
    sgn = _branch_sign(branch)
    sech2 = 1.0 / np.cosh(grid.x / (2.0 * beta)) ** 2
    return WaveProfile(grid, sgn * 1.5 * SQRT2 * sech2, -1.5 * sech2, 0.0, fam.params, {"branch": "+" if sgn > 0 else "-"})


def stationary_first_integral(profile: WaveProfile, beta: float, order: int = DEFAULT_ORDER) -> np.ndarray:
    """beta^2 (u')^2 + beta^2 (eta')^2 - u^2 (1 + eta) - eta^2, zero on stationary waves."""
    g = profile.grid
    u, eta = profile.u, profile.eta
    ux = derivative(u, g, +1, order)
    ex = derivative(eta, g, +1, order)
    return beta**2 * (ux**2 + ex**2) - u**2 * (1.0 + eta) - eta**2


# -- classical Boussinesq (a = b = c = 0, d = 1/3) supercritical wave ---------

def _log1p_tail(r):
    """sum_{m>=2} r^m / m = -(log(1 - r) + r), accurate for small r."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = np.abs(r) < 0.05
    rs = r[small]
    acc = np.zeros_like(rs)
    term = rs**2
    for m in range(2, 30):
        acc += term / m
        term = term * rs
    out[small] = acc
    rl = r[~small]
    out[~small] = -(np.log1p(-rl) + rl)
    return out


def phi(u, lam: float):
    """-u^3 + 3 lam u^2 + 6u + 6 lam log((lam - u)/lam); the base wave obeys lam (u')^2 = phi(u)."""
    u = np.asarray(u, dtype=float)
    if np.any(u >= lam):
        raise ValueError("phi is only defined for u < lam (no stagnation)")
    return -(u**3) + 3.0 * lam * u**2 - 6.0 * lam * _log1p_tail(u / lam)


def _phi_over_u2(u, lam: float):
    u = np.asarray(u, dtype=float)
    r = u / lam
    out = np.empty_like(u)
    small = np.abs(r) < 0.05
    rs = r[small]
    acc = np.zeros_like(rs)
    term = np.ones_like(rs)
    for m in range(2, 30):
        acc += term / m
        term = term * rs
    out[small] = 3.0 * lam - u[small] - 6.0 / lam * acc
    ul = u[~small]
    out[~small] = phi(ul, lam) / ul**2
    return out


def dphi(u, lam: float):
    u = np.asarray(u, dtype=float)
    return -3.0 * u**2 + 6.0 * lam * u - 6.0 * u / (lam - u)


def crest_lower_bound(lam: float) -> float:
    return 0.5 * (3.0 * lam - np.sqrt(lam**2 + 8.0))


def crest_height(lam: float) -> float:
    """Positive root of phi in (crest_lower_bound(lam), lam)."""
    if not lam > 1:
        raise ValueError("the classical Boussinesq solitary wave needs lam > 1")
    lo = crest_lower_bound(lam)
    f = lambda v: float(phi(v, lam))
    if not f(lo) > 0:
        raise ValueError(f"phi does not change sign on the crest interval for lam = {lam}")
    hi = None
    for e in range(1, 16):
        cand = lam * (1.0 - 10.0**-e)
        if cand > lo and f(cand) < 0:
            hi = cand
            break
    if hi is None:
        raise ValueError(f"could not bracket the crest root for lam = {lam}")
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def fast_decay_rate(lam: float) -> float:
    """Far-field decay rate sqrt(3 (1 - 1/lam^2)) of the classical wave."""
    if not lam > 1:
        raise ValueError("lam must exceed 1")
    return float(np.sqrt(3.0 * (1.0 - 1.0 / lam**2)))


def fast_base_grid(lam: float, n: int = 2048, decay_lengths: float = 30.0, points_per_crest: int = 100) -> Grid:
    """Half-line grid of 30 decay lengths, doubled in n until the crest is resolved.

    The crest width sqrt(2 u* / |u''(0)|) must span ``points_per_crest`` cells;
    the crest sharpens as lam grows.
    """
    L = decay_lengths / fast_decay_rate(lam)
    ustar = crest_height(lam)
    curv = abs(float(dphi(ustar, lam))) / (2.0 * lam)
    width = np.sqrt(2.0 * ustar / curv)
    while L / (n - 1) > width / points_per_crest:
        n *= 2
    return Grid(L, n)


def boussinesq_fast_profile(lam: float, grid: Grid, rtol: float = 1e-12) -> WaveProfile:
    """Classical Boussinesq solitary wave by quadrature of lam (u')^2 = phi(u).

    Near the crest phi has a simple root, so the first stretch is integrated
    in the regular second-order form u'' = phi'(u) / (2 lam).  After that the
    decaying first-order form is integrated in w = log u,
    w' = -sqrt(phi(u) / (lam u^2)), which is stable and keeps full relative
    precision in the exponential tail.  eta = u / (lam - u).
    """
    if grid.symmetry != "even-half-line":
        raise ValueError("quadrature profile is built on an even half-line grid")
    ustar = crest_height(lam)
    x = grid.x
    L = x[-1]

    def second_order(_, y):
        return [y[1], float(dphi(y[0], lam)) / (2.0 * lam)]

    switch = lambda _, y: y[0] - 0.9 * ustar
    switch.terminal = True
    x1_guess = min(L, 5.0)
    sol1 = solve_ivp(second_order, (0.0, x1_guess), [ustar, 0.0], method="RK45",
                     rtol=rtol, atol=1e-14 * ustar, dense_output=True, events=switch)
    if sol1.status == 1:
        x1 = float(sol1.t_events[0][0])
    else:
        x1 = x1_guess
    u = np.empty(grid.n)
    near = x <= x1
    u[near] = sol1.sol(x[near])[0]
    if x1 < L:
        u1 = float(sol1.sol(x1)[0])

        def log_form(_, w):
            uu = np.exp(w)
            val = _phi_over_u2(uu, lam) / lam
            return -np.sqrt(np.maximum(val, 0.0))

        far = ~near
        sol2 = solve_ivp(log_form, (x1, L), [np.log(u1)], method="RK45", rtol=rtol,
                         atol=1e-12, t_eval=x[far])
        if not sol2.success:
            raise ValueError(f"quadrature of the base wave failed: {sol2.message}")
        u[far] = np.exp(sol2.y[0])
    if np.any(u <= 0) or np.any(u >= lam):
        raise ValueError("quadrature left the admissible interval (0, lam)")
    eta = u / (lam - u)
    params = ABCDParams(a=0.0, b=0.0, c=0.0, d=1.0 / 3.0)
    return WaveProfile(grid, u, eta, lam, params, {"crest": ustar, "switch_x": x1})


# -- functionals (diagnostics only) -------------------------------------------

def hamiltonian(profile: WaveProfile, order: int = DEFAULT_ORDER) -> float:
    """(1/2) int [-c eta_x^2 - a u_x^2 + eta^2 + (1 + eta) u^2] dx by the trapezoid rule."""
    g, p = profile.grid, profile.params
    u, eta = profile.u, profile.eta
    ux = derivative(u, g, +1, order)
    ex = derivative(eta, g, +1, order)
    dens = -p.c * ex**2 - p.a * ux**2 + eta**2 + (1.0 + eta) * u**2
    return 0.5 * float(g.quadrature_weights @ dens)


def impulse(profile: WaveProfile, b: float | None = None, order: int = DEFAULT_ORDER) -> float:
    """int (eta u + b eta_x u_x) dx by the trapezoid rule."""
    g = profile.grid
    b = profile.params.b if b is None else b
    u, eta = profile.u, profile.eta
    ux = derivative(u, g, +1, order)
    ex = derivative(eta, g, +1, order)
    return float(g.quadrature_weights @ (eta * u + b * ex * ux))


def flux_identity_residual(profile: WaveProfile, family, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Pointwise value of the energy-flux identity obtained by multiplying the
    reduced equations by eta' and u' and summing.

    Slow family:  [-(beta^2 B / 2)(u'^2 + eta'^2) + (1 - lam^2)/2 eta^2 + B/2 u^2
                   + (lam t / 6) u^3 + u^2 eta / 2]' + lam u eta eta' + lam/(3 beta^2) eta u'
    Fast family:  [d lam/2 u'^2 + lam s/2 eta'^2 + k s u' eta' + u eta - lam/2 u^2
                   - lam/2 eta^2 + u^3/6]' + u eta eta'
    """
    g = profile.grid
    u, eta, lam = profile.u, profile.eta, profile.lam
    ux = derivative(u, g, +1, order)
    ex = derivative(eta, g, +1, order)
    if isinstance(family, SlowFamily):
        beta, t = family.beta, family.t
        B = 1.0 - lam**2 * t
        bracket = (
            -0.5 * beta**2 * B * (ux**2 + ex**2)
            + 0.5 * (1.0 - lam**2) * eta**2
            + 0.5 * B * u**2
            + lam * t / 6.0 * u**3
            + 0.5 * u**2 * eta
        )
        rem = lam * u * eta * ex + lam / (3.0 * beta**2) * eta * ux
    elif isinstance(family, FastFamily):
        k, s = family.k, family.s
        d = 1.0 / 3.0 - (2.0 * k + 1.0) * s
        bracket = (
            0.5 * d * lam * ux**2
            + 0.5 * lam * s * ex**2
            + k * s * ux * ex
            + u * eta
            - 0.5 * lam * u**2
            - 0.5 * lam * eta**2
            + u**3 / 6.0
        )
        rem = u * eta * ex
    else:
        raise TypeError("family must be a SlowFamily or FastFamily")
    out = derivative(bracket, g, +1, order) + rem
    out[g.boundary_mask] = 0.0
    return out
