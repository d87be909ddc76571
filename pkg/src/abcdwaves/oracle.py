"""Independent low-tech integrators used to cross-check the finite-difference solver.

Nothing here touches ``discretize`` or ``solver``: the stationary wave is
recovered by fixed-step RK4 shooting, the fast base wave by Gauss-Legendre
quadrature of x(u) followed by spline inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq


class ShootingBlowup(RuntimeError):
    """Trajectory norm exceeded the blowup threshold (bad initial guess)."""


@dataclass(frozen=True)
class ShootingState:
    x: float
    u: float
    up: float
    eta: float
    etap: float
    step: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.u, self.up, self.eta, self.etap, self.step)):
            raise ValueError("shooting state must be finite")


@dataclass(frozen=True, eq=False)
class Trajectory:
    x: np.ndarray
    u: np.ndarray
    up: np.ndarray
    eta: np.ndarray
    etap: np.ndarray
    beta: float

    @property
    def tail_norm(self) -> float:
        return math.hypot(self.u[-1], self.eta[-1])

    @property
    def final_state(self) -> ShootingState:
        h = float(self.x[1] - self.x[0]) if self.x.size > 1 else 0.0
        return ShootingState(float(self.x[-1]), float(self.u[-1]), float(self.up[-1]),
                             float(self.eta[-1]), float(self.etap[-1]), h)

    def first_integral(self) -> np.ndarray:
        b2 = self.beta**2
        return b2 * (self.up**2 + self.etap**2) - self.u**2 * (1.0 + self.eta) - self.eta**2


# -- stationary shooting ---------------------------------------------------------

def _rhs(y, inv_b2):
    u, up, e, ep = y
    return (up, u * (1.0 + e) * inv_b2, ep, (e + 0.5 * u * u) * inv_b2)


def shoot_stationary(beta: float, u0: float, eta0: float, x_max: float, step: float = 2.5e-4,
                     blowup: float = 1e6, stop_on_blowup: bool = False) -> Trajectory:
    """Classical RK4 from the even initial state (u0, 0, eta0, 0).

    With ``stop_on_blowup`` the trajectory is cut where the norm first exceeds
    ``blowup``; otherwise ShootingBlowup is raised.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not (x_max > 0 and step > 0):
        raise ValueError("x_max and step must be positive")
    nsteps = int(math.ceil(x_max / step - 1e-9))
    h = x_max / nsteps
    inv_b2 = 1.0 / beta**2
    out = np.empty((nsteps + 1, 4))
    y = (float(u0), 0.0, float(eta0), 0.0)
    out[0] = y
    last = nsteps
    for i in range(1, nsteps + 1):
        k1 = _rhs(y, inv_b2)
        y2 = tuple(a + 0.5 * h * b for a, b in zip(y, k1))
        k2 = _rhs(y2, inv_b2)
        y3 = tuple(a + 0.5 * h * b for a, b in zip(y, k2))
        k3 = _rhs(y3, inv_b2)
        y4 = tuple(a + h * b for a, b in zip(y, k3))
        k4 = _rhs(y4, inv_b2)
        y = tuple(a + h / 6.0 * (p + 2.0 * q + 2.0 * r + s) for a, p, q, r, s in zip(y, k1, k2, k3, k4))
        out[i] = y
        if not (abs(y[0]) + abs(y[2]) <= blowup):
            if stop_on_blowup:
                last = i
                break
            raise ShootingBlowup(f"|(u, eta)| exceeded {blowup:g} at x = {i * h:.4g}")
    out = out[: last + 1]
    x = h * np.arange(last + 1)
    return Trajectory(x, out[:, 0], out[:, 1], out[:, 2], out[:, 3], beta)


def _fate(beta, a, sign, x_max, step):
    """+1 if the trajectory escapes (eta turns positive), -1 if it turns back first."""
    traj = shoot_stationary(beta, sign * math.sqrt(2.0) * a, -a, x_max, step, stop_on_blowup=True)
    e, ep = traj.eta, traj.etap
    up_idx = np.flatnonzero(e >= 0.0)
    back_idx = np.flatnonzero((ep < 0.0) & (np.arange(e.size) > 0))
    first_up = up_idx[0] if up_idx.size else np.inf
    first_back = back_idx[0] if back_idx.size else np.inf
    if first_up == first_back == np.inf:
        return 0
    return 1 if first_up < first_back else -1


@dataclass(frozen=True, eq=False)
class ShootingResult:
    trajectory: Trajectory
    eta0: float
    u0: float
    bracket_width: float
    valid_until: float


def tune_stationary(beta: float, branch: str = "+", x_max: float = 40.0, step: float = 2e-3,
                    bracket=(1.0 + 1e-3, 2.0), max_bisections: int = 80, sample_step: float | None = None) -> ShootingResult:
    """Bisect eta0 along u0 = -+sqrt(2) eta0 between escaping and turning-back trajectories.

    The returned trajectory is re-integrated from the bisected crest and cut
    where it leaves the homoclinic (first point where eta stops increasing or
    turns positive).
    """
    sign = 1.0 if branch in ("+", "plus") else -1.0
    if branch not in ("+", "plus", "-", "minus"):
        raise ValueError(f"unknown branch {branch!r}")
    lo, hi = bracket
    f_lo, f_hi = _fate(beta, lo, sign, x_max, step), _fate(beta, hi, sign, x_max, step)
    if f_lo != -1 or f_hi != 1:
        raise ValueError("bracket does not separate turning-back and escaping trajectories")
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f = _fate(beta, mid, sign, x_max, step)
        if f == 1:
            hi = mid
        elif f == -1:
            lo = mid
        else:
            lo = hi = mid
            break
    a = 0.5 * (lo + hi)
    traj = shoot_stationary(beta, sign * math.sqrt(2.0) * a, -a, x_max, sample_step or step, stop_on_blowup=True)
    bad = np.flatnonzero((traj.eta >= 0.0) | (traj.etap < 0.0) & (np.arange(traj.x.size) > 0))
    valid = traj.x[bad[0]] if bad.size else traj.x[-1]
    return ShootingResult(traj, -a, sign * math.sqrt(2.0) * a, hi - lo, float(valid))


# -- fast base wave by quadrature ---------------------------------------------------

def _phi(u, lam):
    return -(u**3) + 3.0 * lam * u**2 + 6.0 * u + 6.0 * lam * math.log1p(-u / lam)


def _phi_over_u2(u, lam):
    """Phi(u)/u^2 with the cancelling linear terms removed analytically for small u/lam."""
    r = u / lam
    if r > 0.1:
        return _phi(u, lam) / u**2
    acc = 3.0 * lam - 3.0 / lam - u * (1.0 + 2.0 / lam**2)
    term = 0.0
    for k in range(4, 60):
        term = 6.0 * u ** (k - 2) / (k * lam ** (k - 1))
        acc -= term
        if term < 1e-18 * abs(acc):
            break
    return acc


def _phi_near_crest(delta, ustar, lam):
    """Phi(u* - delta) / delta by Taylor expansion about the root u*."""
    g = lam - ustar
    d1 = -3.0 * ustar**2 + 6.0 * lam * ustar - 6.0 * ustar / g
    d2 = -6.0 * ustar + 6.0 * lam - 6.0 * lam / g**2
    d3 = -6.0 - 12.0 * lam / g**3
    acc = -d1 + d2 * delta / 2.0 - d3 * delta**2 / 6.0
    for n in range(4, 40):
        term = -6.0 * lam / (n * g**n) * (-delta) ** n / delta
        acc += term
        if abs(term) < 1e-18 * abs(acc):
            break
    return acc


def fast_crest(lam: float) -> float:
    if not lam > 1:
        raise ValueError("lam must exceed 1")
    lo = (3.0 * lam - math.sqrt(lam**2 + 8.0)) / 2.0
    hi = lam * (1.0 - 1e-15)
    return brentq(lambda u: _phi_over_u2(u, lam), lo * (1 + 1e-12), hi, xtol=1e-15, rtol=1e-15)


def _gauss_cumulative(f, edges, nodes=10):
    z, w = leggauss(nodes)
    out = np.zeros(edges.size)
    for i in range(1, edges.size):
        a, b = edges[i - 1], edges[i]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        out[i] = out[i - 1] + half * sum(wj * f(mid + half * zj) for zj, wj in zip(z, w))
    return out


@dataclass(frozen=True, eq=False)
class FastQuadrature:
    lam: float
    crest: float
    x: np.ndarray
    u: np.ndarray

    @property
    def eta(self) -> np.ndarray:
        return self.u / (self.lam - self.u)


def fast_profile_quadrature(lam: float, x, panels: int = 2400) -> FastQuadrature:
    """u(x) for the classical supercritical wave from x(u) = int_u^{u*} sqrt(lam / Phi).

    Crest part in w = sqrt(u* - u), tail in sigma = log u; both integrands are smooth.
    """
    x = np.abs(np.asarray(x, dtype=float))
    ustar = fast_crest(lam)
    u_mid = 0.5 * ustar
    w_end = math.sqrt(ustar - u_mid)

    def crest_integrand(w):
        d = w * w
        q = _phi_near_crest(d, ustar, lam) if d < 1e-2 * (lam - ustar) else _phi(ustar - d, lam) / d
        return 2.0 * math.sqrt(lam / q)

    w_edges = np.linspace(0.0, w_end, panels + 1)
    x_crest = _gauss_cumulative(crest_integrand, w_edges)
    kappa = math.sqrt(3.0 * (1.0 - 1.0 / lam**2))
    s_top = math.log(u_mid)
    s_bot = s_top - kappa * max(float(x.max()) - x_crest[-1], 1.0) - 5.0
    s_edges = np.linspace(s_top, s_bot, panels + 1)
    x_tail = x_crest[-1] - _gauss_cumulative(lambda s: math.sqrt(lam / _phi_over_u2(math.exp(s), lam)), s_edges)
    w_of_x = CubicSpline(x_crest, w_edges)
    s_of_x = CubicSpline(x_tail, s_edges)
    u = np.where(x <= x_crest[-1], ustar - w_of_x(np.minimum(x, x_crest[-1])) ** 2,
                 np.exp(s_of_x(np.maximum(x, x_crest[-1]))))
    return FastQuadrature(lam, ustar, x, u)


# -- comparison ------------------------------------------------------------------

def cross_validate(main, oracle, x_max: float | None = None, fields=("u", "eta")) -> float:
    """Sup-norm difference of (u, eta) on the common x-range, oracle interpolated by cubic spline.

    Both arguments need ``x``, ``u`` and ``eta`` arrays on x >= 0.
    """
    xm = np.asarray(main.x, dtype=float)
    xo = np.asarray(oracle.x, dtype=float)
    lo = max(xm.min(), xo.min())
    hi = min(xm.max(), xo.max())
    if x_max is not None:
        hi = min(hi, x_max)
    if not hi > lo:
        raise ValueError("profiles have no common x-range")
    sel = (xm >= lo) & (xm <= hi)
    diff = 0.0
    same = xo.shape == xm.shape and np.array_equal(xo, xm)
    for name in fields:
        fm = np.asarray(getattr(main, name), dtype=float)
        fo = np.asarray(getattr(oracle, name), dtype=float)
        vals = fo[sel] if same else CubicSpline(xo, fo)(xm[sel])
        diff = max(diff, float(np.max(np.abs(fm[sel] - vals))))
    return diff
