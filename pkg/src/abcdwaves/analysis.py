"""Monotone-front limit algebra, nonexistence scans and stationary-wave identities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .discretize import DEFAULT_ORDER, derivative, second_derivative
from .model import WaveProfile, _branch_sign


@dataclass(frozen=True)
class FrontLimit:
    """Downstream limits (ubar, etabar) of a hypothetical monotone front."""

    ubar: float
    etabar: float
    B: float | None = None
    quadratic_residual: float | None = None


def constant_states(lam: float) -> list[tuple[float, float]]:
    """Nonzero constant solutions (u, eta) of the traveling-wave system.

    They do not depend on (a, b, c, d): eta = lam u - u^2/2 with
    u^2 - 3 lam u + 2 (lam^2 - 1) = 0.
    """
    disc = math.sqrt(lam**2 + 8.0)
    out = []
    for u in ((3.0 * lam + disc) / 2.0, (3.0 * lam - disc) / 2.0):
        if u != 0.0:
            out.append((u, lam * u - 0.5 * u * u))
    return out


# -- slow family ------------------------------------------------------------------

def _slow_t(beta: float) -> float:
    if not beta > 0:
        raise ValueError("beta must be positive")
    return 1.0 + 1.0 / (3.0 * beta**2)


def slow_B(lam: float, beta: float) -> float:
    return 1.0 - lam**2 * _slow_t(beta)


def front_limit_slow(lam: float, beta: float) -> FrontLimit:
    """Positive root of -(2-B) u^2 - lam B u + 2 (1-lam^2) B = 0 and etabar = -u^2 / (2 (1 - lam^2 - lam u)).

    This algebra carries a -lam u coefficient in the decoupled eta equation;
    the system itself has +lam u there, so for lam > 0 the pair returned here
    is not a constant state of the traveling-wave system (the two agree at
    lam = 0).  ``constant_states`` gives the exact states.
    """
    if not 0 < lam < 1:
        raise ValueError("slow fronts need 0 < lam < 1")
    B = slow_B(lam, beta)
    if not B > 0:
        raise ValueError(f"B = {B} <= 0: lam is outside the ellipticity region")
    disc = lam**2 * B**2 + 8.0 * B * (2.0 - B) * (1.0 - lam**2)
    ubar = (math.sqrt(disc) - lam * B) / (2.0 * (2.0 - B))
    etabar = -ubar**2 / (2.0 * (1.0 - lam**2 - lam * ubar))
    q = -(2.0 - B) * ubar**2 - lam * B * ubar + 2.0 * (1.0 - lam**2) * B
    return FrontLimit(ubar, etabar, B, abs(q))


def slow_front_lower_bound(lam: float, B: float) -> float:
    """Lower bound on ubar that any slow front must satisfy."""
    one = 1.0 - lam**2
    root = math.sqrt(4.0 * (1.0 - B) ** 2 * one**2 + 3.0 * (7.0 - 4.0 * B) * B * lam**2 * one)
    return (2.0 * root - 4.0 * (1.0 - B) * one) / (lam * (7.0 - 4.0 * B))


def g_polynomial(z, t):
    """G(z, t); a slow front at speed lam needs G(lam^2, t) >= 0."""
    z = np.asarray(z, dtype=float)
    out = (-20.0 + 13.0 / t) * z**3 + (-60.0 + 33.0 / t + 32.0 * t) * z**2 + (-39.0 + 18.0 / t + 32.0 * t) * z - 9.0
    return out if out.ndim else float(out)


def g_z(z, t):
    z = np.asarray(z, dtype=float)
    out = 3.0 * (-20.0 + 13.0 / t) * z**2 + 2.0 * (-60.0 + 33.0 / t + 32.0 * t) * z + (-39.0 + 18.0 / t + 32.0 * t)
    return out if out.ndim else float(out)


def g_zz(z, t):
    z = np.asarray(z, dtype=float)
    out = 6.0 * (-20.0 + 13.0 / t) * z + 2.0 * (-60.0 + 33.0 / t + 32.0 * t)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FrontScan:
    t: float
    z_max: float
    scan_n: int
    max_G: float
    argmax_z: float
    excluded: bool


def slow_front_excluded(beta: float, scan_n: int = 10_000) -> tuple[bool, FrontScan]:
    """True iff G(z, t) < 0 at every point of an endpoint-exclusive scan of (0, 1/t^2)."""
    if scan_n < 1:
        raise ValueError("scan_n must be positive")
    t = _slow_t(beta)
    z_max = 1.0 / t**2
    z = z_max * np.arange(1, scan_n + 1) / (scan_n + 1)
    G = g_polynomial(z, t)
    i = int(np.argmax(G))
    excluded = bool(np.all(G < 0))
    return excluded, FrontScan(t, z_max, scan_n, float(G[i]), float(z[i]), excluded)


@dataclass(frozen=True)
class Threshold:
    name: str
    reported: float
    recomputed: float

    @property
    def agrees(self) -> bool:
        return abs(self.reported - self.recomputed) <= 1e-2


def threshold_constants() -> list[Threshold]:
    """Re-derive the thresholds on t (and beta^2) by root finding.

    t1: G_zz(1/t^2, t) = 0; t2: G(1/t^2, t) = 0; beta^2 = 1 / (3 (t2 - 1)).
    """
    t1 = brentq(lambda t: g_zz(1.0 / t**2, t), 1.2, 3.0, xtol=1e-14)
    t2 = brentq(lambda t: g_polynomial(1.0 / t**2, t), 1.8, 4.0, xtol=1e-14)
    b2 = 1.0 / (3.0 * (t2 - 1.0))
    return [
        Threshold("t_gzz", 1.68, t1),
        Threshold("t_g", 2.264, t2),
        Threshold("beta_sq", 0.26, b2),
    ]


# -- fast family ------------------------------------------------------------------

def fast_front_limit(lam: float) -> FrontLimit:
    ubar = (3.0 * lam - math.sqrt(lam**2 + 8.0)) / 2.0
    etabar = ubar / (lam - ubar)
    return FrontLimit(ubar, etabar)


def fast_front_obstruction(lam: float, allow_boundary: bool = False) -> float:
    """Left side of the inequality a fast front would need; negative means no front.

    ``allow_boundary`` admits lam = 1 for boundary probes.
    """
    if not (lam > 1 or (allow_boundary and lam == 1)):
        raise ValueError("fast fronts need lam > 1")
    f = fast_front_limit(lam)
    u, e = f.ubar, f.etabar
    return u * e - 0.5 * lam * u**2 - 0.5 * lam * e**2 + u**3 / 6.0 + 0.5 * u * e**2


def reduced_obstruction_fast(lam: float) -> float:
    """(lam - ubar)(ubar/3 - lam) + 1, a positive multiple of the obstruction for lam > 1."""
    if not lam >= 1:
        raise ValueError("reduced obstruction needs lam >= 1")
    u = fast_front_limit(lam).ubar
    return (lam - u) * (u / 3.0 - lam) + 1.0


# -- stationary identities ------------------------------------------------------

@dataclass(frozen=True)
class StationaryIdentities:
    branch: str
    combination: float
    combination_ode: float
    kdv: float


def stationary_identities(profile: WaveProfile, branch, beta: float, order: int = DEFAULT_ORDER) -> StationaryIdentities:
    """Sup-norms of the vanishing combination, its linear ODE and the steady KdV integral.

    + branch: w = u + sqrt(2) eta with beta^2 w'' = (1 + u/sqrt(2)) w;
    - branch: h = u - sqrt(2) eta with beta^2 h'' = (1 - u/sqrt(2)) h.
    """
    if profile.lam != 0:
        raise ValueError("these identities hold for stationary (lam = 0) profiles")
    sign = _branch_sign(branch)
    g = profile.grid
    u, eta = profile.u, profile.eta
    comb = u + sign * math.sqrt(2.0) * eta
    D2 = second_derivative(g, order=order)
    ode = beta**2 * (D2 @ comb) - (1.0 + sign * u / math.sqrt(2.0)) * comb
    ex = derivative(eta, g, order=order)
    kdv = beta**2 * ex**2 - eta**2 - (2.0 / 3.0) * eta**3
    free = ~g.boundary_mask
    return StationaryIdentities(
        "+" if sign > 0 else "-",
        float(np.max(np.abs(comb))),
        float(np.max(np.abs(ode[free]))),
        float(np.max(np.abs(kdv[free]))),
    )
