"""Acceptance checks, one function per criterion, each returning a CheckResult."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import stationary_identities, fast_front_obstruction, g_polynomial, slow_front_excluded
from .continuation import StepSettings, TerminationReason, continue_fast, continue_slow
from .discretize import Grid, derivative
from .model import (
    FastFamily,
    SlowFamily,
    WaveProfile,
    abcd_residual,
    boussinesq_fast_profile,
    crest_lower_bound,
    fast_base_grid,
    fast_s_critical,
    phi,
    stationary_exact,
    stationary_first_integral,
)
from .oracle import cross_validate, fast_profile_quadrature, tune_stationary
from .solver import (
    NewtonSettings,
    SlowSystem,
    _factor,
    _sup,
    newton_solve,
    smallest_singular_value,
    translation_residual,
)


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.criterion}: {self.name} -- {self.detail}"


def _sup_abs(*fields) -> float:
    return float(max(np.max(np.abs(f)) for f in fields))


def check_stationary(beta: float = 1.0, L: float = 30.0, n: int = 2048) -> CheckResult:
    grid = Grid(L, n)
    plus = stationary_exact(beta, "+", grid)
    minus = stationary_exact(beta, "-", grid)
    res = _sup_abs(*abcd_residual(plus))
    fi = _sup_abs(stationary_first_integral(plus, beta))
    w = stationary_identities(plus, "+", beta).combination
    h = stationary_identities(minus, "-", beta).combination
    ok = res < 1e-8 and fi < 1e-7 and w < 1e-12 and h < 1e-12
    detail = f"residual {res:.2e} (<1e-8), first integral {fi:.2e} (<1e-7), |w| {w:.1e}, |h| {h:.1e} (<1e-12)"
    return CheckResult(1, "closed-form stationary reproduction", ok, detail,
                       {"residual": res, "first_integral": fi, "w": w, "h": h})


def check_kernel(beta: float = 1.0, L: float = 30.0, ns=(512, 1024, 2048)) -> CheckResult:
    fam = SlowFamily(beta)
    grid = Grid(L, ns[-1])
    U = stationary_exact(beta, "+", grid)
    trans = translation_residual(SlowSystem(fam, grid), U.u, U.eta, 0.0)
    sig = []
    for n in ns:
        g = Grid(L, n)
        V = stationary_exact(beta, "+", g)
        sig.append(smallest_singular_value(SlowSystem(fam, g).jacobian(V.u, V.eta, 0.0)))
    diffs = [abs(b - a) for a, b in zip(sig, sig[1:])]
    converging = all(s > 0 for s in sig) and diffs[-1] <= diffs[0] and diffs[-1] / sig[-1] < 1e-2
    ok = trans < 1e-6 and converging
    detail = (f"|J U'|/|U|_C2 = {trans:.2e} (<1e-6); sigma_min at n={list(ns)}: "
              + ", ".join(f"{s:.6f}" for s in sig) + f"; successive changes {', '.join(f'{d:.1e}' for d in diffs)}")
    return CheckResult(2, "kernel / translation mode", ok, detail, {"translation": trans, "sigma_min": sig})


def newton_order_history(beta: float = 1.0, L: float = 30.0, n: int = 2048, amplitude: float = 1e-3,
                         iterations: int = 3):
    """Plain Newton from the stationary wave plus a smooth perturbation of sup-norm ``amplitude``."""
    grid = Grid(L, n)
    base = stationary_exact(beta, "+", grid)
    bump = np.exp(-((grid.x / (4.0 * beta)) ** 2))
    bump[grid.boundary_mask] = 0.0
    u = base.u + amplitude * bump
    eta = base.eta - amplitude * bump * np.cos(grid.x / beta)
    system = SlowSystem(SlowFamily(beta), grid)
    hist = [_sup(*system.residual(u, eta, 0.0))]
    for _ in range(iterations):
        r1, r2 = system.residual(u, eta, 0.0)
        delta = _factor(system.jacobian(u, eta, 0.0).matrix()).solve(-np.concatenate([r1, r2]))
        u, eta = u + delta[:n], eta + delta[n:]
        hist.append(_sup(*system.residual(u, eta, 0.0)))
    return hist


def check_newton_order(C: float = 1.0, exponent: float = 1.8, iterations: int = 3) -> CheckResult:
    hist = newton_order_history(iterations=iterations)
    pairs = [(a, b, b <= C * a**exponent) for a, b in zip(hist, hist[1:])]
    ok = len(pairs) >= iterations and all(p[2] for p in pairs)
    detail = ("residuals " + " -> ".join(f"{r:.2e}" for r in hist)
              + f"; r_k+1 <= {C:g} r_k^{exponent}: " + ", ".join("yes" if p[2] else "no" for p in pairs))
    return CheckResult(3, "Newton convergence order", ok, detail, {"history": hist, "C": C})


def check_slow_branch(beta: float = 0.5, L: float = 40.0, n: int = 4096, lam_target: float = 0.3):
    branch = continue_slow(beta, settings=StepSettings(half_length=L, n=n))
    pts = branch.points[1:]
    nodal = all(p.diagnostics.nodal_ok for p in branch.points)
    gaps = [p.diagnostics.ellipticity_gap for p in pts]
    gaps_ok = all(g > 0 for g in gaps)
    last10 = gaps[-10:]
    decreasing = all(b < a for a, b in zip(last10, last10[1:]))
    reason = branch.termination.reason
    lam_star = SlowFamily(beta).critical_speed
    ok = branch.furthest >= lam_target and nodal and gaps_ok and reason != TerminationReason.BLOWUP and decreasing
    detail = (f"furthest lam {branch.furthest:.6f} (>= {lam_target}), lam* {lam_star:.6f}, {len(branch.points)} points, "
              f"nodal {'ok' if nodal else 'VIOLATED'}, gaps>0 {gaps_ok}, gap decreasing over last 10 {decreasing}, "
              f"termination {reason.value}")
    return CheckResult(4, "slow branch", ok, detail,
                       {"furthest": branch.furthest, "lambda_star": lam_star, "termination": reason.value}), branch


def check_fast_base(lams=(1.1, 1.5, 2.0)) -> CheckResult:
    parts, ok = [], True
    vals = {}
    for lam in lams:
        grid = fast_base_grid(lam)
        prof = boussinesq_fast_profile(lam, grid)
        u0 = float(prof.u[0])
        lo = crest_lower_bound(lam)
        bounds = lo - 1e-8 < u0 < lam + 1e-8 and lo < u0 < lam
        up = derivative(prof.u, grid)
        fi = float(np.max(np.abs(lam * up**2 - phi(prof.u, lam))))
        rel = float(np.max(np.abs(prof.eta - prof.u / (lam - prof.u))))
        good = bounds and fi < 1e-6 and rel < 1e-12
        ok &= good
        vals[lam] = {"u0": u0, "first_integral": fi, "eta_relation": rel, "n": grid.n}
        parts.append(f"lam={lam}: {lo:.6f} < u0={u0:.8f} < {lam}, lam u'^2-Phi {fi:.1e}, eta rel {rel:.0e}")
    return CheckResult(5, "fast base wave", ok, "; ".join(parts), vals)


def check_fast_branch(lam: float = 1.5, k: float = 0.5):
    branch = continue_fast(lam, k)
    s_star = fast_s_critical(k, lam)
    nodal = all(p.diagnostics.nodal_ok for p in branch.points)
    below = all(p.param < s_star for p in branch.points)
    allowed = {TerminationReason.LOSS_OF_ELLIPTICITY, TerminationReason.STAGNATION_LIMIT,
               TerminationReason.PARAMETER_RANGE_EXHAUSTED, TerminationReason.NEWTON_FAILURE}
    reason = branch.termination.reason
    ok = len(branch.points) >= 10 and nodal and below and reason in allowed
    detail = (f"{len(branch.points)} points (>=10), furthest s {branch.furthest:.6f} < s* {s_star:.6f}: {below}, "
              f"nodal + eta(0) bound {'ok' if nodal else 'VIOLATED'}, termination {reason.value}")
    return CheckResult(6, "fast branch", ok, detail,
                       {"points": len(branch.points), "furthest": branch.furthest, "s_star": s_star,
                        "termination": reason.value}), branch


def check_fronts() -> CheckResult:
    g0 = all(g_polynomial(0.0, t) == -9.0 for t in (1.01, 7.0 / 3.0, 2.5, 10.0))
    excluded, scan = slow_front_excluded(math.sqrt(0.25), 10_000)
    lams = np.linspace(1.0, 10.0, 101)[1:]
    obst = [fast_front_obstruction(float(l)) for l in lams]
    neg = all(o < 0 for o in obst)
    near = fast_front_obstruction(1.0 + 1e-6)
    ok = g0 and excluded and abs(scan.t - 7.0 / 3.0) < 1e-15 and neg and abs(near) < 1e-4
    detail = (f"G(0,t) = -9 exactly: {g0}; max G on (0,1/t^2), t=7/3: {scan.max_G:.4f} (<0); "
              f"fast obstruction max over 100 samples {max(obst):.2e} (<0); value at 1+1e-6: {near:.1e}")
    return CheckResult(7, "front nonexistence algebra", ok, detail,
                       {"max_G": scan.max_G, "max_obstruction": max(obst), "near_one": near})


def check_oracles() -> CheckResult:
    grid = Grid(30.0, 2048)
    fam = SlowFamily(1.0)
    newton = newton_solve("slow", stationary_exact(1.0, "+", grid), fam, NewtonSettings(report=False)).profile
    shot = tune_stationary(1.0, "+", sample_step=1e-3)
    d_stat = cross_validate(newton, shot.trajectory, x_max=15.0)
    lam = 1.5
    g2 = fast_base_grid(lam)
    base = boussinesq_fast_profile(lam, g2)
    fast = newton_solve("fast", base, FastFamily(0.5, 0.0, lam), NewtonSettings(report=False)).profile
    quad = fast_profile_quadrature(lam, g2.x)
    d_quad = cross_validate(fast, quad)
    d_model = cross_validate(fast, base)
    ok = d_stat < 1e-5 and d_quad < 1e-5 and d_model < 1e-5 and shot.valid_until >= 15.0
    detail = (f"shooting vs Newton on [0,15]: {d_stat:.1e}; s=0 Newton vs Gauss-Legendre quadrature {d_quad:.1e}, "
              f"vs base-wave integrator {d_model:.1e} (all <1e-5)")
    return CheckResult(8, "oracle equivalence", ok, detail,
                       {"stationary": d_stat, "fast_quadrature": d_quad, "fast_base": d_model})


def refinement_factors(order: int, beta: float = 1.0, L: float = 30.0, n0: int = 513, doublings: int = 2):
    res = []
    grid = Grid(L, n0)
    for _ in range(doublings + 1):
        res.append(_sup_abs(*abcd_residual(stationary_exact(beta, "+", grid), order=order)))
        grid = grid.refined()
    return res, [a / b for a, b in zip(res, res[1:])]


def check_refinement() -> CheckResult:
    res2, f2 = refinement_factors(order=2)
    res4, f4 = refinement_factors(order=4)
    ok = all(3.5 <= f <= 4.5 for f in f2)
    detail = (f"3-point stencil factors {', '.join(f'{f:.3f}' for f in f2)} (in [3.5,4.5]); "
              f"default 5-point stencil factors {', '.join(f'{f:.2f}' for f in f4)} (reported)")
    return CheckResult(9, "discretization convergence", ok, detail,
                       {"order2": res2, "order2_factors": f2, "order4": res4, "order4_factors": f4})


def run_all(verbose: bool = True) -> list[CheckResult]:
    results = [check_stationary(), check_kernel(), check_newton_order(), check_slow_branch()[0],
               check_fast_base(), check_fast_branch()[0], check_fronts(), check_oracles(), check_refinement()]
    if verbose:
        for r in results:
            print(r.line())
    return results
