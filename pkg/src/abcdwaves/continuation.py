"""Branch tracing for the slow (parameter lam) and fast (parameter s) families.

Each accepted point carries a DiagnosticsReport.  Branches stop with exactly
one TerminationReason, chosen by ``classify_termination``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .discretize import DEFAULT_ORDER, Grid, c2_norm, decay_rate, derivative
from .model import (
    FastFamily,
    SlowFamily,
    WaveProfile,
    boussinesq_fast_profile,
    fast_base_grid,
    fast_ellipticity_gap,
    fast_s_critical,
    stationary_exact,
)
from .solver import (
    FastSystem,
    NewtonError,
    NewtonSettings,
    SlowSystem,
    StagnationError,
    _factor,
    _sup,
    newton_iterate,
)


class TerminationReason(str, enum.Enum):
    LOSS_OF_ELLIPTICITY = "loss_of_ellipticity"
    STAGNATION_LIMIT = "stagnation_limit"
    BLOWUP = "blowup"
    NODAL_VIOLATION = "nodal_violation"
    NEWTON_FAILURE = "newton_failure_after_refinement"
    PARAMETER_RANGE_EXHAUSTED = "parameter_range_exhausted"


@dataclass(frozen=True)
class Termination:
    reason: TerminationReason
    detail: str = ""


@dataclass(frozen=True)
class DiagnosticsReport:
    param: float
    residual: float
    nodal: dict
    ellipticity_gap: float
    stagnation_gap: float | None
    blowup_N: float
    u0: float
    eta0: float
    decay_rate: float | None = None
    eta_bound: float | None = None

    @property
    def nodal_ok(self) -> bool:
        return all(self.nodal.values())


@dataclass(frozen=True, eq=False)
class BranchPoint:
    profile: WaveProfile
    param: float
    diagnostics: DiagnosticsReport


@dataclass(frozen=True)
class Tolerances:
    gap_tol: float = 1e-3
    stag_tol: float = 1e-3
    N_max: float = 1e6
    nodal_tol: float = 1e-10
    tail_tol: float = 1e-8


@dataclass(frozen=True)
class StepSettings:
    initial_step: float = 0.02
    max_step: float = 0.05
    min_step_factor: float = 1e-8
    grow: float = 1.5
    shrink: float = 0.5
    approach: float = 0.5
    max_points: int = 400
    fold_angle_deg: float = 60.0
    half_length: float | None = None
    n: int | None = None
    order: int = DEFAULT_ORDER
    retruncate: bool = True
    tolerances: Tolerances = field(default_factory=Tolerances)
    newton: NewtonSettings = field(default_factory=lambda: NewtonSettings(report=False))

    def __post_init__(self):
        if not (0 < self.initial_step and 0 < self.max_step and 0 < self.shrink < 1 and self.grow >= 1):
            raise ValueError("invalid step settings")
        if not 0 < self.approach < 1:
            raise ValueError("approach fraction must lie in (0, 1)")


@dataclass(eq=False)
class Branch:
    kind: str
    points: list
    termination: Termination
    info: dict = field(default_factory=dict)

    @property
    def params(self) -> np.ndarray:
        return np.array([p.param for p in self.points])

    @property
    def furthest(self) -> float:
        return float(max(p.param for p in self.points))


# -- diagnostics ---------------------------------------------------------------

def nodal_check(profile: WaveProfile, pattern: str, tol: float = 1e-10) -> dict:
    """Sign and monotonicity flags on an even half-line profile.

    slow: u > 0, eta < 0, u' < 0, eta' > 0 (x > 0)
    fast: u > 0, eta > 0, u' < 0, eta' < 0 (x > 0)
    Values whose size is below ``tol`` (the decayed tail) may not be strictly
    signed, but nothing may have the wrong sign by more than ``tol``; the crest
    values must be strictly signed.
    """
    g = profile.grid
    if g.symmetry != "even-half-line":
        raise ValueError("nodal_check expects an even half-line profile")
    if pattern not in ("slow", "fast"):
        raise ValueError(f"unknown nodal pattern {pattern!r}")
    u, eta = profile.u, profile.eta
    ux = derivative(u, g)
    ex = derivative(eta, g)
    eta_sign = -1.0 if pattern == "slow" else 1.0
    inner = slice(1, g.n - 1)

    def signed(f, sgn):
        return bool(np.all(sgn * f[:-1] > -tol) and sgn * f[0] > tol)

    def monotone(fx, sgn):
        d = sgn * fx[inner]
        return bool(np.all(d > -tol) and np.any(d > tol))

    flags = {
        "u_pos": signed(u, 1.0),
        "eta_neg" if pattern == "slow" else "eta_pos": signed(eta, eta_sign),
        "u_decreasing": monotone(ux, -1.0),
        "eta_increasing" if pattern == "slow" else "eta_decreasing": monotone(ex, -eta_sign),
    }
    return flags


def fast_eta_bound(u0: float, s: float, k: float, lam: float) -> float:
    """Upper bound for eta(0) implied by the eta equation at the crest."""
    d = 1.0 / 3.0 - (2.0 * k + 1.0) * s
    num = d * lam + (lam - 0.5 * u0) * k * s
    den = d * lam * (lam - u0) + k * s
    return num / den * u0


def diagnose(profile: WaveProfile, system, param: float, tol: Tolerances = Tolerances()) -> DiagnosticsReport:
    g = profile.grid
    u, eta = profile.u, profile.eta
    res = _sup(*system.residual(u, eta, param))
    try:
        rate = decay_rate(u, g)
    except ValueError:
        rate = None
    norm = max(c2_norm(u, g, system.order), c2_norm(eta, g, system.order))
    if isinstance(system, SlowSystem):
        gap = system.family.ellipticity_gap(param)
        stag = None
        dist = min(gap, param)
        nodal = nodal_check(profile, "slow", tol.nodal_tol)
        bound = None
    else:
        gap = fast_ellipticity_gap(param, system.k, system.lam)
        stag = float(system.lam - np.max(u))
        dist = min(gap, stag)
        nodal = nodal_check(profile, "fast", tol.nodal_tol)
        bound = fast_eta_bound(float(u[0]), param, system.k, system.lam)
        nodal["eta0_bound"] = bool(eta[0] <= bound + 1e-9 * max(1.0, abs(bound)))
    N = norm + abs(param) + (1.0 / dist if dist > 0 else math.inf)
    return DiagnosticsReport(
        param=float(param), residual=res, nodal=nodal, ellipticity_gap=float(gap),
        stagnation_gap=stag, blowup_N=float(N), u0=float(u[0]), eta0=float(eta[0]),
        decay_rate=rate, eta_bound=bound,
    )


def classify_termination(points, failure: TerminationReason | None = None, detail: str = "",
                         tol: Tolerances = Tolerances()) -> Termination | None:
    """Map a branch history onto one termination reason.

    Precedence: loss_of_ellipticity, stagnation_limit, blowup (all judged at the
    last accepted point; blowup never at the anchor alone), then the failure
    encountered while tracing.  Returns
    None when the branch may continue.
    """
    if not points:
        raise ValueError("classify_termination needs a nonempty branch")
    last = points[-1]
    diag = last.diagnostics if hasattr(last, "diagnostics") else last
    if diag.ellipticity_gap < tol.gap_tol:
        return Termination(TerminationReason.LOSS_OF_ELLIPTICITY,
                           f"ellipticity gap {diag.ellipticity_gap:.3e} < {tol.gap_tol:g} at param {diag.param:.6g}")
    if diag.stagnation_gap is not None and diag.stagnation_gap < tol.stag_tol:
        return Termination(TerminationReason.STAGNATION_LIMIT,
                           f"lam - max u = {diag.stagnation_gap:.3e} < {tol.stag_tol:g} at param {diag.param:.6g}")
    # the anchor sits on the boundary of the parameter set (N = inf at lam = 0); blowup needs a step away from it
    if len(points) > 1 and diag.blowup_N > tol.N_max:
        return Termination(TerminationReason.BLOWUP, f"N = {diag.blowup_N:.3e} > {tol.N_max:g}")
    if failure is not None:
        return Termination(TerminationReason(failure), detail)
    return None


# -- predictor/corrector -----------------------------------------------------------

def _weights(grid: Grid) -> np.ndarray:
    w = grid.quadrature_weights / (2.0 * grid.half_length)
    return np.concatenate([w, w])


def secant_angle(X1, p1, X0, p0, grid: Grid) -> float:
    """Angle (degrees) between the last secant and the parameter axis."""
    dX = np.asarray(X1) - np.asarray(X0)
    nx = math.sqrt(float(_weights(grid) @ dX**2))
    dp = abs(p1 - p0)
    return math.degrees(math.atan2(nx, dp))


def arclength_correct(system, X_pred, p_pred, tX, tp, settings: NewtonSettings):
    """Bordered Newton for F(X, p) = 0, <tX, X - X_pred>_w + tp (p - p_pred) = 0."""
    n = system.grid.n
    w = _weights(system.grid)
    X, p = np.array(X_pred, dtype=float), float(p_pred)
    history = []
    for it in range(settings.max_iters + 1):
        system.check_regime(X[:n], X[n:], p)
        r1, r2 = system.residual(X[:n], X[n:], p)
        res = _sup(r1, r2)
        history.append(res)
        if not np.isfinite(res):
            raise NewtonError("non-finite residual in arclength corrector")
        if res <= settings.residual_tol:
            return X, p, it, history
        J = system.jacobian(X[:n], X[n:], p).matrix()
        g1, g2 = system.dparam(X[:n], X[n:], p)
        col = sp.csc_matrix(np.concatenate([g1, g2])[:, None])
        row = sp.csr_matrix((tX * w)[None, :])
        A = sp.bmat([[J, col], [row, sp.csr_matrix([[tp]])]], format="csc")
        rhs = -np.concatenate([r1, r2, [float((tX * w) @ (X - X_pred)) + tp * (p - p_pred)]])
        delta = _factor(A).solve(rhs)
        X = X + delta[:-1]
        p = p + delta[-1]
    raise NewtonError("arclength corrector did not converge")


def _pad(profile_arrays, grid_old: Grid, grid_new: Grid):
    out = []
    for f in profile_arrays:
        g = np.zeros(grid_new.n)
        g[: grid_old.n] = f
        out.append(g)
    return out


def _trace(kind, system, anchor: WaveProfile, p0: float, p_max: float, p_crit: float,
           settings: StepSettings, make_system, make_profile, info) -> Branch:
    tol = settings.tolerances
    newton = settings.newton
    try:
        u, eta, _, _ = newton_iterate(system, anchor.u, anchor.eta, p0, newton)
    except NewtonError as exc:
        raise RuntimeError(f"initial {kind} solve failed: {exc}") from exc
    prof = make_profile(system.grid, u, eta, p0)
    first = BranchPoint(prof, p0, diagnose(prof, system, p0, tol))
    points = [first]
    info.setdefault("retruncations", [])
    info.setdefault("arclength_steps", 0)
    if not first.diagnostics.nodal_ok:
        return Branch(kind, points, Termination(TerminationReason.NODAL_VIOLATION, "anchor fails nodal pattern"), info)

    step = settings.initial_step
    min_step = settings.min_step_factor * settings.initial_step
    prev_X, prev_p = None, None
    termination = None
    while termination is None:
        last = points[-1]
        n = system.grid.n
        X = np.concatenate([last.profile.u, last.profile.eta])
        p = last.param
        if p >= p_max * (1 - 1e-14):
            termination = Termination(TerminationReason.PARAMETER_RANGE_EXHAUSTED, f"reached param_max = {p_max:g}")
            break
        if len(points) >= settings.max_points:
            termination = Termination(TerminationReason.PARAMETER_RANGE_EXHAUSTED, f"max_points = {settings.max_points} reached")
            break
        ds = min(step, settings.max_step, p_max - p, settings.approach * (p_crit - p))
        p_new = p + ds
        use_arclength = False
        if prev_X is not None:
            slope = (X - prev_X) / (p - prev_p)
            X_pred = X + slope * ds
            use_arclength = secant_angle(X, p, prev_X, prev_p, system.grid) > settings.fold_angle_deg
        else:
            X_pred = X.copy()
        try:
            if use_arclength:
                tX, tp = X - prev_X, p - prev_p
                nrm = math.sqrt(float(_weights(system.grid) @ tX**2) + tp**2)
                tX, tp = tX / nrm, tp / nrm
                arc = math.sqrt(float(_weights(system.grid) @ (X_pred - X) ** 2) + ds**2)
                Xn, pn, _, _ = arclength_correct(system, X + tX * arc, p + tp * arc, tX, tp, newton)
                info["arclength_steps"] += 1
                if not (pn > p) or fast_or_slow_gap(system, pn) <= 0:
                    raise NewtonError("arclength step did not advance inside the ellipticity set")
                p_new = pn
                un, en = Xn[:n], Xn[n:]
            else:
                un, en, _, _ = newton_iterate(system, X_pred[:n], X_pred[n:], p_new, newton)
        except NewtonError as exc:
            step *= settings.shrink
            if step < min_step:
                reason = TerminationReason.NEWTON_FAILURE
                msg = f"step fell below {min_step:.1e} at param {p:.8g}: {exc}"
                if isinstance(exc, StagnationError):
                    msg = "iterates reached u >= lam; " + msg
                termination = classify_termination(points, reason, msg, tol)
            continue
        prof = make_profile(system.grid, un, en, p_new)
        diag = diagnose(prof, system, p_new, tol)
        if not diag.ellipticity_gap > 0:
            step *= settings.shrink
            continue
        if not diag.nodal_ok:
            bad = [k for k, v in diag.nodal.items() if not v]
            termination = classify_termination(
                points, TerminationReason.NODAL_VIOLATION,
                f"converged point at param {p_new:.8g} fails {bad}", tol)
            break
        points.append(BranchPoint(prof, p_new, diag))
        prev_X, prev_p = X, p
        step = min(step * settings.grow, settings.max_step)
        if settings.retruncate and prof.tail_norm() > tol.tail_tol:
            old = system.grid
            new_grid = old.with_half_length(1.5 * old.half_length)
            system = make_system(new_grid)
            u_pad, e_pad = _pad((prof.u, prof.eta), old, new_grid)
            prof = make_profile(new_grid, u_pad, e_pad, p_new)
            points[-1] = BranchPoint(prof, p_new, diag)
            prev_X = np.concatenate(_pad((prev_X[: old.n], prev_X[old.n:]), old, new_grid))
            info["retruncations"].append({"param": p_new, "half_length": new_grid.half_length, "n": new_grid.n})
        termination = classify_termination(points, None, "", tol)
    info["furthest_param"] = float(max(p.param for p in points))
    return Branch(kind, points, termination, info)


def fast_or_slow_gap(system, p) -> float:
    if isinstance(system, SlowSystem):
        return system.family.ellipticity_gap(p)
    return fast_ellipticity_gap(p, system.k, system.lam)


def default_half_length(beta: float | None = None, lam: float | None = None) -> float:
    """30 decay lengths: beta for the slow family, 1/sqrt(3 (1 - lam^-2)) for the fast one."""
    if lam is None:
        return 30.0 * max(beta, 1.0 / math.sqrt(3.0))
    return 30.0 * max(beta or 0.0, 1.0 / math.sqrt(3.0 * (1.0 - 1.0 / lam**2)))


def continue_slow(beta: float, lambda_max: float | None = None, settings: StepSettings | None = None) -> Branch:
    """Trace the slow branch in lam from the stationary wave u0+ at lam = 0."""
    settings = settings or StepSettings()
    fam = SlowFamily(beta)
    lam_crit = fam.critical_speed
    lambda_max = lam_crit if lambda_max is None else min(lambda_max, lam_crit)
    L = settings.half_length or default_half_length(beta=beta)
    grid = Grid(L, settings.n or 2048)
    make_system = lambda g: SlowSystem(fam, g, settings.order)

    def make_profile(g, u, eta, lam):
        return WaveProfile(g, u, eta, lam, fam.params, {"system": "slow", "param": lam})

    anchor = stationary_exact(beta, "+", grid)
    info = {"beta": beta, "lambda_star": lam_crit, "lambda_max": lambda_max}
    return _trace("slow", make_system(grid), anchor, 0.0, lambda_max, lam_crit, settings,
                  make_system, make_profile, info)


def continue_fast(lam: float, k: float, s_max: float | None = None, settings: StepSettings | None = None) -> Branch:
    """Trace the fast branch in s from the classical Boussinesq wave at s = 0."""
    settings = settings or StepSettings(initial_step=0.002, max_step=0.01)
    FastFamily(k, 0.0, lam)  # validates lam > 1, 0 < k < lam
    s_crit = fast_s_critical(k, lam)
    s_max = s_crit if s_max is None else min(s_max, s_crit)
    base = fast_base_grid(lam)
    grid = Grid(settings.half_length or base.half_length, settings.n or base.n)
    make_system = lambda g: FastSystem(k, lam, g, settings.order)

    def make_profile(g, u, eta, s):
        return WaveProfile(g, u, eta, lam, FastFamily(k, s, lam).params, {"system": "fast", "param": s})

    anchor = boussinesq_fast_profile(lam, grid)
    info = {"lam": lam, "k": k, "s_star": s_crit, "s_max": s_max}
    return _trace("fast", make_system(grid), anchor, 0.0, s_max, s_crit, settings,
                  make_system, make_profile, info)
