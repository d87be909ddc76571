"""Newton's method with exact Jacobians for the slow and fast systems.

Unknowns are stacked as X = (u, eta) over all grid nodes.  Rows belonging
to Dirichlet nodes carry the boundary condition (identity rows), so the
Jacobian is square on the full node set and the converged boundary values
are exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .discretize import DEFAULT_ORDER, Grid, c2_norm, first_derivative, second_derivative
from .model import (
    FastFamily,
    SlowFamily,
    WaveProfile,
    fast_residual,
    slow_residual,
)


class NewtonError(RuntimeError):
    """Base class for solver failures."""


class MaxIterationsError(NewtonError):
    pass


class LinearSolveError(NewtonError):
    pass


class RegimeError(NewtonError):
    """An iterate (or the parameter) left the admissible set."""


class EllipticityError(RegimeError):
    pass


class StagnationError(RegimeError):
    pass


@dataclass(frozen=True)
class NewtonSettings:
    max_iters: int = 25
    residual_tol: float = 1e-10
    step_damping: bool = True
    max_halvings: int = 8
    report: bool = True

    def __post_init__(self):
        if self.max_iters <= 0 or self.residual_tol <= 0 or self.max_halvings < 0:
            raise ValueError("Newton settings must be positive")


@dataclass(frozen=True)
class LinearizationReport:
    smallest_singular_value: float
    translation_residual: float | None = None


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """2x2 block Jacobian; each block is a sparse n x n matrix."""

    blocks: tuple
    grid: Grid

    def matrix(self) -> sp.csc_matrix:
        (a, b), (c, d) = self.blocks
        return sp.bmat([[a, b], [c, d]], format="csc")

    def apply(self, v, z):
        (a, b), (c, d) = self.blocks
        return a @ v + b @ z, c @ v + d @ z

    def free_matrix(self) -> sp.csc_matrix:
        idx = np.flatnonzero(~self.grid.boundary_mask)
        (a, b), (c, d) = self.blocks
        pick = lambda m: m[idx][:, idx]
        return sp.bmat([[pick(a), pick(b)], [pick(c), pick(d)]], format="csc")

    def free_weights(self) -> np.ndarray:
        """Trapezoid weights on free nodes; the half-line Jacobian is symmetric in this inner product."""
        w = self.grid.quadrature_weights[~self.grid.boundary_mask]
        return np.concatenate([w, w])


def _with_boundary_rows(grid: Grid, blocks):
    """Replace Dirichlet rows: row block 1 -> u = 0, row block 2 -> eta = 0."""
    bnd = grid.boundary_mask
    keep = sp.diags((~bnd).astype(float))
    pin = sp.diags(bnd.astype(float))
    (a, b), (c, d) = blocks
    return ((keep @ a + pin).tocsr(), (keep @ b).tocsr()), ((keep @ c).tocsr(), (keep @ d + pin).tocsr())


def jacobian_slow(u, eta, lam: float, beta: float, grid: Grid, order: int = DEFAULT_ORDER) -> BlockOperator:
    """Frechet derivative of slow_residual.

    [[L + eta, -lam t L + lam/(3 beta^2) + u], [-lam L + u, L]]; at lam = 0 this
    is L + [[eta, u], [u, 0]].
    """
    D2 = second_derivative(grid, order=order).matrix
    n = grid.n
    I = sp.identity(n, format="csr")
    L = (I - beta**2 * D2).tocsr()
    t = 1.0 + 1.0 / (3.0 * beta**2)
    u = np.asarray(u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if u.shape != (n,) or eta.shape != (n,):
        raise ValueError("field/grid dimension mismatch")
    blocks = (
        (L + sp.diags(eta), -lam * t * L + sp.diags(lam / (3.0 * beta**2) + u)),
        (-lam * L + sp.diags(u), L),
    )
    return BlockOperator(_with_boundary_rows(grid, blocks), grid)


def jacobian_fast(u, eta, s: float, k: float, lam: float, grid: Grid, order: int = DEFAULT_ORDER) -> BlockOperator:
    """Frechet derivative of fast_residual."""
    D2 = second_derivative(grid, order=order).matrix
    n = grid.n
    u = np.asarray(u, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if u.shape != (n,) or eta.shape != (n,):
        raise ValueError("field/grid dimension mismatch")
    d = 1.0 / 3.0 - (2.0 * k + 1.0) * s
    blocks = (
        (k * s * D2 + sp.diags(1.0 + eta), lam * s * D2 + sp.diags(u - lam)),
        (d * lam * D2 + sp.diags(u - lam), k * s * D2 + sp.identity(n)),
    )
    return BlockOperator(_with_boundary_rows(grid, blocks), grid)


@dataclass(frozen=True)
class SlowSystem:
    """Slow problem with the speed lam as parameter."""

    family: SlowFamily
    grid: Grid
    order: int = DEFAULT_ORDER
    name: str = "slow"

    def residual(self, u, eta, lam):
        return slow_residual(u, eta, lam, self.family.beta, self.grid, self.order)

    def jacobian(self, u, eta, lam):
        return jacobian_slow(u, eta, lam, self.family.beta, self.grid, self.order)

    def dparam(self, u, eta, lam):
        beta, t = self.family.beta, self.family.t
        D2 = second_derivative(self.grid, order=self.order)
        Lu = u - beta**2 * (D2 @ u)
        Le = eta - beta**2 * (D2 @ eta)
        g1 = -t * Le + eta / (3.0 * beta**2)
        g2 = -Lu
        bnd = self.grid.boundary_mask
        g1[bnd] = 0.0
        g2[bnd] = 0.0
        return g1, g2

    def check_regime(self, u, eta, lam):
        if not self.family.ellipticity_gap(lam) > 0:
            raise EllipticityError(f"lam = {lam} violates 1 - lam^2 (1 + 1/(3 beta^2)) > 0")

    def speed(self, lam):
        return lam

    def params(self, lam):
        return self.family.params


@dataclass(frozen=True)
class FastSystem:
    """Fast problem at fixed speed with s as parameter."""

    k: float
    lam: float
    grid: Grid
    order: int = DEFAULT_ORDER
    name: str = "fast"

    def residual(self, u, eta, s):
        return fast_residual(u, eta, s, self.k, self.lam, self.grid, self.order)

    def jacobian(self, u, eta, s):
        return jacobian_fast(u, eta, s, self.k, self.lam, self.grid, self.order)

    def dparam(self, u, eta, s):
        D2 = second_derivative(self.grid, order=self.order)
        uxx, exx = D2 @ u, D2 @ eta
        g1 = self.k * uxx + self.lam * exx
        g2 = -(2.0 * self.k + 1.0) * self.lam * uxx + self.k * exx
        bnd = self.grid.boundary_mask
        g1[bnd] = 0.0
        g2[bnd] = 0.0
        return g1, g2

    def check_regime(self, u, eta, s):
        from .model import fast_ellipticity_gap

        if not fast_ellipticity_gap(s, self.k, self.lam) > 0:
            raise EllipticityError(f"s = {s} lies outside the ellipticity set")
        if np.max(u) >= self.lam:
            raise StagnationError(f"max u = {np.max(u)} reached the wave speed {self.lam}")

    def speed(self, s):
        return self.lam

    def params(self, s):
        return FastFamily(self.k, s, self.lam).params


def make_system(system: str, family, grid: Grid, order: int = DEFAULT_ORDER):
    if system == "slow":
        if not isinstance(family, SlowFamily):
            raise TypeError("slow system needs a SlowFamily")
        return SlowSystem(family, grid, order)
    if system == "fast":
        if not isinstance(family, FastFamily):
            raise TypeError("fast system needs a FastFamily")
        return FastSystem(family.k, family.lam, grid, order)
    raise ValueError(f"unknown system {system!r}")


def _sup(r1, r2) -> float:
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


def _factor(mat):
    try:
        return splu(mat.tocsc())
    except RuntimeError as exc:
        raise LinearSolveError(f"Jacobian factorization failed: {exc}") from exc


def smallest_singular_value(op: BlockOperator, iters: int = 50, seed: int = 0) -> float:
    """Inverse power iteration on J^T J over the free nodes (50-iteration cap)."""
    A = op.free_matrix()
    lu = _factor(A)
    x = np.random.default_rng(seed).standard_normal(A.shape[0])
    x /= np.linalg.norm(x)
    mu = 0.0
    for _ in range(iters):
        y = lu.solve(lu.solve(x, trans="T"))
        mu = float(x @ y)
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm == 0:
            return 0.0
        x = y / nrm
    return 1.0 / np.sqrt(mu) if mu > 0 else 0.0


def translation_residual(system, u, eta, param) -> float:
    """|J (U')| / ||U||_{C^2} on the mirrored full-line grid."""
    g = system.grid
    if g.symmetry == "even-half-line":
        gf = Grid(g.half_length, 2 * g.n - 1, "full-line")
        u = np.concatenate([u[:0:-1], u])
        eta = np.concatenate([eta[:0:-1], eta])
        sysf = _rebuild(system, gf)
    else:
        gf, sysf = g, system
    D1 = first_derivative(gf, order=sysf.order)
    v, z = D1 @ u, D1 @ eta
    r1, r2 = sysf.jacobian(u, eta, param).apply(v, z)
    scale = max(c2_norm(u, gf, sysf.order), c2_norm(eta, gf, sysf.order))
    return _sup(r1, r2) / scale if scale > 0 else 0.0


def _rebuild(system, grid: Grid):
    if isinstance(system, SlowSystem):
        return SlowSystem(system.family, grid, system.order)
    return FastSystem(system.k, system.lam, grid, system.order)


@dataclass(eq=False)
class NewtonResult:
    profile: WaveProfile
    report: LinearizationReport | None
    iterations: int
    history: list = field(default_factory=list)

    @property
    def residual(self) -> float:
        return self.history[-1]


def newton_iterate(system, u, eta, param, settings: NewtonSettings):
    """Core Newton loop; returns (u, eta, iterations, residual history)."""
    u = np.array(u, dtype=float)
    eta = np.array(eta, dtype=float)
    n = system.grid.n
    system.check_regime(u, eta, param)
    r1, r2 = system.residual(u, eta, param)
    res = _sup(r1, r2)
    if not np.isfinite(res):
        raise NewtonError("initial residual is not finite")
    history = [res]
    for it in range(1, settings.max_iters + 1):
        if res <= settings.residual_tol:
            return u, eta, it - 1, history
        J = system.jacobian(u, eta, param).matrix()
        lu = _factor(J)
        delta = lu.solve(-np.concatenate([r1, r2]))
        if not np.all(np.isfinite(delta)):
            raise LinearSolveError("Newton step is not finite")
        du, de = delta[:n], delta[n:]
        step = 1.0
        for _ in range(settings.max_halvings + 1):
            un, en = u + step * du, eta + step * de
            try:
                system.check_regime(un, en, param)
                q1, q2 = system.residual(un, en, param)
                new = _sup(q1, q2)
            except StagnationError:
                if not settings.step_damping:
                    raise
                new = np.inf
            if not settings.step_damping or new < res:
                break
            step *= 0.5
        else:
            if not np.isfinite(new):
                raise StagnationError(f"every damped step reached u >= {system.speed(param)}")
        u, eta, r1, r2, res = un, en, q1, q2, new
        history.append(res)
        # rounding floor: step no longer changes the iterate
        if res > settings.residual_tol and np.max(np.abs(step * delta)) <= 1e-14 * max(1.0, np.max(np.abs(u))):
            break
    if res <= settings.residual_tol:
        return u, eta, len(history) - 1, history
    raise MaxIterationsError(
        f"Newton did not reach {settings.residual_tol:g} in {settings.max_iters} iterations "
        f"(last residual {res:.3e})"
    )


def newton_solve(system: str, initial: WaveProfile, family, settings: NewtonSettings | None = None,
                 order: int = DEFAULT_ORDER) -> NewtonResult:
    """Solve the slow (parameter lam = initial.lam) or fast (parameter family.s) system."""
    settings = settings or NewtonSettings()
    if initial.grid.symmetry != "even-half-line":
        raise ValueError("newton_solve works on the even half-line (translation mode removed by symmetry)")
    sysm = make_system(system, family, initial.grid, order)
    param = initial.lam if system == "slow" else family.s
    u, eta, iters, history = newton_iterate(sysm, initial.u, initial.eta, param, settings)
    lam = initial.lam if system == "slow" else family.lam
    prof = WaveProfile(initial.grid, u, eta, lam, sysm.params(param), {"system": system, "param": param})
    report = None
    if settings.report:
        op = sysm.jacobian(u, eta, param)
        report = LinearizationReport(smallest_singular_value(op), translation_residual(sysm, u, eta, param))
    return NewtonResult(prof, report, iters, history)
