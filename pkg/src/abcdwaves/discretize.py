"""Grids, finite-difference operators and the solve for L = 1 - beta^2 d^2/dx^2.

Fields live either on an even half-line grid ``x_j = j h`` (evenness about
x = 0 is encoded by reflecting ghost points) or on a full-line grid
``x_j = -L + j h``.  The far end(s) carry a homogeneous Dirichlet condition,
imposed with odd ghost reflection so the operator stays banded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

EVEN = "even-half-line"
FULL = "full-line"

NEUMANN_DIRICHLET = "neumann-dirichlet"
DIRICHLET_BOTH = "dirichlet-both"

DEFAULT_ORDER = 4

_D2_STENCILS = {
    2: (np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0])),
    4: (np.array([-2, -1, 0, 1, 2]), np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0),
}
_D1_STENCILS = {
    2: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    4: (np.array([-2, -1, 1, 2]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, L] (even half-line) or [-L, L] (full line)."""

    half_length: float
    n: int
    symmetry: str = EVEN

    def __post_init__(self):
        if self.symmetry not in (EVEN, FULL):
            raise ValueError(f"unknown grid symmetry {self.symmetry!r}")
        if self.n < 16:
            raise ValueError("grid needs at least 16 points")
        if not (self.half_length > 0 and np.isfinite(self.half_length)):
            raise ValueError("half_length must be positive and finite")

    @property
    def h(self) -> float:
        span = self.half_length if self.symmetry == EVEN else 2.0 * self.half_length
        return span / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        start = 0.0 if self.symmetry == EVEN else -self.half_length
        return start + self.h * np.arange(self.n)

    @property
    def default_bc(self) -> str:
        return NEUMANN_DIRICHLET if self.symmetry == EVEN else DIRICHLET_BOTH

    @property
    def boundary_mask(self) -> np.ndarray:
        """True at Dirichlet nodes."""
        mask = np.zeros(self.n, dtype=bool)
        mask[-1] = True
        if self.symmetry == FULL:
            mask[0] = True
        return mask

    @property
    def quadrature_weights(self) -> np.ndarray:
        """Trapezoid weights for integrals over the whole real line."""
        w = np.full(self.n, self.h)
        if self.symmetry == EVEN:
            # even extension: node 0 counted once, every other node twice
            w *= 2.0
            w[0] = self.h
            w[-1] = self.h
        else:
            w[0] = w[-1] = 0.5 * self.h
        return w

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.half_length, factor * (self.n - 1) + 1, self.symmetry)

    def with_half_length(self, half_length: float, keep_spacing: bool = True) -> "Grid":
        if not keep_spacing:
            return Grid(half_length, self.n, self.symmetry)
        span = half_length if self.symmetry == EVEN else 2.0 * half_length
        n = int(round(span / self.h)) + 1
        return Grid(half_length, n, self.symmetry)


@dataclass(frozen=True)
class DiscreteOperator:
    """Sparse banded matrix acting on all grid nodes plus its closure metadata.

    Rows at Dirichlet nodes are built with the same odd ghost reflection as
    the interior; solvers replace them by the boundary condition itself.
    """

    matrix: sp.csr_matrix
    grid: Grid
    bc: str
    order: int
    free: np.ndarray = field(repr=False)

    @property
    def bandwidth(self) -> int:
        coo = self.matrix.tocoo()
        return int(np.max(np.abs(coo.row - coo.col))) if coo.nnz else 0

    def __matmul__(self, f):
        return self.matrix @ f

    def free_block(self) -> sp.csr_matrix:
        idx = np.flatnonzero(self.free)
        return self.matrix[idx][:, idx]


def _check_bc(grid: Grid, bc: str | None) -> str:
    bc = grid.default_bc if bc is None else bc
    if (grid.symmetry, bc) not in ((EVEN, NEUMANN_DIRICHLET), (FULL, DIRICHLET_BOTH)):
        raise ValueError(f"boundary closure {bc!r} is not supported on a {grid.symmetry} grid")
    return bc


def _reflect(grid: Grid, j: np.ndarray, parity_at_zero: int):
    """Map stencil indices outside [0, n-1] back inside; return (index, sign)."""
    n = grid.n
    sign = np.ones_like(j, dtype=float)
    j = j.copy()
    low = j < 0
    if grid.symmetry == EVEN:
        j[low] = -j[low]
        sign[low] = parity_at_zero
    else:
        j[low] = -j[low]
        sign[low] = -1.0
    high = j > n - 1
    j[high] = 2 * (n - 1) - j[high]
    sign[high] = -1.0
    return j, sign


def _assemble(grid: Grid, offsets, weights, scale, parity_at_zero: int) -> sp.csr_matrix:
    n = grid.n
    rows, cols, vals = [], [], []
    i = np.arange(n)
    for off, w in zip(offsets, weights):
        j, sign = _reflect(grid, i + off, parity_at_zero)
        rows.append(i)
        cols.append(j)
        vals.append(sign * w * scale)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    mat = mat.tocsr()
    mat.sum_duplicates()
    mat.eliminate_zeros()
    return mat


def second_derivative(grid: Grid, bc: str | None = None, order: int = DEFAULT_ORDER) -> DiscreteOperator:
    """Centered second difference (3-point for order 2, 5-point for order 4).

    Evenness at x = 0 is imposed by ghost reflection f(-x_j) = f(x_j); the
    Dirichlet end(s) by odd reflection about the boundary node.
    """
    bc = _check_bc(grid, bc)
    if order not in _D2_STENCILS:
        raise ValueError(f"unsupported stencil order {order}")
    offsets, weights = _D2_STENCILS[order]
    mat = _assemble(grid, offsets, weights, 1.0 / grid.h**2, parity_at_zero=+1)
    return DiscreteOperator(mat, grid, bc, order, ~grid.boundary_mask)


def first_derivative(grid: Grid, parity: int = +1, order: int = DEFAULT_ORDER) -> sp.csr_matrix:
    """Centered first difference for a field of given parity about x = 0.

    ``parity`` only matters on the half-line grid (+1 even, -1 odd).  Beyond
    the Dirichlet end the field is continued oddly, which is exact to the
    tail tolerance for decaying fields.
    """
    if order not in _D1_STENCILS:
        raise ValueError(f"unsupported stencil order {order}")
    offsets, weights = _D1_STENCILS[order]
    return _assemble(grid, offsets, weights, 1.0 / grid.h, parity_at_zero=parity)


def derivative(f: np.ndarray, grid: Grid, parity: int = +1, order: int = DEFAULT_ORDER) -> np.ndarray:
    return first_derivative(grid, parity, order) @ np.asarray(f, dtype=float)


def green_function(x, beta: float) -> np.ndarray:
    """Kernel of L^{-1} on the real line, exp(-|x|/beta) / (2 beta)."""
    return np.exp(-np.abs(np.asarray(x, dtype=float)) / beta) / (2.0 * beta)


def helmholtz_operator(grid: Grid, beta: float, order: int = DEFAULT_ORDER) -> sp.csr_matrix:
    """Matrix of I - beta^2 D2 on all nodes (Dirichlet rows left as assembled)."""
    d2 = second_derivative(grid, order=order)
    return (sp.identity(grid.n, format="csr") - beta**2 * d2.matrix).tocsr()


def solve_L(grid: Grid, beta: float, rhs, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Return L^{-1} rhs with the grid's closure; zero at Dirichlet nodes."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (grid.n,):
        raise ValueError(f"rhs has shape {rhs.shape}, grid has {grid.n} nodes")
    free = ~grid.boundary_mask
    A = helmholtz_operator(grid, beta, order)
    idx = np.flatnonzero(free)
    A = A[idx][:, idx].todia()
    half_bw = order // 2
    ab = np.zeros((2 * half_bw + 1, idx.size))
    for off, diag in zip(A.offsets, A.data):
        # dia storage: data[k, j] = A[j - off, j]
        ab[half_bw - off, :] = diag
    out = np.zeros(grid.n)
    try:
        out[idx] = solve_banded((half_bw, half_bw), ab, rhs[idx])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - I - beta^2 D2 is an M-matrix-like SPD shift
        raise RuntimeError("banded factorization of L failed") from exc
    return out


def convolve_green(grid: Grid, beta: float, rhs) -> np.ndarray:
    """Trapezoid convolution G * rhs; a cheap cross-check of solve_L (O(h^2) at the kink)."""
    x = grid.x
    rhs = np.asarray(rhs, dtype=float)
    if grid.symmetry == EVEN:
        xs = np.concatenate([-x[:0:-1], x])
        fs = np.concatenate([rhs[:0:-1], rhs])
    else:
        xs, fs = x, rhs
    w = np.full(xs.size, grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    K = green_function(x[:, None] - xs[None, :], beta)
    return K @ (w * fs)


def decay_rate(field, grid: Grid) -> float:
    """Least-squares slope of log|field| over the last 25% of the grid minus the final 5%."""
    field = np.asarray(field, dtype=float)
    n = grid.n
    lo, hi = int(0.75 * n), int(0.95 * n)
    window = field[lo:hi]
    x = grid.x[lo:hi]
    if grid.symmetry == FULL and x.size and x[0] < 0:
        raise ValueError("decay window must lie on the positive axis")
    if not (np.all(window > 0) or np.all(window < 0)):
        raise ValueError("field changes sign (or vanishes) in the decay-fit window")
    slope, _ = np.polyfit(x, np.log(np.abs(window)), 1)
    return float(slope)


def c2_norm(f, grid: Grid, order: int = DEFAULT_ORDER) -> float:
    """max(|f|, |f'|, |f''|) on the grid, the discrete stand-in for the Hoelder norm."""
    f = np.asarray(f, dtype=float)
    d1 = first_derivative(grid, +1, order) @ f
    d2 = second_derivative(grid, order=order) @ f
    interior = ~grid.boundary_mask
    return float(max(np.max(np.abs(f)), np.max(np.abs(d1[interior])), np.max(np.abs(d2[interior]))))
