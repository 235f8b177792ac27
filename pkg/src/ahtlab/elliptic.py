"""Poisson solvers: periodic (FFT), Neumann and Dirichlet on disk and annulus.

Polar problems are split into angular Fourier modes.  Each mode is a radial
two-point problem for ``p'' + p'/r - m^2 p/r^2`` discretized with fourth-order
stencils (parity ghosts across the disk centre, one-sided near boundary
circles).  Boundary rows are replaced by the data: the radial derivative row
of the gradient operator for Neumann, the identity for Dirichlet.  Because the
Neumann row is the same stencil used by ``calculus.grad``, the normal trace of
``y - grad p`` vanishes to roundoff.  The singular zero mode of the Neumann
problem is closed by a bordered system that pins the mean to zero.  Per-mode
inverses are cached per grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import IncompatibleData, NonzeroMean, WrongDomain
from .calculus import fornberg_weights
from .geometry import DISK, TORUS, Grid2D, ScalarField, make_grid

# Relative Neumann-compatibility level above which the data are rejected.
COMPAT_TOL = 1e-2


def _require_polar(grid: Grid2D):
    if not grid.is_polar:
        raise WrongDomain(f"{grid.kind} grid given to a bounded-domain solver")


def _require_torus(grid: Grid2D):
    if grid.kind != TORUS:
        raise WrongDomain(f"{grid.kind} grid given to the periodic solver")


# ---------------------------------------------------------------------------
# periodic


def solve_periodic_poisson_array(grid: Grid2D, f: np.ndarray) -> np.ndarray:
    from .calculus import ops

    o = ops(grid)
    F = o.fft(f)
    ksq = np.fft.fftfreq(grid.shape[0], d=1.0 / grid.shape[0])[:, None] ** 2 + np.arange(grid.shape[1] // 2 + 1)[None, :] ** 2
    ksq = ksq * (2 * np.pi / grid.domain.period) ** 2
    ksq[0, 0] = 1.0
    P = -F / ksq
    P[..., 0, 0] = 0.0
    return o.ifft(P)


def solve_periodic_poisson(f: ScalarField, rtol: float = 1e-10) -> ScalarField:
    """Zero-mean solution of ``lap phi = f`` on the torus."""
    _require_torus(f.grid)
    scale = max(f.sup(), 1e-300)
    if abs(f.mean()) > rtol * scale:
        raise NonzeroMean(f"mean of the right-hand side is {f.mean():.3e}")
    return ScalarField(f.grid, solve_periodic_poisson_array(f.grid, f.values))


# ---------------------------------------------------------------------------
# polar mode operators


def _stencil_rows(grid: Grid2D, deriv: int, parity: float) -> np.ndarray:
    """Fourth-order radial derivative matrix of order ``deriv``.

    Centred five-point stencils in the interior, parity ghosts across the disk
    centre, one-sided stencils (five points for first, six for second
    derivatives) next to boundary circles.
    """
    r, h = grid.r, grid.dr
    n = len(r)
    width = 5 if deriv == 1 else 6
    D = np.zeros((n, n))
    disk = grid.kind == DISK
    for j in range(n):
        if j + 2 <= n - 1 and (disk or j >= 2):
            offs = range(j - 2, j + 3)
        elif j + 2 > n - 1:
            offs = range(n - width, n)
        else:
            offs = range(0, width)
        w = fornberg_weights(0.0, [float(o - j) for o in offs], deriv)
        for o, wk in zip(offs, w):
            if o >= 0:
                D[j, o] += wk / h**deriv
            else:
                D[j, -o - 1] += parity * wk / h**deriv
    return D


def _mode_matrices(grid: Grid2D, m: int) -> tuple:
    """Interior operator ``d_rr + d_r / r - m^2 / r^2`` and the radial first-derivative matrix."""
    parity = (-1.0) ** m if grid.kind == DISK else 1.0
    D1 = _stencil_rows(grid, 1, parity)
    D2 = _stencil_rows(grid, 2, parity)
    A = D2 + D1 / grid.r[:, None] - np.diag(m * m / grid.r**2)
    return A, D1


@lru_cache(maxsize=32)
def _neumann_inverses(key):
    """Per-mode inverses; mode 0 is bordered by a mean constraint and a shift of f."""
    grid = make_grid(*key)
    nr, nt = grid.shape
    M = nt // 2 + 1
    inv = np.empty((M, nr, nr))
    interior = np.ones(nr)
    interior[list(grid.boundary_rows)] = 0.0
    for m in range(M):
        A, D1 = _mode_matrices(grid, m)
        for row, sign in zip(grid.boundary_rows, grid.boundary_signs):
            A[row] = sign * D1[row]
        if m == 0:
            q = grid.radial_weights
            B = np.zeros((nr + 1, nr + 1))
            B[:nr, :nr] = A
            B[:nr, nr] = interior
            B[nr, :nr] = q / q.sum()
            mode0 = np.linalg.inv(B)
            inv[0] = 0.0
        else:
            inv[m] = np.linalg.inv(A)
    inv.setflags(write=False)
    mode0.setflags(write=False)
    return inv, mode0


@lru_cache(maxsize=32)
def _dirichlet_inverses(key):
    grid = make_grid(*key)
    nr, nt = grid.shape
    inv = np.empty((nt // 2 + 1, nr, nr))
    for m in range(inv.shape[0]):
        A, _ = _mode_matrices(grid, m)
        for row in grid.boundary_rows:
            A[row] = 0.0
            A[row, row] = 1.0
        inv[m] = np.linalg.inv(A)
    inv.setflags(write=False)
    return inv


# ---------------------------------------------------------------------------
# Neumann


@dataclass(frozen=True, eq=False)
class NeumannProblem:
    """Data ``(f, b)`` for ``lap p = f`` in the domain and ``dp/dn = b`` on the boundary."""

    f: ScalarField
    b: np.ndarray
    compatibility_residual: float = field(init=False)

    def __post_init__(self):
        grid = self.f.grid
        _require_polar(grid)
        b = np.asarray(self.b, dtype=float)
        if b.ndim == 0:
            b = np.full((len(grid.boundary_rows), grid.shape[1]), float(b))
        if b.shape != (len(grid.boundary_rows), grid.shape[1]):
            raise ValueError(f"boundary flux shape {b.shape} does not match the grid")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "compatibility_residual", self.flux() - self.f.integral())

    def flux(self) -> float:
        return float(np.sum(self.b * self.f.grid.boundary_line_weights()))

    def scale(self) -> float:
        return float(self.f.grid.integrate(np.abs(self.f.values)) + np.sum(np.abs(self.b) * self.f.grid.boundary_line_weights()))


def solve_neumann_array(grid: Grid2D, f: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Zero-mean discrete Neumann solution; the mean of f is shifted onto the flux."""
    nr, nt = grid.shape
    flux = float(np.sum(b * grid.boundary_line_weights()))
    f = f - grid.mean(f) + flux / grid.domain.area
    inv, mode0 = _neumann_inverses(grid.key)
    F = np.fft.rfft(f, axis=-1)
    Bh = np.fft.rfft(b, axis=-1)
    for row, bh in zip(grid.boundary_rows, Bh):
        F[row] = bh
    P = np.einsum("mij,jm->im", inv, F)
    P[:, 0] = (mode0 @ np.concatenate([F[:, 0], [0.0]]))[:nr]
    return np.fft.irfft(P, n=nt, axis=-1)


def solve_neumann(problem: NeumannProblem, compat_tol: float = COMPAT_TOL) -> ScalarField:
    """Zero-mean p with ``lap p = f`` and ``dp/dn = b``.

    Data whose compatibility residual ``flux - integral(f)`` exceeds
    ``compat_tol`` relative to ``|f|_1 + |b|_1`` are rejected; smaller
    mismatches are absorbed by shifting the mean of f.
    """
    grid = problem.f.grid
    res = abs(problem.compatibility_residual)
    if res > compat_tol * max(problem.scale(), 1e-300):
        raise IncompatibleData(f"Neumann data violate compatibility by {res:.3e}")
    return ScalarField(grid, solve_neumann_array(grid, problem.f.values, problem.b))


# ---------------------------------------------------------------------------
# Dirichlet


def solve_dirichlet_array(grid: Grid2D, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    nt = grid.shape[1]
    inv = _dirichlet_inverses(grid.key)
    F = np.fft.rfft(f, axis=-1)
    g = np.asarray(g, dtype=float)
    if g.ndim == 1 and g.shape[0] == len(grid.boundary_rows) and g.shape[0] != nt:
        g = g[:, None]
    G = np.fft.rfft(np.broadcast_to(g, (len(grid.boundary_rows), nt)), axis=-1)
    for row, gh in zip(grid.boundary_rows, G):
        F[row] = gh
    P = np.einsum("mij,jm->im", inv, F)
    return np.fft.irfft(P, n=nt, axis=-1)


def solve_dirichlet(f: ScalarField, boundary_values=0.0) -> ScalarField:
    """``lap psi = f`` with ``psi = boundary_values`` on every boundary circle."""
    grid = f.grid
    _require_polar(grid)
    return ScalarField(grid, solve_dirichlet_array(grid, f.values, np.asarray(boundary_values, dtype=float)))
