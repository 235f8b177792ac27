"""Leray projection and reconstruction of a field from div, curl, normal trace and periods.

The torus versions are spectral.  On the disk and annulus the potentials come
from the polar solvers in ``elliptic`` and are differentiated with the same
fourth-order operators as everything else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import calculus as calc
from .elliptic import COMPAT_TOL, solve_dirichlet_array, solve_neumann_array, solve_periodic_poisson_array
from .errors import IncompatibleData
from .geometry import ANNULUS, TORUS, Grid2D, ScalarField, VectorField, circulations


def projection_tolerance(grid: Grid2D) -> float:
    """Relative tolerance on ``div P y`` (per unit surrogate norm of y)."""
    if grid.kind == TORUS:
        return 1e-8
    return 50.0 * grid.dr**2


def _project_array(grid: Grid2D, y: np.ndarray):
    if grid.kind == TORUS:
        o = calc.ops(grid)
        Y = o.fft(y)
        kdot = o.k1 * Y[0] + o.k2 * Y[1]
        ksq = np.where(o.ksq == 0, 1.0, o.ksq)
        phat = -1j * kdot / ksq
        phat[..., 0, 0] = 0.0
        u = np.stack([o.ifft(Y[0] - 1j * o.k1 * phat), o.ifft(Y[1] - 1j * o.k2 * phat)])
        return u, o.ifft(phat)
    f = calc.div(grid, y)
    b = np.einsum("bcn,bcn->bn", np.stack([y[:, j, :] for j in grid.boundary_rows]), grid.boundary_normals())
    p = solve_neumann_array(grid, f, b)
    return y - calc.grad(grid, p), p


def leray_project(y: VectorField):
    """Return ``(u, p)`` with ``u = y - grad p`` divergence free and tangent to the boundary."""
    u, p = _project_array(y.grid, y.values)
    return VectorField(y.grid, u), ScalarField(y.grid, p)


def interior_sup(grid: Grid2D, values: np.ndarray) -> float:
    """Sup norm over nodes that are not on a boundary circle."""
    if not grid.is_polar:
        return float(np.max(np.abs(values)))
    keep = np.ones(grid.shape[0], bool)
    keep[list(grid.boundary_rows)] = False
    return float(np.max(np.abs(values[..., keep, :])))


@dataclass(frozen=True, eq=False)
class DivCurlData:
    """Targets for ``div f``, ``curl f``, ``f . n`` and the periods of f.

    On the torus ``c`` holds the two component means; on the annulus the
    circulation around the hole; on the disk it is empty.
    """

    a: ScalarField
    w: ScalarField
    b: np.ndarray = None
    c: np.ndarray = None
    compatibility_residual: float = field(init=False)

    def __post_init__(self):
        grid = self.a.grid
        nb = len(grid.boundary_rows)
        b = np.zeros((nb, grid.shape[1])) if self.b is None else np.asarray(self.b, dtype=float)
        c = np.zeros(grid.domain.n_constraints) if self.c is None else np.atleast_1d(np.asarray(self.c, dtype=float))
        if grid.is_polar and b.shape != (nb, grid.shape[1]):
            raise ValueError(f"normal trace shape {b.shape} does not match the grid")
        if c.shape != (grid.domain.n_constraints,):
            raise ValueError(f"{grid.kind} takes {grid.domain.n_constraints} period constraints, got {c.shape[0]}")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        flux = float(np.sum(b * grid.boundary_line_weights())) if grid.is_polar else 0.0
        object.__setattr__(self, "compatibility_residual", flux - self.a.integral())

    @classmethod
    def of(cls, f: VectorField) -> "DivCurlData":
        """The data of an existing field."""
        grid = f.grid
        if grid.kind == TORUS:
            c = f.component_means()
        else:
            c = circulations(f)
        return cls(ScalarField(grid, calc.div(grid, f.values)), ScalarField(grid, calc.curl(grid, f.values)), f.normal_trace() if grid.is_polar else None, c)

    def scale(self) -> float:
        """Size of the data: area times the sum of sup norms (Euclidean for c)."""
        g = self.a.grid
        return g.domain.area * _data_norm(g, self.a.values, self.w.values, self.b, self.c)


def harmonic_field(grid: Grid2D) -> np.ndarray:
    """Annulus field ``(-x2, x1)/|x|^2``: curl and divergence free, tangent, circulation 2 pi."""
    r2 = grid.x1**2 + grid.x2**2
    return np.stack([-grid.x2 / r2, grid.x1 / r2])


def reconstruct_array(grid: Grid2D, a, w, b, c) -> np.ndarray:
    if grid.kind == TORUS:
        phi = solve_periodic_poisson_array(grid, a - grid.mean(a))
        psi = solve_periodic_poisson_array(grid, w - grid.mean(w))
        f = calc.grad(grid, phi) + calc.perp_grad(grid, psi)
        return f + np.asarray(c)[:, None, None]
    phi = solve_neumann_array(grid, a, b)
    psi = solve_dirichlet_array(grid, w, 0.0)
    f = calc.grad(grid, phi) + calc.perp_grad(grid, psi)
    if grid.kind == ANNULUS:
        have = circulations(VectorField(grid, f))
        f = f + (np.asarray(c)[0] - have[0]) / (2 * math.pi) * harmonic_field(grid)
    return f


def div_curl_reconstruct(data: DivCurlData, compat_tol: float = COMPAT_TOL) -> VectorField:
    """The field ``grad phi + perp grad psi + h`` matching all four pieces of data."""
    grid = data.a.grid
    if grid.is_polar and abs(data.compatibility_residual) > compat_tol * max(data.scale(), 1e-300):
        raise IncompatibleData(f"divergence and normal trace disagree by {data.compatibility_residual:.3e}")
    return VectorField(grid, reconstruct_array(grid, data.a.values, data.w.values, data.b, data.c))


def reconstruction_residuals(f: VectorField, data: DivCurlData) -> dict:
    """Residuals of each constraint (div and curl measured at interior nodes)."""
    grid = f.grid
    out = {
        "div": interior_sup(grid, calc.div(grid, f.values) - data.a.values),
        "curl": interior_sup(grid, calc.curl(grid, f.values) - data.w.values),
        "bc": float(np.max(np.abs(f.normal_trace() - data.b))) if grid.is_polar else 0.0,
    }
    if grid.kind == TORUS:
        out["circ"] = float(np.max(np.abs(f.component_means() - data.c)))
    elif grid.kind == ANNULUS:
        out["circ"] = float(np.max(np.abs(circulations(f) - data.c)))
    else:
        out["circ"] = 0.0
    return out


def _data_norm(grid, a, w, b, c) -> float:
    s = float(np.max(np.abs(a)) + np.max(np.abs(w)) + np.linalg.norm(c))
    if grid.is_polar:
        s += float(np.max(np.abs(b)))
    return s


def estimate_regularity_constant(grid: Grid2D, trials: int = 10, seed: int = 0, gradient_only: bool = False) -> float:
    """Largest observed ``|f|_surr / (|a| + |w| + |b| + |c|)`` over random smooth data.

    Each trial draws a random analytic field f (a gradient when ``gradient_only``),
    takes its data and reconstructs.  Trials with zero data are skipped.
    """
    from .presets import random_smooth, smooth_scalar

    if trials < 10:
        raise ValueError("at least 10 trials are required")
    worst = 0.0
    for t in range(trials):
        if gradient_only:
            phi = smooth_scalar(grid, seed + t, decay=0.5, kmax=3)
            f0 = VectorField(grid, calc.grad(grid, phi))
        else:
            f0 = random_smooth(grid, seed + t, decay=0.5, kmax=3)
        d = DivCurlData.of(f0)
        if gradient_only:
            d = DivCurlData(d.a, ScalarField.zeros(grid), d.b, np.zeros_like(d.c))
        denom = _data_norm(grid, d.a.values, d.w.values, d.b, d.c)
        if denom == 0.0:
            continue
        f = div_curl_reconstruct(d, compat_tol=np.inf)
        worst = max(worst, calc.surrogate_norm(grid, f.values) / denom)
    return worst


def estimate_projector_norm(grid: Grid2D, trials: int = 10, seed: int = 0) -> float:
    """Largest observed ``|P y|_surr / |y|_surr`` over random smooth y (at least 1)."""
    from .presets import random_smooth

    worst = 1.0
    for t in range(trials):
        y = random_smooth(grid, seed + 1000 + t, decay=0.5, kmax=3)
        u, _ = _project_array(grid, y.values)
        worst = max(worst, calc.surrogate_norm(grid, u) / calc.surrogate_norm(grid, y.values))
    return worst
