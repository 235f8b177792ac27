"""Differentiation operators and mode filters.

Torus grids use exact spectral differentiation.  Polar grids use spectral
differentiation in angle and fourth-order centred finite differences in
radius (one-sided near boundary circles, parity-reflected across the disk
centre).  Derivative stacks put the new derivative index right after the
leading component axes, so the Jacobian of a vector field is
``J[a, b] = d f_a / d x_b``.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .geometry import DISK, Grid2D


def fornberg_weights(x0, xs, m):
    """Finite-difference weights for the ``m``-th derivative at ``x0``.

    Works with floats or ``fractions.Fraction`` inputs (exact weights).
    """
    n = len(xs)
    c = [[0 * x0 for _ in range(m + 1)] for _ in range(n)]
    c1 = 1 + 0 * x0
    c4 = xs[0] - x0
    c[0][0] = 1 + 0 * x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1 + 0 * x0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 = c2 * c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for k in range(mn, 0, -1):
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3
            c[j][0] = c4 * c[j][0] / c3
        c1 = c2
    return [c[i][m] for i in range(n)]


def _radial_matrix(r: np.ndarray, h: float, disk: bool, parity: float) -> np.ndarray:
    """Fourth-order first-derivative matrix on a uniform radial grid."""
    n = len(r)
    D = np.zeros((n, n))
    for j in range(n):
        if disk:
            lo, hi = j - 2, j + 2
            if hi > n - 1:
                lo, hi = n - 5, n - 1
        else:
            lo, hi = max(0, min(j - 2, n - 5)), 0
            hi = lo + 4
        offs = np.arange(lo, hi + 1)
        w = fornberg_weights(0.0, [float(o - j) for o in offs], 1)
        for o, wk in zip(offs, w):
            if o >= 0:
                D[j, o] += wk / h
            else:
                # ghost node at -r_{-o-1} carries the value of node -o-1 rotated by pi
                D[j, -o - 1] += parity * wk / h
    return D


class PolarOps:
    def __init__(self, grid: Grid2D):
        self.grid = grid
        nr, nt = grid.shape
        self.nr, self.nt = nr, nt
        self.m = np.arange(nt // 2 + 1)
        self.disk = grid.kind == DISK
        if self.disk:
            self.D_even = _radial_matrix(grid.r, grid.dr, True, 1.0)
            self.D_odd = _radial_matrix(grid.r, grid.dr, True, -1.0)
        else:
            self.D_even = self.D_odd = _radial_matrix(grid.r, grid.dr, False, 1.0)
        self.ik = 1j * self.m.astype(float)
        self.ik[-1] = 0.0
        self.cos = np.cos(grid.theta)
        self.sin = np.sin(grid.theta)
        self.inv_r = (1.0 / grid.r)[:, None]
        # Highest angular mode each ring can carry at the radial resolution:
        # arc spacing r * pi / m_c matches dr.  Never below 3, never above Nyquist.
        self.cutoff = np.clip(math.pi * grid.r / grid.dr, 3.0, float(self.m[-1]))

    def polar_partials(self, values):
        """Return ``(d/dr, d/dtheta)`` of ``(..., Nr, Ntheta)`` data."""
        F = np.fft.rfft(values, axis=-1)
        Fr = np.empty_like(F)
        Fr[..., :, 0::2] = np.einsum("ij,...jm->...im", self.D_even, F[..., :, 0::2])
        Fr[..., :, 1::2] = np.einsum("ij,...jm->...im", self.D_odd, F[..., :, 1::2])
        fr = np.fft.irfft(Fr, n=self.nt, axis=-1)
        ft = np.fft.irfft(F * self.ik, n=self.nt, axis=-1)
        return fr, ft

    def partials(self, values):
        fr, ft = self.polar_partials(values)
        ft = ft * self.inv_r
        return fr * self.cos - ft * self.sin, fr * self.sin + ft * self.cos

    def filter(self, values, strength=36.0, order=36):
        """Exponential filter in angle; near the disk centre the cutoff shrinks with r."""
        F = np.fft.rfft(values, axis=-1)
        kappa = np.minimum(self.m[None, :] / self.cutoff[:, None], 1.0)
        F *= np.exp(-strength * kappa**order)
        return np.fft.irfft(F, n=self.nt, axis=-1)


class TorusOps:
    def __init__(self, grid: Grid2D):
        self.grid = grid
        n1, n2 = grid.shape
        scale = 2 * math.pi / grid.domain.period
        k1 = np.fft.fftfreq(n1, d=1.0 / n1) * scale
        k2 = np.arange(n2 // 2 + 1) * scale
        k1[n1 // 2] = 0.0
        k2[-1] = 0.0
        self.k1 = k1[:, None]
        self.k2 = k2[None, :]
        self.ksq = self.k1**2 + self.k2**2
        kap1 = np.abs(np.fft.fftfreq(n1, d=1.0 / n1)) / (n1 // 2)
        kap2 = np.arange(n2 // 2 + 1) / (n2 // 2)
        self.kappa = (kap1[:, None], kap2[None, :])

    def fft(self, values):
        return np.fft.rfft2(values, axes=(-2, -1))

    def ifft(self, F):
        return np.fft.irfft2(F, s=self.grid.shape, axes=(-2, -1))

    def partials(self, values):
        F = self.fft(values)
        return self.ifft(1j * self.k1 * F), self.ifft(1j * self.k2 * F)

    def filter(self, values, strength=36.0, order=36):
        sig = np.exp(-strength * self.kappa[0] ** order) * np.exp(-strength * self.kappa[1] ** order)
        return self.ifft(self.fft(values) * sig)


@lru_cache(maxsize=32)
def _ops_for(key):
    domain, res = key
    from .geometry import make_grid

    g = make_grid(domain, res)
    return PolarOps(g) if g.is_polar else TorusOps(g)


def ops(grid: Grid2D):
    return _ops_for(grid.key)


def grad(grid: Grid2D, values: np.ndarray) -> np.ndarray:
    """Gradient stack: ``(..., N1, N2) -> (..., 2, N1, N2)``."""
    d1, d2 = ops(grid).partials(values)
    return np.stack([d1, d2], axis=-3)


def jacobian(grid: Grid2D, v: np.ndarray) -> np.ndarray:
    return grad(grid, v)


def div(grid: Grid2D, v: np.ndarray) -> np.ndarray:
    d1, _ = ops(grid).partials(v[0])
    _, d2 = ops(grid).partials(v[1])
    return d1 + d2


def curl(grid: Grid2D, v: np.ndarray) -> np.ndarray:
    """Scalar curl ``d1 v2 - d2 v1`` (the (2,1) entry of the antisymmetric gradient)."""
    _, d2 = ops(grid).partials(v[0])
    d1, _ = ops(grid).partials(v[1])
    return d1 - d2


def laplacian(grid: Grid2D, f: np.ndarray) -> np.ndarray:
    return div(grid, grad(grid, f))


def perp_grad(grid: Grid2D, psi: np.ndarray) -> np.ndarray:
    """``(-d2 psi, d1 psi)``: divergence-free, with curl equal to the Laplacian of psi."""
    d1, d2 = ops(grid).partials(psi)
    return np.stack([-d2, d1])


def mode_filter(grid: Grid2D, values: np.ndarray, strength=36.0, order=36) -> np.ndarray:
    """Exponential filter on the top Fourier modes (angular modes on polar grids)."""
    return ops(grid).filter(values, strength, order)


def tangential_derivative(grid: Grid2D, trace: np.ndarray) -> np.ndarray:
    """Arc-length derivative of a boundary trace ``(nb, Ntheta)``."""
    m = np.arange(grid.shape[1] // 2 + 1) * 1.0j
    m[-1] = 0.0
    d = np.fft.irfft(np.fft.rfft(trace, axis=-1) * m, n=grid.shape[1], axis=-1)
    return d / np.asarray(grid.boundary_radii)[:, None]


def surrogate_norm(grid: Grid2D, v: np.ndarray) -> float:
    """Discrete stand-in for the C^{1,alpha} norm: sup|v| + sup|grad v|.

    Pointwise Euclidean norm for vectors and Frobenius norm for the gradient.
    """
    v = np.asarray(v)
    g = grad(grid, v)
    if v.ndim == 2:
        return float(np.max(np.abs(v)) + np.max(np.sqrt(np.sum(g**2, axis=0))))
    return float(np.max(np.sqrt(np.sum(v**2, axis=0))) + np.max(np.sqrt(np.sum(g**2, axis=(0, 1)))))
