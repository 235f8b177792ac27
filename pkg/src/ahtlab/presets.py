"""Named initial data.  Every preset is fully determined by its parameters."""
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, WrongDomain
from .geometry import TORUS, Grid2D, VectorField


def _waves(grid: Grid2D, seed: int, decay: float, kmax: int, n_waves: int):
    """Random integer wavevectors with amplitudes ``exp(-decay |k|)`` and phases."""
    rng = np.random.default_rng(seed)
    ks = rng.integers(-kmax, kmax + 1, size=(n_waves, 2))
    ks = ks[np.any(ks != 0, axis=1)]
    amp = rng.standard_normal(len(ks)) * np.exp(-decay * np.hypot(ks[:, 0], ks[:, 1]))
    phase = rng.uniform(0.0, 2 * math.pi, len(ks))
    scale = 2 * math.pi / grid.domain.period if grid.kind == TORUS else 1.0
    return ks * scale, amp, phase


def smooth_scalar(grid: Grid2D, seed: int, decay: float = 0.5, kmax: int = 4, n_waves: int = 12):
    """A sum of plane waves: analytic, and periodic on the torus."""
    ks, amp, phase = _waves(grid, seed, decay, kmax, n_waves)
    arg = ks[:, 0, None, None] * grid.x1 + ks[:, 1, None, None] * grid.x2 + phase[:, None, None]
    return np.tensordot(amp, np.cos(arg), axes=1)


def random_smooth(grid: Grid2D, seed: int = 0, decay: float = 0.5, kmax: int = 4, n_waves: int = 12) -> VectorField:
    """Random analytic vector field; unit sup norm."""
    v = np.stack([smooth_scalar(grid, seed, decay, kmax, n_waves), smooth_scalar(grid, seed + 7919, decay, kmax, n_waves)])
    return VectorField(grid, v / np.max(np.hypot(v[0], v[1])))


def gradient_steady(grid: Grid2D, seed: int = 0, amplitude: float = 0.2) -> VectorField:
    """Gradient of an analytic potential (a steady state).

    On bounded domains the potential is ``|x|^2 / 2`` plus a small wave sum, so
    the field stays close to the identity map.
    """
    ks, amp, phase = _waves(grid, seed, 0.5, 3, 8)
    arg = ks[:, 0, None, None] * grid.x1 + ks[:, 1, None, None] * grid.x2 + phase[:, None, None]
    s = -np.sin(arg)
    amp = amplitude * amp / max(np.sum(np.abs(amp) * np.hypot(ks[:, 0], ks[:, 1])), 1e-300)
    g = np.stack([np.tensordot(amp * ks[:, 0], s, axes=1), np.tensordot(amp * ks[:, 1], s, axes=1)])
    if grid.kind != TORUS:
        g = g + np.stack([grid.x1, grid.x2])
    return VectorField(grid, g)


def rotation(grid: Grid2D, angle: float = 0.3, perturb: float = 0.0, seed: int = 0) -> VectorField:
    """The rotated identity ``y = R_angle x`` on a disk or annulus, optionally perturbed.

    The perturbation is ``perturb`` times a unit random smooth field.
    """
    if grid.kind == TORUS:
        raise WrongDomain("the rotation preset needs a bounded domain")
    c, s = math.cos(angle), math.sin(angle)
    y = np.stack([c * grid.x1 - s * grid.x2, s * grid.x1 + c * grid.x2])
    if perturb:
        y = y + perturb * random_smooth(grid, seed, decay=0.5, kmax=3).values
    return VectorField(grid, y)


def rotation_velocity(grid: Grid2D, angle: float = 0.3) -> VectorField:
    """Exact projection of the rotation preset: ``sin(angle) (-x2, x1)``."""
    s = math.sin(angle)
    return VectorField(grid, np.stack([-s * grid.x2, s * grid.x1]))


def ipm_embed(grid: Grid2D, seed: int = 0, decay: float = 0.5) -> VectorField:
    """``y = -(0, rho0)`` for a smooth density ``rho0``."""
    rho = smooth_scalar(grid, seed, decay)
    rho = rho / np.max(np.abs(rho))
    return VectorField(grid, np.stack([np.zeros(grid.shape), -rho]))


PRESETS = {
    "gradient_steady": gradient_steady,
    "rotation": rotation,
    "ipm_embed": ipm_embed,
    "random_smooth": random_smooth,
}


def build(name: str, grid: Grid2D, **params) -> VectorField:
    try:
        fn = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return fn(grid, **params)
