"""Signed distance to the boundary circles and its derivative tensors.

Near a circle of radius ``a`` the signed distance is ``+-(|x| - a)``, so every
derivative tensor is a derivative of ``|x|``.  Those come from the bivariate
Taylor expansion of ``sqrt((r + h1)^2 + h2^2)`` around ``(r, 0)``, then a
rotation into Cartesian axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import NoBoundary, OutOfCollar
from .geometry import ANNULUS, DISK, TORUS, Domain


def _series_mul(a, b, s):
    """Truncated product of bivariate series (total degree <= s)."""
    out = np.zeros((s + 1, s + 1))
    for i in range(s + 1):
        for j in range(s + 1 - i):
            if a[i, j] == 0.0:
                continue
            out[i:, j:] += a[i, j] * b[: s + 1 - i, : s + 1 - j]
    mask = np.add.outer(np.arange(s + 1), np.arange(s + 1)) <= s
    return out * mask


@lru_cache(maxsize=256)
def _norm_taylor(r: float, s: int) -> np.ndarray:
    """Taylor coefficients ``C[i, j]`` of ``|(r, 0) + (h1, h2)|`` up to total degree s."""
    z = np.zeros((s + 1, s + 1))
    if s >= 1:
        z[1, 0] = 2.0 / r
    if s >= 2:
        z[2, 0] = 1.0 / r**2
        z[0, 2] = 1.0 / r**2
    out = np.zeros((s + 1, s + 1))
    out[0, 0] = 1.0
    power = out.copy()
    coef = 1.0
    for n in range(1, s + 1):
        coef *= (0.5 - (n - 1)) / n
        power = _series_mul(power, z, s)
        out = out + coef * power
    return r * out


@lru_cache(maxsize=256)
def local_tensor(r: float, s: int) -> np.ndarray:
    """``grad^s |x|`` at ``(r, 0)``, i.e. in the (radial, angular) frame."""
    C = _norm_taylor(r, s)
    T = np.empty((2,) * s)
    for idx in product((0, 1), repeat=s):
        j = sum(idx)
        i = s - j
        T[idx] = C[i, j] * math.factorial(i) * math.factorial(j)
    T.setflags(write=False)
    return T


def _rotate(T: np.ndarray, angle: float) -> np.ndarray:
    c, s_ = math.cos(angle), math.sin(angle)
    Q = np.array([[c, -s_], [s_, c]])
    out = T
    for ax in range(T.ndim):
        out = np.moveaxis(np.tensordot(Q, out, axes=([1], [ax])), 0, ax)
    return out


def injective_norm(T: np.ndarray, n_angles: int = 720) -> float:
    """max over unit v of |T{v, ..., v}| for a symmetric 2D tensor."""
    phi = np.linspace(0.0, math.pi, n_angles, endpoint=False)
    V = np.stack([np.cos(phi), np.sin(phi)])
    out = T[..., None] * np.ones(n_angles)
    for _ in range(T.ndim):
        out = np.einsum("i...p,ip->...p", out, V)
    return float(np.max(np.abs(out)))


def _radial_profile_max(s: int, n_angles: int = 4001) -> float:
    """max over unit v of |d^s/dt^s |e_1 + t v|| / s! (the value at r = 1)."""
    c = np.linspace(-1.0, 1.0, n_angles)
    # coefficients of sqrt(1 + 2 c t + t^2) in t, per c
    z = np.zeros((n_angles, s + 1))
    if s >= 1:
        z[:, 1] = 2 * c
    if s >= 2:
        z[:, 2] = 1.0
    out = np.zeros((n_angles, s + 1))
    out[:, 0] = 1.0
    power = out.copy()
    coef = 1.0
    for n in range(1, s + 1):
        coef *= (0.5 - (n - 1)) / n
        nxt = np.zeros_like(power)
        for k in range(s + 1):
            nxt[:, k:] += power[:, [k]] * z[:, : s + 1 - k]
        power = nxt
        out += coef * power
    return float(np.max(np.abs(out[:, s])))


@dataclass(frozen=True)
class SignedDistance:
    """Signed distance to the boundary, negative inside, with its analyticity constant.

    ``c_rho`` is the smallest ``c >= 1`` with ``sup_collar |grad^s rho| <= c^s s!`` for
    all ``1 <= s <= s_max``.  The sup over the collar is attained on its inner
    edge (the tensors scale like ``|x|^(1-s)``).
    """

    domain: Domain
    s_max: int = 8
    c_rho: float = field(init=False)

    def __post_init__(self):
        if self.domain.kind == TORUS:
            object.__setattr__(self, "c_rho", 1.0)
            return
        r_min = min(a - self.domain.collar_width if side > 0 else a for a, side in self.circles)
        c = 1.0
        for s in range(1, self.s_max + 1):
            ratio = r_min ** (1 - s) * _radial_profile_max(s)
            c = max(c, ratio ** (1.0 / s))
        object.__setattr__(self, "c_rho", c * (1 + 1e-9))

    @property
    def circles(self):
        """(radius, side) pairs; side=+1 means the domain lies inside the circle."""
        if self.domain.kind == DISK:
            return [(self.domain.radius, 1)]
        if self.domain.kind == ANNULUS:
            return [(self.domain.r_in, -1), (self.domain.r_out, 1)]
        return []

    def nearest(self, x):
        if self.domain.kind == TORUS:
            raise NoBoundary("the torus has no boundary")
        r = math.hypot(x[0], x[1])
        best = min(self.circles, key=lambda c: abs(r - c[0]))
        if abs(r - best[0]) >= self.domain.collar_width:
            raise OutOfCollar(f"|x| = {r} is outside the boundary collar")
        return r, best

    def value(self, x) -> float:
        r, (a, side) = self.nearest(x)
        return side * (r - a)

    def derivs(self, x, s: int) -> np.ndarray:
        return signed_distance_derivs(self, x, s)

    def boundary_tensor(self, component: int, s: int) -> np.ndarray:
        """grad^s rho on boundary circle ``component`` in the local (r, theta) frame."""
        a, side = self.circles[component]
        return side * local_tensor(float(a), s)


def signed_distance_derivs(sd: SignedDistance, x, s: int) -> np.ndarray:
    """Symmetric s-tensor ``grad^s rho(x)`` in Cartesian axes (s = 0 gives rho)."""
    if s > sd.s_max + 1:
        raise ValueError(f"order {s} above cap {sd.s_max + 1}")
    r, (a, side) = sd.nearest(x)
    if s == 0:
        return np.array(side * (r - a))
    T = side * local_tensor(r, s)
    return _rotate(T, math.atan2(x[1], x[0]))
