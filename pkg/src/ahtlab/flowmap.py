"""Particle paths: ODE integration through stored snapshots and the Taylor flow map."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientOrder, LeftDomain
from .geometry import ANNULUS, DISK, interpolate

EXIT_SLACK = 1e-6


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray  # (n_t,)
    points: np.ndarray  # (n_t, n, 2)
    error_estimate: float
    dt: float

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]


def _lagrange_weights(ts: np.ndarray, t: float) -> np.ndarray:
    w = np.ones(len(ts))
    for i in range(len(ts)):
        for j in range(len(ts)):
            if i != j:
                w[i] *= (t - ts[j]) / (ts[i] - ts[j])
    return w


class _SnapshotVelocity:
    """Cubic-in-time interpolation of stored velocity fields."""

    def __init__(self, snapshots):
        if len(snapshots) < 2:
            raise ValueError("at least two snapshots are needed")
        self.grid = snapshots[0].grid
        self.times = np.array([s.t for s in snapshots], dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must increase")
        self.fields = np.stack([s.u.values for s in snapshots])

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        n = len(self.times)
        i = int(np.clip(np.searchsorted(self.times, t) - 2, 0, max(n - 4, 0)))
        sel = slice(i, min(i + 4, n))
        w = _lagrange_weights(self.times[sel], t)
        u = np.tensordot(w, self.fields[sel], axes=1)
        return interpolate(self.grid, u, x).T


def _check_inside(grid, x: np.ndarray):
    d = grid.domain
    if d.kind == DISK:
        out = np.hypot(x[:, 0], x[:, 1]) > d.radius * (1 + EXIT_SLACK)
    elif d.kind == ANNULUS:
        r = np.hypot(x[:, 0], x[:, 1])
        out = (r > d.r_out * (1 + EXIT_SLACK)) | (r < d.r_in * (1 - EXIT_SLACK))
    else:
        return
    if np.any(out):
        raise LeftDomain(f"{int(np.sum(out))} particle(s) left the domain")


def _rk4_path(vel, x0, t0, T, n_steps):
    dt = (T - t0) / n_steps
    x = x0.copy()
    times = [t0]
    pts = [x.copy()]
    t = t0
    for _ in range(n_steps):
        k1 = vel(t, x)
        k2 = vel(t + dt / 2, x + dt / 2 * k1)
        k3 = vel(t + dt / 2, x + dt / 2 * k2)
        k4 = vel(t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (len(times)) * dt
        _check_inside(vel.grid, x)
        times.append(t)
        pts.append(x.copy())
    return np.array(times), np.stack(pts), dt


def integrate_trajectory(snapshots, x0, T: float | None = None, dt: float | None = None, tol: float = 1e-8, max_refinements: int = 6) -> Trajectory:
    """RK4 paths ``dx/dt = u(t, x)`` through snapshot velocities.

    Starts at the first snapshot's time and ends at T (default: the last
    snapshot).  The step is halved until the endpoint changes by at most
    ``tol`` (relative to the largest displacement); the final difference is
    reported as ``error_estimate``.
    """
    vel = _SnapshotVelocity(snapshots)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    _check_inside(vel.grid, x0)
    t0 = float(vel.times[0])
    T = float(vel.times[-1]) if T is None else float(T)
    if not vel.times[0] <= T <= vel.times[-1] + 1e-12:
        raise ValueError("T must lie within the snapshot times")
    if T == t0:
        return Trajectory(np.array([t0]), x0[None].copy(), 0.0, 0.0)
    if dt is None:
        dt = float(np.min(np.diff(vel.times)))
    n = max(1, int(math.ceil((T - t0) / dt - 1e-9)))
    times, pts, h = _rk4_path(vel, x0, t0, T, n)
    err = math.inf
    for _ in range(max_refinements):
        t2, p2, h2 = _rk4_path(vel, x0, t0, T, 2 * n)
        scale = max(float(np.max(np.abs(p2[-1] - x0))), 1e-300)
        err = float(np.max(np.abs(p2[-1] - pts[-1])))
        times, pts, h, n = t2, p2, h2, 2 * n
        if err <= tol * scale:
            break
    return Trajectory(times, pts, err, h)


@dataclass(frozen=True, eq=False)
class TaylorFlow:
    """``Phi(t, x0) ~ x0 + sum_{j <= K} D^j u(x0) t^(j+1) / (j+1)!``."""

    x0: np.ndarray  # (n, 2)
    coefficients: tuple  # D^j u(x0) / (j+1)!, j = 0..K

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, t: float) -> np.ndarray:
        out = self.x0.copy()
        tp = t
        for c in self.coefficients:
            out = out + c * tp
            tp *= t
        return out


def taylor_flow(derivs, x0, K: int) -> TaylorFlow:
    """Truncated Taylor series of the flow map from a ladder of ``D^j u``."""
    if K < 0:
        raise ValueError("K must be non-negative")
    if K > derivs.K:
        raise InsufficientOrder(f"order {K} needs D^{K} u; ladder stops at {derivs.K}")
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    coefs = tuple(derivs.at(j, x0) / math.factorial(j + 1) for j in range(K + 1))
    return TaylorFlow(x0, coefs)


def radius_estimate(norms, floor: float = 1e-13) -> float:
    """Empirical radius from a least-squares fit of ``log(|D^k u| / k!)`` against k.

    Levels 0 and 1 and norms below ``floor`` are left out; with fewer than two
    usable levels (for example a steady state) the radius is infinite.
    """
    ks = [k for k, v in enumerate(norms) if k >= 2 and v > floor]
    if len(ks) < 2:
        return math.inf
    logs = [math.log(norms[k]) - math.lgamma(k + 1) for k in ks]
    slope = np.polyfit(ks, logs, 1)[0]
    return float(math.exp(-slope))
