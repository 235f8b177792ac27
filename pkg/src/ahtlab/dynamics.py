"""Time integration of ``dy/dt + (P y) . grad y = 0`` and transport diagnostics.

Classical RK4 with the velocity re-projected at every stage, followed by a
mild exponential mode filter.  Tracer particles, if present, ride along in the
same stages, and the running integral of ``int |u|^2`` is accumulated with the
RK4 weights so that the cost identity can be checked between samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import calculus as calc
from .errors import CflViolation, NonFiniteField, WrongDomain
from .geometry import TORUS, Grid2D, ScalarField, VectorField, interpolate
from .leray import _project_array

CFL_SAFETY = 0.5


def velocity(grid: Grid2D, y: np.ndarray):
    return _project_array(grid, y)


def advection(grid: Grid2D, u: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``(u . grad) y`` componentwise."""
    J = calc.grad(grid, y)
    return np.einsum("b...,ab...->a...", u, J)


def courant_rate(grid: Grid2D, u: np.ndarray) -> float:
    """Courant number per unit time step.

    Torus: ``max|u| / h``.  Polar grids: ``max(|u_r| / dr + |u_theta| m_c / r)``
    with ``m_c`` the ring's angular cutoff (see ``calculus.PolarOps``).
    """
    if grid.kind == TORUS:
        return float(np.max(np.abs(u[0])) / (grid.domain.period / grid.shape[0]) + np.max(np.abs(u[1])) / (grid.domain.period / grid.shape[1]))
    o = calc.ops(grid)
    ur = o.cos * u[0] + o.sin * u[1]
    ut = -o.sin * u[0] + o.cos * u[1]
    rate = np.abs(ur) / grid.dr + np.abs(ut) * (o.cutoff / grid.r)[:, None]
    return float(np.max(rate))


def _energy(grid, v):
    return float(grid.integrate(np.sum(v * v, axis=0)))


@dataclass(frozen=True, eq=False)
class AhtState:
    t: float
    y: VectorField
    u: VectorField
    p: ScalarField
    tracers: np.ndarray | None = None
    dissipated: float = 0.0
    cfl: float = 0.0
    filter_removed: float = 0.0
    steps: int = 0

    @classmethod
    def initial(cls, y: VectorField, tracers=None) -> "AhtState":
        u, p = velocity(y.grid, y.values)
        tr = None if tracers is None else np.array(tracers, dtype=float).reshape(-1, 2)
        return cls(0.0, y, VectorField(y.grid, u), ScalarField(y.grid, p), tr)

    @property
    def grid(self) -> Grid2D:
        return self.y.grid

    def kinetic(self) -> float:
        return _energy(self.grid, self.u.values)


def step(state: AhtState, dt: float, cfl_safety: float = CFL_SAFETY, filtered: bool = True) -> AhtState:
    """One RK4 step of size ``dt`` (negative dt integrates backwards)."""
    if dt == 0.0:
        return state
    grid = state.grid
    rate = courant_rate(grid, state.u.values)
    cfl = abs(dt) * rate
    if cfl > cfl_safety * (1 + 1e-12):
        raise CflViolation(f"Courant number {cfl:.3f} exceeds {cfl_safety}")
    has_tr = state.tracers is not None and len(state.tracers) > 0

    def rhs(y, x, u=None):
        if u is None:
            u, _ = velocity(grid, y)
        dx = interpolate(grid, u, x).T if has_tr else None
        return -advection(grid, u, y), dx, _energy(grid, u)

    y0 = state.y.values
    x0 = state.tracers if has_tr else None
    k1, x1, e1 = rhs(y0, x0, state.u.values)
    k2, x2, e2 = rhs(y0 + 0.5 * dt * k1, x0 + 0.5 * dt * x1 if has_tr else None)
    k3, x3, e3 = rhs(y0 + 0.5 * dt * k2, x0 + 0.5 * dt * x2 if has_tr else None)
    k4, x4, e4 = rhs(y0 + dt * k3, x0 + dt * x3 if has_tr else None)
    y = y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    tracers = x0 + dt / 6.0 * (x1 + 2 * x2 + 2 * x3 + x4) if has_tr else state.tracers
    removed = 0.0
    if filtered:
        before = _energy(grid, y)
        y = calc.mode_filter(grid, y)
        removed = before - _energy(grid, y)
    if not np.all(np.isfinite(y)):
        raise NonFiniteField(f"non-finite values at t = {state.t + dt}")
    u, p = velocity(grid, y)
    return AhtState(
        t=state.t + dt,
        y=VectorField(grid, y),
        u=VectorField(grid, u),
        p=ScalarField(grid, p),
        tracers=tracers,
        dissipated=state.dissipated + dt / 6.0 * (e1 + 2 * e2 + 2 * e3 + e4),
        cfl=cfl,
        filter_removed=state.filter_removed + removed,
        steps=state.steps + 1,
    )


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class TestBattery:
    """Smooth test functions of the field values: bumped monomials and Gaussians."""

    radius: float
    centers: tuple
    width: float
    degree: int = 4

    @classmethod
    def for_field(cls, y: VectorField, seed: int = 0) -> "TestBattery":
        R = 1.25 * max(y.sup(), 1e-12)
        rng = np.random.default_rng(seed)
        ang = rng.uniform(0, 2 * math.pi, 3)
        rad = rng.uniform(0, 0.6 * R, 3)
        centers = tuple((float(r * math.cos(a)), float(r * math.sin(a))) for r, a in zip(rad, ang))
        return cls(R, centers, 0.3 * R)

    @property
    def names(self) -> list:
        mono = [f"bump*y1^{a}*y2^{d - a}" for d in range(self.degree + 1) for a in range(d, -1, -1)]
        return mono + [f"gauss{i}" for i in range(len(self.centers))]

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        """Stack of ``f(y(x))`` for every battery function."""
        z1, z2 = y[0] / self.radius, y[1] / self.radius
        s = np.minimum(z1 * z1 + z2 * z2, 1.0)
        inside = s < 1.0
        bump = np.zeros_like(s)
        bump[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
        out = [bump * z1**a * z2 ** (d - a) for d in range(self.degree + 1) for a in range(d, -1, -1)]
        for c1, c2 in self.centers:
            out.append(np.exp(-((y[0] - c1) ** 2 + (y[1] - c2) ** 2) / (2 * self.width**2)))
        return np.stack(out)


def rearrangement_integrals(y: VectorField, battery: TestBattery) -> np.ndarray:
    return y.grid.integrate(battery.evaluate(y.values))


def rearrangement_drift(state: AhtState, reference: VectorField, battery: TestBattery) -> np.ndarray:
    """``|int f(y_t) - int f(y_0)| / (1 + |int f(y_0)|)`` per battery function."""
    ref = rearrangement_integrals(reference, battery)
    now = rearrangement_integrals(state.y, battery)
    return np.abs(now - ref) / (1.0 + np.abs(ref))


def transport_cost(y: VectorField) -> float:
    """``int |y - x|^2 / 2`` on a bounded domain."""
    grid = y.grid
    if grid.kind == TORUS:
        raise WrongDomain("the transport cost needs a bounded domain")
    d = y.values - np.stack([grid.x1, grid.x2])
    return 0.5 * _energy(grid, d)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    cost: float | None
    kinetic: float
    dissipated: float
    max_drift: float
    y_sup: float
    u_sup: float
    y1_sup: float
    y2_sup: float
    filter_removed: float
    cfl: float
    steps: int
    drifts: tuple = field(default=(), repr=False)

    COLUMNS = ("t", "cost", "kinetic", "dissipated", "max_drift", "y_sup", "u_sup", "y1_sup", "y2_sup", "filter_removed", "cfl", "steps")

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in self.COLUMNS)


def diagnostics(state: AhtState, reference: VectorField, battery: TestBattery) -> DiagnosticsRecord:
    grid = state.grid
    drifts = rearrangement_drift(state, reference, battery)
    y = state.y.values
    return DiagnosticsRecord(
        t=state.t,
        cost=None if grid.kind == TORUS else transport_cost(state.y),
        kinetic=state.kinetic(),
        dissipated=state.dissipated,
        max_drift=float(np.max(drifts)),
        y_sup=state.y.sup(),
        u_sup=state.u.sup(),
        y1_sup=float(np.max(np.abs(y[0]))),
        y2_sup=float(np.max(np.abs(y[1]))),
        filter_removed=state.filter_removed,
        cfl=state.cfl,
        steps=state.steps,
        drifts=tuple(float(d) for d in drifts),
    )


def dissipation_residual(r1: DiagnosticsRecord, r2: DiagnosticsRecord) -> float:
    """``|dJ/dt + int |u|^2|`` between two samples, both terms as interval averages."""
    if r1.cost is None or r2.cost is None:
        raise WrongDomain("the cost identity needs a bounded domain")
    dt = r2.t - r1.t
    return abs((r2.cost - r1.cost) / dt + (r2.dissipated - r1.dissipated) / dt)


def dissipation_ratio(r1: DiagnosticsRecord, r2: DiagnosticsRecord) -> float:
    """Residual relative to the mean of ``int |u|^2`` over the interval (0 if both vanish)."""
    res = dissipation_residual(r1, r2)
    mean_k = (r2.dissipated - r1.dissipated) / (r2.t - r1.t)
    if mean_k <= 0.0:
        return 0.0 if res == 0.0 else math.inf
    return res / mean_k


# ---------------------------------------------------------------------------
# runs


STEADY_TOL = 1e-9


def run(
    state0: AhtState,
    T: float,
    sample_every: float,
    cfl_safety: float = CFL_SAFETY,
    battery: TestBattery | None = None,
    include_initial: bool = False,
    filtered: bool = True,
    steady_tol: float = STEADY_TOL,
    dt_max: float | None = None,
):
    """Integrate to time T; return ``[(state, record), ...]`` at each sample time.

    The step is the largest allowed by the Courant limit, clipped to land on
    sample times.  A state whose velocity has sup norm below ``steady_tol`` is
    steady; the run stops there.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    ref = state0.y
    battery = battery or TestBattery.for_field(ref)
    out = [(state0, diagnostics(state0, ref, battery))] if include_initial else []
    state = state0
    if state.u.sup() <= steady_tol:
        if not out:
            out.append((state0, diagnostics(state0, ref, battery)))
        return out
    n_samples = max(1, int(math.ceil(T / sample_every - 1e-9)))
    targets = [min(T, (i + 1) * sample_every) for i in range(n_samples)]
    for target in targets:
        while state.t < target - 1e-12 * max(1.0, T):
            rate = courant_rate(state.grid, state.u.values)
            dt = target - state.t
            if rate > 0:
                dt = min(dt, cfl_safety / rate)
            if dt_max is not None:
                dt = min(dt, dt_max)
            state = step(state, dt, cfl_safety, filtered)
        out.append((state, diagnostics(state, ref, battery)))
        if state.u.sup() <= steady_tol:
            break
    return out


def replace_tracers(state: AhtState, tracers) -> AhtState:
    return replace(state, tracers=np.array(tracers, dtype=float).reshape(-1, 2))
