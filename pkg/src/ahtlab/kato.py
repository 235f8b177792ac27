"""Numeric evaluation of the material-derivative series and the ladder ``D^k u``.

The ladder is built level by level: the series give div, curl, normal trace
and periods of ``D^k u`` in terms of lower levels, and the field itself is
recovered by div-curl reconstruction.  ``fd_oracle`` is an independent check
that differentiates ``u(t, Phi(t, x))`` in time along computed trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import calculus as calc
from . import symbolic as sym
from .distance import local_tensor
from .dynamics import AhtState, step
from .elliptic import solve_neumann_array, solve_periodic_poisson_array
from .errors import InsufficientOrder, MissingFactor, ResidualTooLarge, UnstableStencil, WrongLocus
from .geometry import ANNULUS, TORUS, Grid2D, ScalarField, VectorField, circulations, interpolate
from .leray import (
    DivCurlData,
    _project_array,
    interior_sup,
    projection_tolerance,
    reconstruct_array,
    reconstruction_residuals,
)

RESIDUAL_FACTOR = 10.0


# ---------------------------------------------------------------------------
# expression evaluation


class Context:
    """Fields ``y`` and ``u, Du, ..., D^{n-1} u`` with cached Jacobians."""

    def __init__(self, grid: Grid2D, y: np.ndarray, ladder: list):
        self.grid = grid
        self.y = np.asarray(y)
        self.ladder = list(ladder)
        self._jac = {}

    def vector(self, f: sym.Factor) -> np.ndarray:
        if f.kind == sym.DU:
            return self._level(f.order)
        if f.kind == sym.PSI:
            if f.order == 0:
                return self.y - self._level(0)
            return -self._level(f.order)
        raise MissingFactor(f"{f} is not a vector")

    def matrix(self, f: sym.Factor) -> np.ndarray:
        key = (f.kind, f.order)
        if key not in self._jac:
            src = self.y if f.kind == sym.GRAD_Y else self._level(f.order)
            self._jac[key] = calc.grad(self.grid, src)
        return self._jac[key]

    def _level(self, j: int) -> np.ndarray:
        if j >= len(self.ladder):
            raise MissingFactor(f"D^{j} u is not available (have {len(self.ladder)} levels)")
        return self.ladder[j]


def _matprod(ctx: Context, fs) -> np.ndarray:
    M = ctx.matrix(fs[0])
    for f in fs[1:]:
        M = np.einsum("ab...,bc...->ac...", M, ctx.matrix(f))
    return M


def _boundary_form(ctx: Context, fs, component: int) -> np.ndarray:
    """``grad^s rho{v_1, ..., v_s}`` along boundary circle ``component``."""
    grid = ctx.grid
    row = grid.boundary_rows[component]
    side = grid.boundary_signs[component]
    a = grid.boundary_radii[component]
    s = fs[0].order
    T = side * local_tensor(float(a), s)
    c, sn = np.cos(grid.theta), np.sin(grid.theta)
    out = None
    for v in fs[1:]:
        vv = ctx.vector(v)[:, row, :]
        loc = np.stack([c * vv[0] + sn * vv[1], -sn * vv[0] + c * vv[1]])
        out = np.einsum("i...,in->...n", T, loc) if out is None else np.einsum("i...n,in->...n", out, loc)
    return out


def evaluate_expr(expr: sym.SymbolicExpr, ctx: Context, where: str = "interior") -> np.ndarray:
    """Sum the expression's terms on the grid.

    ``tr`` gives a scalar field, ``as`` the scalar curl ``M[1,0] - M[0,1]``,
    ``mat`` a matrix field, ``vec`` a vector field, and ``bf`` a boundary
    trace ``(nb, Ntheta)`` (only with ``where='boundary'``).  Interior results
    requested with ``where='boundary'`` are restricted to the boundary rows.
    """
    if where not in ("interior", "boundary"):
        raise ValueError(f"unknown locus {where!r}")
    grid = ctx.grid
    total = None
    for t in expr:
        if t.shape == "bf":
            if where != "boundary":
                raise WrongLocus("boundary forms live on the boundary only")
            if not grid.is_polar:
                raise WrongLocus("the torus has no boundary")
            val = np.stack([_boundary_form(ctx, t.factors, i) for i in range(len(grid.boundary_rows))])
        elif t.shape == "tr":
            M = _matprod(ctx, t.factors)
            val = M[0, 0] + M[1, 1]
        elif t.shape == "as":
            M = _matprod(ctx, t.factors)
            val = M[1, 0] - M[0, 1]
        elif t.shape == "mat":
            val = _matprod(ctx, t.factors)
        else:
            M = _matprod(ctx, t.factors[:-1])
            val = np.einsum("ab...,a...->b...", M, ctx.vector(t.factors[-1]))
        val = t.coef * val
        total = val if total is None else total + val
    if total is None:
        total = np.zeros(grid.shape)
    if where == "boundary" and not any(t.shape == "bf" for t in expr) and grid.is_polar:
        total = np.stack([total[..., j, :] for j in grid.boundary_rows], axis=-2)
    return total


# ---------------------------------------------------------------------------
# direct formula for Du


def direct_P_field(y: VectorField) -> ScalarField:
    """``P = g - u.(y - u)`` with g the Leray potential of ``(u . grad) y``.

    Then ``Du = grad P + (grad u)^T (y - u)``.
    """
    grid = y.grid
    u, _ = _project_array(grid, y.values)
    adv = np.einsum("b...,ab...->a...", u, calc.grad(grid, y.values))
    f = calc.div(grid, adv)
    if grid.kind == TORUS:
        g = solve_periodic_poisson_array(grid, f - grid.mean(f))
    else:
        b = np.einsum("bcn,bcn->bn", np.stack([adv[:, j, :] for j in grid.boundary_rows]), grid.boundary_normals())
        g = solve_neumann_array(grid, f, b)
    return ScalarField(grid, g - np.sum(u * (y.values - u), axis=0))


def direct_Du(y: VectorField) -> VectorField:
    grid = y.grid
    u, _ = _project_array(grid, y.values)
    P = direct_P_field(y).values
    Ju = calc.grad(grid, u)
    return VectorField(grid, calc.grad(grid, P) + np.einsum("ab...,a...->b...", Ju, y.values - u))


# ---------------------------------------------------------------------------
# the ladder


@dataclass(frozen=True, eq=False)
class LevelReport:
    k: int
    norm: float
    div_res: float
    curl_res: float
    bc_res: float
    circ_res: float
    compat: float
    circ_check: float

    COLUMNS = ("k", "norm", "div_res", "curl_res", "bc_res", "circ_res", "compat", "circ_check")

    def row(self):
        return tuple(getattr(self, c) for c in self.COLUMNS)


@dataclass(frozen=True, eq=False)
class KatoDerivatives:
    """``D^k u`` for k = 0..K at the anchor time, with per-level residuals."""

    grid: Grid2D
    y: np.ndarray
    fields: tuple
    reports: tuple
    y_norm: float
    t0: float = 0.0

    @property
    def K(self) -> int:
        return len(self.fields) - 1

    @property
    def norms(self) -> list:
        return [calc.surrogate_norm(self.grid, f) for f in self.fields]

    def field(self, k: int) -> VectorField:
        if k > self.K:
            raise InsufficientOrder(f"level {k} requested, ladder has {self.K}")
        return VectorField(self.grid, self.fields[k])

    def at(self, k: int, points) -> np.ndarray:
        """``D^k u`` at points ``(n, 2)``; returns ``(n, 2)``."""
        if k > self.K:
            raise InsufficientOrder(f"level {k} requested, ladder has {self.K}")
        return interpolate(self.grid, self.fields[k], np.atleast_2d(points)).T


def residual_tolerance(grid: Grid2D, scale: float) -> float:
    return RESIDUAL_FACTOR * projection_tolerance(grid) * scale


def kato_ladder(y: VectorField, K: int, check: bool = True, cap: int = sym.MATRIX_CAP) -> KatoDerivatives:
    """Build ``u, Du, ..., D^K u`` by reconstruction from the exact series."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > cap:
        raise sym.OrderTooLarge(f"K = {K} above cap {cap}")
    grid = y.grid
    u, _ = _project_array(grid, y.values)
    y_norm = calc.surrogate_norm(grid, y.values)
    fields = [u]
    reports = [LevelReport(0, calc.surrogate_norm(grid, u), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)]
    for k in range(1, K + 1):
        ctx = Context(grid, y.values, fields)
        a = evaluate_expr(sym.div_series(k), ctx)
        w = evaluate_expr(sym.curl_series(k), ctx)
        b = evaluate_expr(sym.normal_trace_series(k), ctx, "boundary") if grid.is_polar else None
        kern = None
        if grid.kind == TORUS:
            kern = evaluate_expr(sym.circulation_expr(k), ctx)
            c = grid.mean(kern)
        elif grid.kind == ANNULUS:
            kern = evaluate_expr(sym.circulation_expr(k), ctx)
            c = circulations(VectorField(grid, kern))
        else:
            c = np.zeros(0)
        data = DivCurlData(ScalarField(grid, a), ScalarField(grid, w), b, c)
        f = reconstruct_array(grid, a, w, data.b, data.c)
        fv = VectorField(grid, f)
        res = reconstruction_residuals(fv, data)
        # redundancy: periods of D^k u minus K^k should vanish (a gradient has none)
        if grid.kind == ANNULUS:
            check_c = float(np.max(np.abs(circulations(VectorField(grid, f - kern)))))
        elif grid.kind == TORUS:
            check_c = float(np.max(np.abs(grid.mean(f - kern))))
        else:
            check_c = 0.0
        scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(w))), calc.surrogate_norm(grid, f), y_norm)
        rep = LevelReport(k, calc.surrogate_norm(grid, f), res["div"], res["curl"], res["bc"], res["circ"], float(data.compatibility_residual), check_c)
        if check:
            tol = residual_tolerance(grid, scale)
            worst = max(res.values())
            if worst > tol:
                raise ResidualTooLarge(f"level {k}: reconstruction residual {worst:.3e} above {tol:.3e}")
        fields.append(f)
        reports.append(rep)
    return KatoDerivatives(grid, y.values.copy(), tuple(fields), tuple(reports), y_norm)


def series_residuals(derivs: KatoDerivatives) -> list:
    """Per level, sup of ``div D^k u - a_k`` and ``curl D^k u - w_k`` at interior nodes."""
    grid = derivs.grid
    out = []
    for k in range(1, derivs.K + 1):
        ctx = Context(grid, derivs.y, derivs.fields[:k])
        a = evaluate_expr(sym.div_series(k), ctx)
        w = evaluate_expr(sym.curl_series(k), ctx)
        f = derivs.fields[k]
        out.append((interior_sup(grid, calc.div(grid, f) - a), interior_sup(grid, calc.curl(grid, f) - w)))
    return out


# ---------------------------------------------------------------------------
# finite-difference oracle along trajectories


def central_weights(k: int, half_width: int) -> list:
    """Exact central-difference weights for the k-th derivative on nodes -m..m."""
    nodes = [Fraction(j) for j in range(-half_width, half_width + 1)]
    return calc.fornberg_weights(Fraction(0), nodes, k)


@dataclass(frozen=True)
class OracleResult:
    k: int
    h: float
    values: np.ndarray  # (n_seeds, 2)
    noise: float
    richardson: float
    halvings: int


def _sample_path(y0: VectorField, seeds: np.ndarray, h: float, m: int, substeps: int):
    """``u(t, Phi(t, x))`` at t = j h, |j| <= m, for each seed: (2m+1, n, 2)."""
    grid = y0.grid
    s0 = AhtState.initial(y0, seeds)
    samples = {0: interpolate(grid, s0.u.values, seeds).T}
    for sign in (1, -1):
        s = s0
        for j in range(1, m + 1):
            for _ in range(substeps):
                s = step(s, sign * h / substeps, cfl_safety=np.inf, filtered=False)
            samples[sign * j] = interpolate(grid, s.u.values, s.tracers).T
    return np.stack([samples[j] for j in range(-m, m + 1)])


def _fd(samples: np.ndarray, k: int, m: int, h: float):
    w = [float(x) for x in central_weights(k, m)]
    val = np.tensordot(w, samples, axes=1) / h**k
    noise = np.finfo(float).eps * 10 * sum(abs(x) for x in w) * float(np.max(np.abs(samples))) / h**k
    return val, noise


def fd_oracle(y0: VectorField, seeds, k: int, h: float | None = None, substeps: int = 8, rtol: float = 1e-3, max_halvings: int = 5) -> OracleResult:
    """Time derivatives ``D^k u`` at the seeds by central differences along trajectories.

    The stencil uses t = j h for |j| <= k + 1.  h starts at
    ``0.05 / |y0|_surr`` and is halved until two successive estimates agree to
    ``rtol`` relative.  Halving stops early once rounding noise dominates the
    difference; the estimate with the smallest difference is returned.
    """
    if not 0 <= k <= 4:
        raise ValueError("oracle order must be between 0 and 4")
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    grid = y0.grid
    if h is None:
        h = 0.05 / max(calc.surrogate_norm(grid, y0.values), 1e-300)
    if k == 0:
        u, _ = _project_array(grid, y0.values)
        return OracleResult(0, h, interpolate(grid, u, seeds).T, 0.0, 0.0, 0)
    m = k + 1
    prev = None
    best = None
    for halvings in range(max_halvings + 1):
        samples = _sample_path(y0, seeds, h, m, substeps)
        val, noise = _fd(samples, k, m, h)
        scale = float(np.max(np.abs(val)))
        if prev is not None:
            diff = float(np.max(np.abs(val - prev[0])))
            rich = diff / max(scale, 1e-300)
            if best is None or rich < best.richardson:
                best = OracleResult(k, h, val, noise, rich, halvings)
            if rich <= rtol or scale == 0.0 or noise > diff:
                break
        prev = (val, noise)
        h = h / 2
    if best is None or best.noise > 0.5 * float(np.max(np.abs(best.values))):
        raise UnstableStencil("rounding noise exceeds half the derivative estimate")
    return best


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 0.0) -> float:
    """Sup-norm of ``a - b`` relative to the sup-norm of b (Euclidean per point).

    The denominator is at least ``floor``, so fields that vanish up to
    rounding compare as equal.
    """
    num = float(np.max(np.hypot(*(a - b).T)))
    den = max(float(np.max(np.hypot(*np.asarray(b).T))), floor)
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den
