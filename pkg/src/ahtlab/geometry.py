"""Domains, grids, fields, interpolation and loop integrals.

Three domains are supported: the periodic torus, the disk and the annulus
(both centred at the origin).  Torus grids are uniform and handled
spectrally; disk and annulus grids are polar, uniform in angle and uniform
in radius with nodes placed exactly on the boundary circles.  The disk uses
a half-offset radial grid, ``r_j = (j + 1/2) h``, so that no node sits at the
origin.

Array conventions: a scalar field is an ``(N1, N2)`` array and a vector field
a ``(2, N1, N2)`` array of Cartesian components.  On polar grids axis 0 is the
radius and axis 1 the angle.  Boundary traces are ``(nb, Ntheta)`` arrays, one
row per boundary circle (annulus: inner then outer).
"""
from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GridMismatch, InvalidResolution, LoopOutsideDomain

TORUS = "torus"
DISK = "disk"
ANNULUS = "annulus"
KINDS = (TORUS, DISK, ANNULUS)


@dataclass(frozen=True)
class Domain:
    kind: str
    period: float | None = None
    radius: float | None = None
    r_in: float | None = None
    r_out: float | None = None

    def __post_init__(self):
        if self.kind == TORUS:
            if self.period is None or not self.period > 0:
                raise ValueError("torus needs a positive period")
        elif self.kind == DISK:
            if self.radius is None or not self.radius > 0:
                raise ValueError("disk needs a positive radius")
        elif self.kind == ANNULUS:
            if self.r_in is None or self.r_out is None or not 0 < self.r_in < self.r_out:
                raise ValueError("annulus needs 0 < r_in < r_out")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def torus(cls, period: float = 2 * math.pi) -> "Domain":
        return cls(TORUS, period=float(period))

    @classmethod
    def disk(cls, radius: float = 1.0) -> "Domain":
        return cls(DISK, radius=float(radius))

    @classmethod
    def annulus(cls, r_in: float = 0.5, r_out: float = 1.5) -> "Domain":
        return cls(ANNULUS, r_in=float(r_in), r_out=float(r_out))

    @property
    def is_polar(self) -> bool:
        return self.kind != TORUS

    @property
    def genus(self) -> int:
        return 1 if self.kind == ANNULUS else 0

    @property
    def n_constraints(self) -> int:
        """Length of the harmonic constraint vector (circulations or means)."""
        return {TORUS: 2, DISK: 0, ANNULUS: 1}[self.kind]

    @property
    def area(self) -> float:
        if self.kind == TORUS:
            return self.period**2
        if self.kind == DISK:
            return math.pi * self.radius**2
        return math.pi * (self.r_out**2 - self.r_in**2)

    @property
    def inradius(self) -> float:
        if self.kind == TORUS:
            return math.inf
        if self.kind == DISK:
            return self.radius
        return 0.5 * (self.r_out - self.r_in)

    @property
    def collar_width(self) -> float:
        return 0.5 * self.inradius

    def to_config(self) -> dict:
        if self.kind == TORUS:
            return {"kind": TORUS, "period": self.period}
        if self.kind == DISK:
            return {"kind": DISK, "radius": self.radius}
        return {"kind": ANNULUS, "r_in": self.r_in, "r_out": self.r_out}

    @classmethod
    def from_config(cls, cfg: dict) -> "Domain":
        kind = cfg["kind"]
        if kind == TORUS:
            return cls.torus(cfg.get("period", 2 * math.pi))
        if kind == DISK:
            return cls.disk(cfg.get("radius", 1.0))
        if kind == ANNULUS:
            return cls.annulus(cfg.get("r_in", 0.5), cfg.get("r_out", 1.5))
        raise ValueError(f"unknown domain kind {kind!r}")


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HomologyLoop:
    """Closed circle used for circulations; ``nodes`` repeats the first point last."""

    radius: float
    center: tuple = (0.0, 0.0)
    orientation: int = 1
    n_nodes: int = 128

    @property
    def length(self) -> float:
        return 2 * math.pi * self.radius

    @property
    def angles(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.n_nodes + 1) / self.n_nodes

    @property
    def nodes(self) -> np.ndarray:
        th = self.angles
        return np.stack([self.center[0] + self.radius * np.cos(th),
                         self.center[1] + self.radius * np.sin(th)], axis=-1)

    @property
    def tangents(self) -> np.ndarray:
        th = self.angles
        return self.orientation * np.stack([-np.sin(th), np.cos(th)], axis=-1)


@dataclass(frozen=True, eq=False)
class Grid2D:
    domain: Domain
    resolution: tuple
    x1: np.ndarray = field(init=False, repr=False)
    x2: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n1, n2 = (int(n) for n in self.resolution)
        object.__setattr__(self, "resolution", (n1, n2))
        d = self.domain
        if d.kind == TORUS:
            L = d.period
            s1 = np.arange(n1) * L / n1
            s2 = np.arange(n2) * L / n2
            x1, x2 = np.meshgrid(s1, s2, indexing="ij")
            w = np.full((n1, n2), L * L / (n1 * n2))
        else:
            r, h = _radial_nodes(d, n1)
            theta = 2 * math.pi * np.arange(n2) / n2
            edges = np.concatenate([[r[0] - h / 2], r + h / 2])
            lo, hi = (0.0, d.radius) if d.kind == DISK else (d.r_in, d.r_out)
            edges = np.clip(edges, lo, hi)
            cell = 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2) * (2 * math.pi / n2)
            x1 = r[:, None] * np.cos(theta)[None, :]
            x2 = r[:, None] * np.sin(theta)[None, :]
            w = np.repeat(cell[:, None], n2, axis=1)
            object.__setattr__(self, "r", _readonly(r))
            object.__setattr__(self, "dr", h)
            object.__setattr__(self, "theta", _readonly(theta))
            object.__setattr__(self, "dtheta", 2 * math.pi / n2)
            object.__setattr__(self, "radial_weights", _readonly(cell * n2))
        object.__setattr__(self, "x1", _readonly(x1))
        object.__setattr__(self, "x2", _readonly(x2))
        object.__setattr__(self, "weights", _readonly(w))

    # -- identity -------------------------------------------------------
    @property
    def key(self) -> tuple:
        return (self.domain, self.resolution)

    @property
    def kind(self) -> str:
        return self.domain.kind

    @property
    def is_polar(self) -> bool:
        return self.domain.is_polar

    @property
    def shape(self) -> tuple:
        return self.resolution

    @property
    def n_nodes(self) -> int:
        return self.resolution[0] * self.resolution[1]

    @property
    def points(self) -> np.ndarray:
        return np.stack([self.x1, self.x2])

    @property
    def h_min(self) -> float:
        if not self.is_polar:
            return self.domain.period / max(self.resolution)
        return min(self.dr, self.r[0] * self.dtheta)

    # -- boundary -------------------------------------------------------
    @property
    def boundary_rows(self) -> tuple:
        if self.kind == TORUS:
            return ()
        n = self.resolution[0]
        return (n - 1,) if self.kind == DISK else (0, n - 1)

    @property
    def boundary_signs(self) -> tuple:
        """Sign of the outward normal relative to the radial unit vector."""
        if self.kind == TORUS:
            return ()
        return (1.0,) if self.kind == DISK else (-1.0, 1.0)

    @property
    def boundary_radii(self) -> tuple:
        return tuple(float(self.r[j]) for j in self.boundary_rows)

    @property
    def boundary_indices(self) -> tuple:
        """Flat node indices of each boundary component."""
        n2 = self.resolution[1]
        return tuple(np.arange(j * n2, (j + 1) * n2) for j in self.boundary_rows)

    def boundary_normals(self) -> np.ndarray:
        """Outward unit normals, shape ``(nb, 2, Ntheta)``."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.stack([sg * np.stack([c, s]) for sg in self.boundary_signs])

    def boundary_line_weights(self) -> np.ndarray:
        """Arc-length quadrature weights on each boundary circle, ``(nb, Ntheta)``."""
        return np.stack([np.full(self.resolution[1], rb * self.dtheta) for rb in self.boundary_radii])

    # -- loops ----------------------------------------------------------
    def homology_loops(self) -> list:
        """Generators of first homology; for the annulus the grid circle nearest mid-radius."""
        if self.kind != ANNULUS:
            return []
        mid = 0.5 * (self.domain.r_in + self.domain.r_out)
        j = int(np.argmin(np.abs(self.r - mid)))
        if j in self.boundary_rows:
            j = 1 if j == 0 else len(self.r) - 2
        return [HomologyLoop(radius=float(self.r[j]), n_nodes=self.resolution[1])]

    def check_loop(self, loop: HomologyLoop) -> None:
        if self.kind == TORUS:
            return
        rr = np.hypot(*loop.nodes.T)
        outer = self.domain.radius if self.kind == DISK else self.domain.r_out
        inner = 0.0 if self.kind == DISK else self.domain.r_in
        if rr.max() >= outer or (self.kind == ANNULUS and rr.min() <= inner):
            raise LoopOutsideDomain(f"loop of radius {loop.radius} leaves the {self.kind}")

    # -- quadrature -----------------------------------------------------
    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.tensordot(values, self.weights, axes=([-2, -1], [0, 1]))

    def mean(self, values: np.ndarray) -> np.ndarray:
        return self.integrate(values) / self.weights.sum()

    def to_config(self) -> dict:
        cfg = self.domain.to_config()
        cfg["resolution"] = list(self.resolution)
        cfg["loops"] = len(self.homology_loops())
        return cfg


def _radial_nodes(domain: Domain, n: int):
    if domain.kind == DISK:
        h = domain.radius / (n - 0.5)
        r = (np.arange(n) + 0.5) * h
        r[-1] = domain.radius
    else:
        h = (domain.r_out - domain.r_in) / (n - 1)
        r = domain.r_in + np.arange(n) * h
        r[0], r[-1] = domain.r_in, domain.r_out
    return r, h


def make_grid(domain: Domain, resolution) -> Grid2D:
    """Build a grid; polar resolutions are ``(N_radial, N_angular)``."""
    n1, n2 = (int(n) for n in resolution)
    if n1 < 8 or n2 < 8:
        raise InvalidResolution(f"resolution {resolution} below the minimum of 8")
    if domain.kind == TORUS and (n1 % 2 or n2 % 2):
        raise InvalidResolution("torus resolutions must be even")
    if domain.is_polar and n2 % 2:
        raise InvalidResolution("angular resolution must be even")
    return Grid2D(domain, (n1, n2))


def grid_from_config(cfg: dict) -> Grid2D:
    return make_grid(Domain.from_config(cfg), cfg["resolution"])


# ---------------------------------------------------------------------------
# fields


def _check_grid(a, b):
    if a.grid is not b.grid and a.grid.key != b.grid.key:
        raise GridMismatch("fields live on different grids")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"scalar field shape {v.shape} != grid shape {self.grid.shape}")
        object.__setattr__(self, "values", v)

    def _wrap(self, v):
        return ScalarField(self.grid, v)

    def __add__(self, other):
        _check_grid(self, other)
        return self._wrap(self.values + other.values)

    def __sub__(self, other):
        _check_grid(self, other)
        return self._wrap(self.values - other.values)

    def __mul__(self, c):
        return self._wrap(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.values)

    def integral(self) -> float:
        return float(self.grid.integrate(self.values))

    def mean(self) -> float:
        return float(self.grid.mean(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def boundary_trace(self) -> np.ndarray:
        return np.stack([self.values[j] for j in self.grid.boundary_rows]) if self.grid.is_polar else np.empty((0, 0))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2,) + self.grid.shape:
            raise ValueError(f"vector field shape {v.shape} != (2,) + {self.grid.shape}")
        object.__setattr__(self, "values", v)

    def _wrap(self, v):
        return VectorField(self.grid, v)

    def __add__(self, other):
        _check_grid(self, other)
        return self._wrap(self.values + other.values)

    def __sub__(self, other):
        _check_grid(self, other)
        return self._wrap(self.values - other.values)

    def __mul__(self, c):
        return self._wrap(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.values)

    def sup(self) -> float:
        return float(np.max(np.hypot(self.values[0], self.values[1])))

    def component_means(self) -> np.ndarray:
        return self.grid.mean(self.values)

    def boundary_trace(self) -> np.ndarray:
        """Cartesian components on each boundary circle, ``(nb, 2, Ntheta)``."""
        if not self.grid.is_polar:
            return np.empty((0, 2, 0))
        return np.stack([self.values[:, j, :] for j in self.grid.boundary_rows])

    def normal_trace(self) -> np.ndarray:
        if not self.grid.is_polar:
            return np.empty((0, 0))
        return np.einsum("bcn,bcn->bn", self.boundary_trace(), self.grid.boundary_normals())

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((2,) + grid.shape))


# ---------------------------------------------------------------------------
# interpolation


def _lagrange_weights(xs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Lagrange basis weights; ``xs`` is ``(P, m)`` stencil nodes, ``x`` is ``(P,)``."""
    m = xs.shape[1]
    w = np.ones_like(xs)
    for i in range(m):
        for j in range(m):
            if i != j:
                w[:, i] *= (x - xs[:, j]) / (xs[:, i] - xs[:, j])
    return w


def _angular_coeffs(values: np.ndarray):
    """Real-FFT angular coefficients scaled for direct synthesis."""
    n = values.shape[-1]
    F = np.fft.rfft(values, axis=-1) / n
    F[..., 1:] *= 2.0
    if n % 2 == 0:
        F[..., -1] *= 0.5
    return F


def interpolate(grid: Grid2D, values: np.ndarray, points, order: int = 4, return_clamped: bool = False):
    """Evaluate grid data at arbitrary points.

    Torus data is summed as a trigonometric series.  Polar data is
    trigonometric in angle and Lagrange of the given ``order`` (number of
    nodes) in radius, with parity reflection through the disk centre.  Points
    outside the annulus or disk radially are clamped onto the boundary.
    """
    values = np.asarray(values, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lead = values.shape[:-2]
    flat = values.reshape((-1,) + grid.shape)
    if not grid.is_polar:
        out = _interp_torus(grid, flat, pts)
        clamped = np.zeros(len(pts), dtype=bool)
    else:
        out, clamped = _interp_polar(grid, flat, pts, order)
    out = out.reshape(lead + (len(pts),))
    return (out, clamped) if return_clamped else out


def _interp_torus(grid, flat, pts):
    n1, n2 = grid.shape
    L = grid.domain.period
    k1 = np.fft.fftfreq(n1, d=1.0 / n1) * (2 * math.pi / L)
    k2 = np.arange(n2 // 2 + 1) * (2 * math.pi / L)
    F = np.fft.rfft2(flat, axes=(-2, -1)) / (n1 * n2)
    F[..., 1:] *= 2.0
    F[..., -1] *= 0.5
    A = np.exp(1j * np.outer(pts[:, 0], k1))
    B = np.exp(1j * np.outer(pts[:, 1], k2))
    out = np.empty((flat.shape[0], len(pts)))
    for c in range(flat.shape[0]):
        out[c] = np.real(np.sum((A @ F[c]) * B, axis=1))
    return out


def _interp_polar(grid, flat, pts, order):
    d = grid.domain
    r_pts = np.hypot(pts[:, 0], pts[:, 1])
    th = np.arctan2(pts[:, 1], pts[:, 0])
    lo = 0.0 if d.kind == DISK else d.r_in
    hi = d.radius if d.kind == DISK else d.r_out
    clamped = (r_pts > hi) | (r_pts < lo)
    r_pts = np.clip(r_pts, lo, hi)
    F = _angular_coeffs(flat)  # (C, Nr, M)
    m = np.arange(F.shape[-1])
    r = grid.r
    if d.kind == DISK:
        q = order
        parity = (-1.0) ** m
        ext = np.concatenate([F[:, q - 1::-1, :] * parity, F], axis=1)
        rext = np.concatenate([-r[q - 1::-1], r])
    else:
        ext, rext = F, r
    n_ext = len(rext)
    # nearest stencil of `order` nodes around each point
    idx = np.searchsorted(rext, r_pts)
    start = np.clip(idx - order // 2, 0, n_ext - order)
    stencil = start[:, None] + np.arange(order)[None, :]
    w = _lagrange_weights(rext[stencil], r_pts)
    G = np.einsum("ps,cpsm->cpm", w, ext[:, stencil, :])
    E = np.exp(1j * np.outer(th, m))
    out = np.real(np.einsum("cpm,pm->cp", G, E))
    return out, clamped


# ---------------------------------------------------------------------------
# loop integrals


def circulation(v: VectorField, loop: HomologyLoop, order: int = 8) -> float:
    """Trapezoid quadrature of the tangential component of ``v`` along ``loop``."""
    v.grid.check_loop(loop)
    nodes = loop.nodes[:-1]
    tau = loop.tangents[:-1]
    vals = interpolate(v.grid, v.values, nodes, order=order)
    return float(np.sum(vals[0] * tau[:, 0] + vals[1] * tau[:, 1]) * loop.length / loop.n_nodes)


def circulations(v: VectorField, loops=None) -> np.ndarray:
    loops = v.grid.homology_loops() if loops is None else loops
    return np.array([circulation(v, lp) for lp in loops])


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"AHTF"
_KIND_CODE = {TORUS: 0, DISK: 1, ANNULUS: 2}
_HEADER = struct.Struct("<4sBBiiiddd")


def field_to_csv(f, path=None) -> str:
    """Rows ``x, y, c0[, c1]``; floats in round-trip repr."""
    vals = f.values[None] if isinstance(f, ScalarField) else f.values
    cols = ["x", "y"] + [f"c{i}" for i in range(vals.shape[0])]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    x1, x2 = f.grid.x1.ravel(), f.grid.x2.ravel()
    flat = vals.reshape(vals.shape[0], -1)
    for i in range(x1.size):
        w.writerow([repr(float(x1[i])), repr(float(x2[i]))] + [repr(float(c)) for c in flat[:, i]])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def field_from_csv(grid: Grid2D, text: str):
    rows = list(csv.reader(io.StringIO(text)))
    data = np.array([[float(c) for c in row[2:]] for row in rows[1:]])
    vals = data.T.reshape((data.shape[1],) + grid.shape)
    return ScalarField(grid, vals[0]) if vals.shape[0] == 1 else VectorField(grid, vals)


def field_to_bytes(f) -> bytes:
    """Small header (magic, version, kind, N1, N2, ncomp, 3 params) then row-major float64."""
    vals = f.values[None] if isinstance(f, ScalarField) else f.values
    d = f.grid.domain
    params = {TORUS: (d.period, 0.0, 0.0), DISK: (d.radius, 0.0, 0.0), ANNULUS: (d.r_in, d.r_out, 0.0)}[d.kind]
    head = _HEADER.pack(_MAGIC, 1, _KIND_CODE[d.kind], f.grid.shape[0], f.grid.shape[1], vals.shape[0], *params)
    return head + np.ascontiguousarray(vals, dtype="<f8").tobytes()


def field_from_bytes(blob: bytes):
    magic, _version, kind, n1, n2, nc, p0, p1, _p2 = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise ValueError("not a field file")
    kind = {v: k for k, v in _KIND_CODE.items()}[kind]
    dom = {TORUS: lambda: Domain.torus(p0), DISK: lambda: Domain.disk(p0), ANNULUS: lambda: Domain.annulus(p0, p1)}[kind]()
    grid = make_grid(dom, (n1, n2))
    vals = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape((nc, n1, n2)).copy()
    return ScalarField(grid, vals[0]) if nc == 1 else VectorField(grid, vals)
