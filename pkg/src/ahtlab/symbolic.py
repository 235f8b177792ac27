"""Exact term rewriting for iterated material derivatives.

Expressions are integer combinations of products built from

* ``GradY``        the Jacobian of y,
* ``GradDU(j)``    the Jacobian of ``D^j u``,
* ``DU(j)``        the vector ``D^j u``,
* ``Psi(j)``       the vector ``D^j (y - u)``,
* ``HessRho(s)``   the s-th derivative tensor of the signed distance,

under five shapes: ``tr`` (trace of a matrix product), ``as`` (antisymmetric
part ``M - M^T`` of a product), ``mat`` (plain product), ``bf`` (a symmetric
tensor of the signed distance applied to vector slots) and ``vec`` (the
transposed matrix product applied to a trailing vector).

``D = d/dt + u . grad`` acts factor by factor with

    D grad D^j u = grad D^{j+1} u - grad D^j u . grad u
    D grad y     = -grad y . grad u             (since D y = 0)
    D D^j u      = D^{j+1} u,   D D^j(y-u) = D^{j+1}(y-u)
    D grad^s rho{v..} = grad^{s+1} rho{u, v..} + slot-wise D

Two bookkeeping modes exist.  In merged mode traces are keyed by their
minimal cyclic rotation and tensor slots are sorted, so like terms combine.
In ordered mode every factor list is kept exactly as generated (a new tensor
slot is placed first); that is the natural indexing for per-tuple bounds.
Coefficients are Python ints, so all arithmetic is exact.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

from .errors import MalformedExpr, OrderTooLarge

MATRIX_CAP = 8
KERNEL_CAP = 20

GRAD_Y = "GradY"
GRAD_DU = "GradDU"
DU = "DU"
PSI = "Psi"
HESS_RHO = "HessRho"
MATRIX_KINDS = (GRAD_Y, GRAD_DU)
VECTOR_KINDS = (DU, PSI)

SHAPES = ("tr", "as", "mat", "bf", "vec")


class Factor(NamedTuple):
    kind: str
    order: int = 0

    def __str__(self):
        j = self.order
        if self.kind == GRAD_Y:
            return "grad y"
        if self.kind == GRAD_DU:
            return "grad u" if j == 0 else f"grad D^{j} u"
        if self.kind == DU:
            return "u" if j == 0 else f"D^{j} u"
        if self.kind == PSI:
            return "(y-u)" if j == 0 else f"D^{j}(y-u)"
        return f"grad^{j} rho"


def gy():
    return Factor(GRAD_Y)


def g(j):
    return Factor(GRAD_DU, j)


def du(j):
    return Factor(DU, j)


def psi(j):
    return Factor(PSI, j)


def rho(s):
    return Factor(HESS_RHO, s)


@dataclass(frozen=True)
class Term:
    coef: int
    shape: str
    factors: tuple


def _min_rotation(fs: tuple) -> tuple:
    return min(fs[i:] + fs[:i] for i in range(len(fs)))


def _check(shape: str, fs: tuple):
    if shape not in SHAPES:
        raise MalformedExpr(f"unknown shape {shape!r}")
    if not fs:
        raise MalformedExpr("empty factor list")
    for f in fs:
        if f.kind not in (GRAD_Y, GRAD_DU, DU, PSI, HESS_RHO) or f.order < 0:
            raise MalformedExpr(f"bad factor {f!r}")
    if shape in ("tr", "as", "mat"):
        if any(f.kind not in MATRIX_KINDS for f in fs):
            raise MalformedExpr(f"{shape} takes matrix factors only")
    elif shape == "bf":
        head, slots = fs[0], fs[1:]
        if head.kind != HESS_RHO or head.order < 1 or len(slots) != head.order:
            raise MalformedExpr("boundary form needs grad^s rho followed by s vector slots")
        if any(f.kind not in VECTOR_KINDS for f in slots):
            raise MalformedExpr("boundary form slots must be vectors")
    else:
        if fs[-1].kind not in VECTOR_KINDS or any(f.kind not in MATRIX_KINDS for f in fs[:-1]):
            raise MalformedExpr("vector product needs matrices followed by one vector")


def canonical_key(shape: str, fs: tuple, merge: bool) -> tuple:
    fs = tuple(Factor(*f) for f in fs)
    _check(shape, fs)
    if merge:
        if shape == "tr":
            fs = _min_rotation(fs)
        elif shape == "bf":
            fs = (fs[0],) + tuple(sorted(fs[1:]))
    return shape, fs


class SymbolicExpr:
    """Immutable exact-integer combination of terms."""

    __slots__ = ("_terms", "merge")

    def __init__(self, terms=(), merge: bool = True):
        acc = {}
        for item in terms:
            if isinstance(item, Term):
                coef, shape, fs = item.coef, item.shape, item.factors
            else:
                coef, shape, fs = item
            if not isinstance(coef, int):
                raise MalformedExpr(f"coefficient {coef!r} is not an integer")
            key = canonical_key(shape, fs, merge)
            acc[key] = acc.get(key, 0) + coef
        self._terms = {k: c for k, c in sorted(acc.items()) if c != 0}
        self.merge = merge

    # -- container protocol ---------------------------------------------
    def __iter__(self):
        for (shape, fs), c in self._terms.items():
            yield Term(c, shape, fs)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        return isinstance(other, SymbolicExpr) and self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def items(self):
        return self._terms.items()

    def coefficient(self, shape: str, factors) -> int:
        return self._terms.get(canonical_key(shape, tuple(factors), self.merge), 0)

    # -- arithmetic ------------------------------------------------------
    def _combine(self, other, sign):
        if other.merge != self.merge:
            raise MalformedExpr("cannot mix merged and ordered expressions")
        items = [(c, s, f) for (s, f), c in self._terms.items()]
        items += [(sign * c, s, f) for (s, f), c in other._terms.items()]
        return SymbolicExpr(items, self.merge)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, k: int):
        return SymbolicExpr([(k * c, s, f) for (s, f), c in self._terms.items()], self.merge)

    def __repr__(self):
        return f"SymbolicExpr({len(self)} terms, merge={self.merge})"

    # -- text / json ----------------------------------------------------
    def pretty(self) -> str:
        lines = []
        for (shape, fs), c in self._terms.items():
            if shape == "bf":
                body = f"{fs[0]}{{{', '.join(map(str, fs[1:]))}}}"
            elif shape == "vec":
                body = f"({' . '.join(map(str, fs[:-1]))})^T {fs[-1]}"
            else:
                body = " . ".join(map(str, fs))
            lines.append(f"{c:+d} {shape}[{body}]")
        return "\n".join(lines)

    def to_json(self) -> str:
        rows = [{"coef": c, "shape": s, "factors": [[f.kind, f.order] for f in fs]} for (s, fs), c in self._terms.items()]
        return json.dumps({"merge": self.merge, "terms": rows}, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SymbolicExpr":
        data = json.loads(text)
        return cls([(t["coef"], t["shape"], tuple(Factor(k, o) for k, o in t["factors"])) for t in data["terms"]], data["merge"])

    def as_merged(self) -> "SymbolicExpr":
        return SymbolicExpr([(c, s, f) for (s, f), c in self._terms.items()], True)


# ---------------------------------------------------------------------------
# material derivative


def _factor_derivative(f: Factor):
    """D of one factor as a list of (coef, replacement factors)."""
    if f.kind == GRAD_DU:
        return [(1, (g(f.order + 1),)), (-1, (f, g(0)))]
    if f.kind == GRAD_Y:
        return [(-1, (f, g(0)))]
    if f.kind in (DU, PSI):
        return [(1, (Factor(f.kind, f.order + 1),))]
    raise MalformedExpr(f"no derivative rule for {f!r} outside a boundary form")


def material_derivative(expr: SymbolicExpr) -> SymbolicExpr:
    """Apply ``D`` term by term with the product rule."""
    out = []
    for (shape, fs), c in expr.items():
        if shape == "bf":
            head, slots = fs[0], fs[1:]
            out.append((c, "bf", (rho(head.order + 1), du(0)) + slots))
            for i, v in enumerate(slots):
                out.append((c, "bf", (head,) + slots[:i] + (Factor(v.kind, v.order + 1),) + slots[i + 1 :]))
            continue
        for i, f in enumerate(fs):
            for k, rep in _factor_derivative(f):
                out.append((c * k, shape, fs[:i] + rep + fs[i + 1 :]))
    return SymbolicExpr(out, expr.merge)


# ---------------------------------------------------------------------------
# series


def _cap(k: int, cap: int):
    if k < 1:
        raise ValueError("order must be at least 1")
    if k > cap:
        raise OrderTooLarge(f"order {k} above cap {cap}")


@lru_cache(maxsize=None)
def _div(k: int, merge: bool) -> SymbolicExpr:
    base = SymbolicExpr([(1, "tr", (g(k - 1), g(0)))], merge)
    if k == 1:
        return base
    return material_derivative(_div(k - 1, merge)) + base


def div_series(k: int, merge: bool = True, cap: int = MATRIX_CAP) -> SymbolicExpr:
    """``div D^k u`` from ``div u = 0`` and ``div D v = D div v + tr(grad v . grad u)``."""
    _cap(k, cap)
    return _div(k, merge)


@lru_cache(maxsize=None)
def _curl(k: int, merge: bool) -> SymbolicExpr:
    prev = SymbolicExpr([(1, "as", (gy(),))], merge) if k == 1 else _curl(k - 1, merge)
    return material_derivative(prev) + SymbolicExpr([(1, "as", (g(k - 1), g(0)))], merge)


def curl_series(k: int, merge: bool = True, cap: int = MATRIX_CAP) -> SymbolicExpr:
    """``as{grad D^k u}`` from ``curl u = curl y`` and ``grad D v = D grad v + grad v . grad u``."""
    _cap(k, cap)
    return _curl(k, merge)


@lru_cache(maxsize=None)
def _tangency(k: int, merge: bool) -> SymbolicExpr:
    if k == 0:
        return SymbolicExpr([(1, "bf", (rho(1), du(0)))], merge)
    return material_derivative(_tangency(k - 1, merge))


def tangency_identity(k: int, merge: bool = True) -> SymbolicExpr:
    """``D^k (grad rho . u)``, which vanishes on the boundary."""
    return _tangency(k, merge)


def normal_trace_series(k: int, merge: bool = True, cap: int = MATRIX_CAP) -> SymbolicExpr:
    """``n . D^k u`` on the boundary, solved from ``D^k(grad rho . u) = 0``."""
    _cap(k, cap)
    full = _tangency(k, merge)
    lead = SymbolicExpr([(1, "bf", (rho(1), du(k)))], merge)
    if full.coefficient("bf", (rho(1), du(k))) != 1:
        raise MalformedExpr("leading normal term lost")
    return -(full - lead)


@lru_cache(maxsize=None)
def _kernel(k: int) -> SymbolicExpr:
    if k == 1:
        return SymbolicExpr([(1, "vec", (g(0), psi(0)))], False)
    prev = _kernel(k - 1)
    shifted = SymbolicExpr([(c, "vec", (fs[0], g(0)) + fs[1:]) for (_, fs), c in prev.items()], False)
    # -grad u^T D^{k-1} u  ==  +grad u^T D^{k-1}(y - u)  for k - 1 >= 1
    return material_derivative(prev) + shifted + SymbolicExpr([(1, "vec", (g(0), psi(k - 1)))], False)


def circulation_expr(k: int, cap: int = KERNEL_CAP, substitute: bool = True) -> SymbolicExpr:
    """The kernel ``K^k[u, y-u]`` whose circulations equal those of ``D^k u``.

    With ``substitute`` the slots ``D^j(y-u)``, ``j >= 1``, are rewritten as
    ``-D^j u``; ``(y-u)`` itself stays as a slot.
    """
    _cap(k, cap)
    e = _kernel(k)
    if not substitute:
        return e
    out = []
    for (_, fs), c in e.items():
        v = fs[-1]
        if v.kind == PSI and v.order >= 1:
            out.append((-c, "vec", fs[:-1] + (du(v.order),)))
        else:
            out.append((c, "vec", fs))
    return SymbolicExpr(out, False)


def circulation_kernel(k: int, cap: int = KERNEL_CAP) -> list:
    """Exact ``c_{k,r}``, r = 1..k, in ``sum_r c_{k,r} grad(D^{r-1}u)^T D^{k-r}(y-u)``."""
    _cap(k, cap)
    e = _kernel(k)
    out = []
    for r in range(1, k + 1):
        out.append(e.coefficient("vec", (g(r - 1), psi(k - r))))
    if sum(1 for _ in e) != k:
        raise MalformedExpr("kernel left the single-matrix form")
    return out


def circulation_kernel_by_recursion(k: int) -> list:
    """The same coefficients from the scalar recursion of the induction step."""
    c = [1]
    for _ in range(1, k):
        nxt = [c[0] + 1] + [c[r] + c[r - 1] for r in range(1, len(c))] + [c[-1]]
        c = nxt
    return c


# ---------------------------------------------------------------------------
# indexing


GROUPS = ("grad_y", "pure", "boundary", "kernel")


def term_group(t: Term) -> str:
    if t.shape == "bf":
        return "boundary"
    if t.shape == "vec":
        return "kernel"
    return "grad_y" if t.factors[0].kind == GRAD_Y else "pure"


def term_index(t: Term) -> tuple:
    """``(s, alpha)`` of a term: s factors of orders alpha.

    For grad-y-led products the leading factor is not counted; for boundary
    forms s is the tensor order and alpha the slot orders.
    """
    grp = term_group(t)
    if grp == "boundary":
        return t.factors[0].order, tuple(f.order for f in t.factors[1:])
    fs = t.factors[1:] if grp == "grad_y" else t.factors
    return len(fs), tuple(f.order for f in fs)


def extract_coefficient(expr: SymbolicExpr, pattern) -> int:
    """Coefficient of the term with index ``(s, alpha)`` in ``group`` (0 if absent)."""
    s, alpha, group = pattern
    alpha = tuple(alpha)
    if len(alpha) != s:
        return 0
    if group == "boundary":
        shape, fs = "bf", (rho(s),) + tuple(du(a) for a in alpha)
    elif group in ("grad_y", "pure"):
        shape = None
        for t in expr:
            shape = t.shape
            break
        if shape not in ("tr", "as", "mat"):
            return 0
        fs = tuple(g(a) for a in alpha)
        if group == "grad_y":
            fs = (gy(),) + fs
    else:
        raise ValueError(f"unknown group {group!r}")
    try:
        return expr.coefficient(shape, fs)
    except MalformedExpr:
        return 0


def factorial_multi(alpha) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def closure_ok(expr: SymbolicExpr) -> bool:
    """Every term uses only declared factor kinds in a well-formed shape."""
    try:
        for t in expr:
            _check(t.shape, t.factors)
    except MalformedExpr:
        return False
    return True
