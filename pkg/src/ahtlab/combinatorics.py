"""Exact coefficient bounds, the composition-sum lemma, and the smallness function gamma(L)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import symbolic as sym
from .errors import LTooSmall, NotFound, TooLarge

ENUM_LIMIT = 10**7
# sup_k sum_r (k+1)^2 / (r^3 (k-r+1)^2) is 4 (at k = 1); 13 is a proven bound,
# see scripts/circulation_constant.py.
CIRCULATION_SUM_BOUND = 13.0


# ---------------------------------------------------------------------------
# composition sums


def upsilon_sum(s: int, m: int) -> Fraction:
    """Exact ``sum over alpha in N^s with |alpha| = m of prod 1/(1+alpha_i)^2``."""
    if s < 1 or m < 0:
        raise ValueError("need s >= 1 and m >= 0")
    if math.comb(m + s - 1, s - 1) > ENUM_LIMIT:
        raise TooLarge(f"{math.comb(m + s - 1, s - 1)} compositions exceed the enumeration limit")
    base = [Fraction(1, (1 + a) ** 2) for a in range(m + 1)]
    acc = base
    for _ in range(s - 1):
        acc = [sum(acc[i] * base[n - i] for i in range(n + 1)) for n in range(m + 1)]
    return acc[m]


def upsilon_bound(s: int, m: int) -> Fraction:
    return Fraction(20**s, (m + 1) ** 2)


def chemin_holds(s: int, m: int) -> bool:
    return upsilon_sum(s, m) <= upsilon_bound(s, m)


# ---------------------------------------------------------------------------
# coefficient table


@dataclass(frozen=True)
class Entry:
    family: str
    k: int
    s: int
    alpha: tuple
    value: int
    bound: int
    sign_ok: bool = True

    @property
    def ratio(self) -> Fraction:
        return Fraction(abs(self.value), self.bound)

    @property
    def ok(self) -> bool:
        return self.sign_ok and abs(self.value) <= self.bound


def _fact_ratio(k, alpha, extra=0):
    den = sym.factorial_multi(alpha) * math.factorial(extra)
    return Fraction(math.factorial(k), den)


def _orbit_size(alpha: tuple) -> int:
    return len({alpha[i:] + alpha[:i] for i in range(len(alpha))})


@dataclass
class CoefficientTable:
    """Every generated coefficient with its bound.

    Families: ``c1`` divergence, ``c2`` normal trace, ``c3`` grad-y-led curl
    terms, ``c4`` pure curl terms, ``ckr`` circulation kernel, and ``c1_merged``
    (divergence with cyclically merged traces, bounded by orbit size times
    k!/alpha!).  Bounds of the first four are per ordered index tuple.
    """

    entries: list = field(default_factory=list)

    @classmethod
    def build(cls, k_max: int = sym.MATRIX_CAP, kernel_max: int = sym.KERNEL_CAP) -> "CoefficientTable":
        t = cls()
        for k in range(1, k_max + 1):
            for term in sym.div_series(k, merge=False):
                s, a = sym.term_index(term)
                t.entries.append(Entry("c1", k, s, a, term.coef, int(_fact_ratio(k, a))))
            for term in sym.div_series(k, merge=True):
                s, a = sym.term_index(term)
                t.entries.append(Entry("c1_merged", k, s, a, term.coef, int(_orbit_size(a) * _fact_ratio(k, a))))
            for term in sym.normal_trace_series(k, merge=False):
                s, a = sym.term_index(term)
                b = _fact_ratio(k, a, s - 1)
                t.entries.append(Entry("c2", k, s, a, term.coef, math.floor(b), term.coef < 0))
            for term in sym.curl_series(k, merge=False):
                s, a = sym.term_index(term)
                fam = "c3" if sym.term_group(term) == "grad_y" else "c4"
                t.entries.append(Entry(fam, k, s, a, term.coef, int(_fact_ratio(k, a))))
        for k in range(1, kernel_max + 1):
            for r, c in enumerate(sym.circulation_kernel(k), start=1):
                t.entries.append(Entry("ckr", k, r, (r - 1, k - r), c, math.comb(k, r)))
        return t

    def family(self, name: str) -> list:
        return [e for e in self.entries if e.family == name]

    def lookup(self, family: str, k: int, alpha: tuple) -> int:
        for e in self.entries:
            if e.family == family and e.k == k and e.alpha == tuple(alpha):
                return e.value
        return 0

    def rows(self):
        for e in self.entries:
            yield (e.family, e.k, e.s, " ".join(map(str, e.alpha)), e.value, e.bound, int(e.ok))


def verify_bounds(table: CoefficientTable) -> dict:
    """Per family: count, pass flag, worst ``|c| / bound`` and any failures."""
    report = {}
    for fam in sorted({e.family for e in table.entries}):
        es = table.family(fam)
        worst = max(es, key=lambda e: e.ratio)
        bad = [e for e in es if not e.ok]
        report[fam] = {
            "count": len(es),
            "pass": not bad,
            "worst_ratio": float(worst.ratio),
            "worst_at": (worst.k, worst.alpha),
            "failures": [(e.k, e.alpha, e.value, e.bound) for e in bad],
        }
    return report


# ---------------------------------------------------------------------------
# constants and gamma


@dataclass(frozen=True)
class Constants:
    """Constants entering gamma(L); all values are surrogates measured on grids."""

    C_omega: float
    c_r: float
    c_rho: float
    C_gamma: float
    L: float | None = None

    def __post_init__(self):
        for name in ("C_omega", "c_r", "c_rho"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.C_gamma < 0:
            raise ValueError("C_gamma must be non-negative")
        if self.L is not None and not self.L > 1.0 / self.C_omega:
            raise ValueError("L must exceed 1 / C_omega")

    def with_L(self, L: float) -> "Constants":
        return Constants(self.C_omega, self.c_r, self.c_rho, self.C_gamma, L)

    def as_dict(self) -> dict:
        return asdict(self)


def loop_constant(loop_lengths) -> float:
    return math.sqrt(sum(x * x for x in loop_lengths))


def _boundary_term(k: int, L: float, c_rho: float) -> float:
    q = 20.0 * c_rho / L
    return 4.0 * sum(s * 20.0 * c_rho * q ** (s - 1) * ((k + 1) / (k + 2 - s)) ** 2 for s in range(2, k + 2))


def circulation_sum(k: int) -> float:
    return sum((k + 1) ** 2 / (r**3 * (k - r + 1) ** 2) for r in range(1, k + 1))


def _series_tail(power: int, q: float, start: int) -> float:
    """Upper bound of ``sum_{s >= start} s^power q^(s-1)`` for q < 1.

    Terms are summed until the (decreasing) ratio of consecutive terms drops
    below ``(1 + q) / 2``; the rest is bounded by a geometric series.
    """
    s = start
    total = 0.0
    while True:
        ratio = ((s + 1) / s) ** power * q
        if ratio < 0.5 * (1.0 + q):
            term = s**power * q ** (s - 1)
            return total + term / (1.0 - ratio)
        total += s**power * q ** (s - 1)
        s += 1


def boundary_tail(K: int, L: float, c_rho: float) -> float:
    """Bound of the boundary bracket for every k > K (needs q = 20 c_rho / L < 1).

    Split at M = K // 2: for s <= M the factor ((k+1)/(k+2-s))^2 is largest at
    k = K + 1; for s > M it is at most s^2.
    """
    q = 20.0 * c_rho / L
    M = max(K // 2, 1)
    head = sum(s * q ** (s - 1) * ((K + 2) / (K + 3 - s)) ** 2 for s in range(2, M + 1))
    return 4.0 * 20.0 * c_rho * (head + _series_tail(3, q, M + 1))


def circulation_tail(K: int) -> float:
    """Bound of ``circulation_sum(k)`` for every k > K."""
    R = max(K // 2, 1)
    head = sum(1.0 / r**3 * ((K + 2) / (K + 2 - r)) ** 2 for r in range(1, R + 1))
    sharp = head + 2.0 / R**2 + 8.0 * (math.pi**2 / 6) / (K + 2)
    return min(CIRCULATION_SUM_BOUND, sharp)


def gamma_terms(L: float, consts: Constants, K_max: int) -> list:
    circ = consts.C_gamma * (consts.C_omega + 1.0) / (consts.C_omega * L)
    return [_boundary_term(k, L, consts.c_rho) + circ * circulation_sum(k) for k in range(1, K_max + 1)]


def gamma(L: float, consts: Constants, K_max: int = 50) -> float:
    """sup over k of the smallness bracket, with a certified bound past ``K_max``."""
    if not L > 20.0 * consts.c_rho:
        raise LTooSmall(f"L = {L} must exceed 20 c_rho = {20 * consts.c_rho}")
    if K_max < 10:
        raise ValueError("K_max must be at least 10")
    finite = max(gamma_terms(L, consts, K_max))
    circ = consts.C_gamma * (consts.C_omega + 1.0) / (consts.C_omega * L)
    tail = boundary_tail(K_max, L, consts.c_rho) + circ * circulation_tail(K_max)
    return max(finite, tail)


@dataclass(frozen=True)
class LSearch:
    L_star: float
    gamma_star: float
    target: float
    lower: float
    radius_factor: float  # multiply by 1/|y| for the radius bound

    def radius_bound(self, y_norm: float) -> float:
        return self.radius_factor / y_norm if y_norm > 0 else math.inf


def find_L(consts: Constants, K_max: int = 50, rtol: float = 1e-9, max_iter: int = 200) -> LSearch:
    """Smallest certified L (to ``rtol``) with ``gamma(L) <= 1 / c_r``."""
    target = 1.0 / consts.c_r
    lower = max(20.0 * consts.c_rho, 1.0 / consts.C_omega)
    lo = lower
    hi = lower * 2.0
    it = 0
    while gamma(hi, consts, K_max) > target:
        lo, hi = hi, hi * 2.0
        it += 1
        if it > max_iter:
            raise NotFound("no L found by doubling")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid > lower and gamma(mid, consts, K_max) <= target:
            hi = mid
        else:
            lo = mid
        it += 1
        if it > max_iter:
            raise NotFound("bisection did not converge")
    return LSearch(hi, gamma(hi, consts, K_max), target, lower, 1.0 / (consts.C_omega * hi))


def ladder_bound(k: int, consts: Constants, L: float, y_norm: float) -> float:
    """``C k! (C L)^k |y|^{k+1} / (k+1)^2`` with C the projector constant."""
    C = consts.C_omega
    return C * math.factorial(k) * (C * L) ** k * y_norm ** (k + 1) / (k + 1) ** 2
