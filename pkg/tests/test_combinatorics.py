import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahtlab import combinatorics as comb
from ahtlab.errors import LTooSmall, TooLarge

DISK = comb.Constants(C_omega=1.0, c_r=1.1, c_rho=2.0, C_gamma=0.0)
ANNULUS = comb.Constants(C_omega=1.7, c_r=1.0, c_rho=2.0, C_gamma=2 * math.pi)


def test_upsilon_small_case():
    assert comb.upsilon_sum(2, 2) == Fraction(41, 144)
    assert comb.upsilon_sum(1, 5) == Fraction(1, 36)


@given(st.integers(1, 4), st.integers(0, 8))
def test_upsilon_recursion_over_first_part(s, m):
    if s == 1:
        return
    rest = sum(Fraction(1, (1 + a) ** 2) * comb.upsilon_sum(s - 1, m - a) for a in range(m + 1))
    assert comb.upsilon_sum(s, m) == rest


def test_upsilon_enumeration_limit():
    with pytest.raises(TooLarge):
        comb.upsilon_sum(12, 400)


def test_chemin_holds_in_range():
    assert all(comb.chemin_holds(s, m) for s in range(1, 7) for m in range(13))


def test_coefficient_table_passes():
    table = comb.CoefficientTable.build(6, 12)
    report = comb.verify_bounds(table)
    assert all(r["pass"] for r in report.values())
    assert table.lookup("ckr", 1, (0, 0)) == 1


def test_gamma_tends_to_zero_and_is_monotone():
    Ls = [100.0 * 2**i for i in range(12)]
    vals = [comb.gamma(L, ANNULUS) for L in Ls]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert comb.gamma(1e9, ANNULUS) < 1e-4
    assert vals[-1] * Ls[-1] == pytest.approx(vals[-2] * Ls[-2], rel=0.05)


def test_circulation_summand_scales_like_one_over_L():
    c = comb.Constants(1.0, 1.0, 1e-9, 1.0)
    terms1 = comb.gamma_terms(1e3, c, 10)
    terms2 = comb.gamma_terms(2e3, c, 10)
    for a, b in zip(terms1, terms2):
        assert b == pytest.approx(a / 2, rel=1e-6)


def test_gamma_stable_in_truncation():
    L = 1e5
    assert comb.gamma(L, DISK, 50) == pytest.approx(comb.gamma(L, DISK, 100), rel=1e-12)


def test_gamma_requires_certified_regime():
    with pytest.raises(LTooSmall):
        comb.gamma(20 * DISK.c_rho, DISK)


def test_tail_bounds_dominate_later_terms():
    c = ANNULUS
    L = 4e4
    K = 20
    circ = c.C_gamma * (c.C_omega + 1) / (c.C_omega * L)
    tail = comb.boundary_tail(K, L, c.c_rho) + circ * comb.circulation_tail(K)
    later = comb.gamma_terms(L, c, 120)[K:]
    assert max(later) <= tail


def test_circulation_sum_maximum():
    assert comb.circulation_sum(1) == 4.0
    assert max(comb.circulation_sum(k) for k in range(1, 300)) <= comb.CIRCULATION_SUM_BOUND


def test_find_L_brackets():
    res = comb.find_L(ANNULUS)
    assert res.gamma_star <= res.target
    half = res.L_star / 2
    assert half <= res.lower or comb.gamma(half, ANNULUS) > res.target


def test_find_L_orderings():
    disk = comb.find_L(DISK)
    harder = comb.find_L(comb.Constants(1.0, 2.2, 2.0, 0.0))
    with_loops = comb.find_L(comb.Constants(1.0, 1.1, 2.0, 2 * math.pi))
    assert harder.L_star >= disk.L_star
    assert with_loops.L_star >= disk.L_star


def test_constants_validation():
    with pytest.raises(ValueError):
        comb.Constants(0.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        comb.Constants(1.0, 1.0, 1.0, -1.0)
