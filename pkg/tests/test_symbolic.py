import math
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahtlab import symbolic as sym
from ahtlab.errors import MalformedExpr, OrderTooLarge
from ahtlab.symbolic import SymbolicExpr, du, g, gy, psi, rho

GOLDEN = Path(__file__).parent / "golden"

matrix_factor = st.one_of(st.just(gy()), st.integers(0, 4).map(g))
matrix_lists = st.lists(matrix_factor, min_size=1, max_size=5).map(tuple)


@given(matrix_lists, st.integers(0, 10))
def test_trace_is_cyclic(fs, shift):
    i = shift % len(fs)
    a = SymbolicExpr([(1, "tr", fs)])
    b = SymbolicExpr([(1, "tr", fs[i:] + fs[:i])])
    assert a == b


@given(matrix_lists)
def test_matrix_products_do_not_commute_under_merge(fs):
    rev = tuple(reversed(fs))
    a = SymbolicExpr([(1, "mat", fs)])
    b = SymbolicExpr([(1, "mat", rev)])
    assert (a == b) == (fs == rev)


@given(st.lists(st.integers(0, 3), min_size=2, max_size=4))
def test_boundary_slots_are_symmetric(orders):
    s = len(orders)
    a = SymbolicExpr([(1, "bf", (rho(s),) + tuple(du(o) for o in orders))])
    b = SymbolicExpr([(1, "bf", (rho(s),) + tuple(du(o) for o in reversed(orders)))])
    assert a == b


@given(matrix_lists, matrix_lists, st.integers(-5, 5), st.integers(-5, 5))
def test_material_derivative_is_linear(f1, f2, a, b):
    e1 = SymbolicExpr([(1, "tr", f1)])
    e2 = SymbolicExpr([(1, "as", f2)])
    lhs = sym.material_derivative(e1.scale(a) + e2.scale(b))
    rhs = sym.material_derivative(e1).scale(a) + sym.material_derivative(e2).scale(b)
    assert lhs == rhs


def test_product_rule_on_trace_of_square():
    e = sym.material_derivative(SymbolicExpr([(1, "tr", (g(0), g(0)))]))
    expect = SymbolicExpr([(2, "tr", (g(1), g(0))), (-2, "tr", (g(0), g(0), g(0)))])
    assert e == expect


def test_first_divergence_and_curl():
    assert sym.div_series(1) == SymbolicExpr([(1, "tr", (g(0), g(0)))])
    assert sym.curl_series(1) == SymbolicExpr([(-1, "as", (gy(), g(0))), (1, "as", (g(0), g(0)))])


def test_second_divergence():
    merged = sym.div_series(2)
    assert merged.coefficient("tr", (g(0), g(1))) == 3
    assert merged.coefficient("tr", (g(0), g(0), g(0))) == -2
    ordered = sym.div_series(2, merge=False)
    assert ordered.coefficient("tr", (g(0), g(1))) == 1
    assert ordered.coefficient("tr", (g(1), g(0))) == 2


def test_curl_golden():
    expect = SymbolicExpr.from_json((GOLDEN / "curl_k2.json").read_text())
    assert sym.curl_series(2) == expect


def test_normal_trace_first_orders():
    assert sym.normal_trace_series(1) == SymbolicExpr([(-1, "bf", (rho(2), du(0), du(0)))])
    e = sym.normal_trace_series(2, merge=False)
    assert e.coefficient("bf", (rho(3), du(0), du(0), du(0))) == -1
    assert e.coefficient("bf", (rho(2), du(1), du(0))) == -1
    assert e.coefficient("bf", (rho(2), du(0), du(1))) == -2


@pytest.mark.parametrize("k", range(1, 9))
def test_kernel_coefficients_are_binomial(k):
    assert sym.circulation_kernel(k) == [math.comb(k, r) for r in range(1, k + 1)]
    assert sym.circulation_kernel_by_recursion(k) == sym.circulation_kernel(k)


@pytest.mark.parametrize("k", range(1, 6))
def test_series_stay_in_declared_shapes(k):
    for e in (sym.div_series(k), sym.curl_series(k), sym.normal_trace_series(k), sym.circulation_expr(k)):
        assert sym.closure_ok(e)


def test_json_and_pretty_are_deterministic():
    e = sym.curl_series(3)
    assert SymbolicExpr.from_json(e.to_json()) == e
    assert e.pretty() == SymbolicExpr.from_json(e.to_json()).pretty()


def test_malformed_terms_are_rejected():
    with pytest.raises(MalformedExpr):
        SymbolicExpr([(1, "tr", (du(0),))])
    with pytest.raises(MalformedExpr):
        SymbolicExpr([(1, "bf", (rho(2), du(0)))])
    with pytest.raises(MalformedExpr):
        SymbolicExpr([(1.5, "tr", (g(0),))])
    with pytest.raises(MalformedExpr):
        SymbolicExpr([(1, "vec", (g(0), psi(0), g(1)))])


def test_order_caps():
    with pytest.raises(OrderTooLarge):
        sym.div_series(sym.MATRIX_CAP + 1)
    with pytest.raises(OrderTooLarge):
        sym.circulation_kernel(sym.KERNEL_CAP + 1)


def test_coefficient_extraction():
    assert sym.extract_coefficient(sym.div_series(1), (2, (0, 0), "pure")) == 1
    assert sym.extract_coefficient(sym.curl_series(1), (1, (0,), "grad_y")) == -1
    assert sym.extract_coefficient(sym.normal_trace_series(1), (2, (0, 0), "boundary")) == -1
    assert sym.extract_coefficient(sym.div_series(1), (3, (0, 0), "pure")) == 0
