import numpy as np
import pytest
from fractions import Fraction

from ahtlab import symbolic as sym
from ahtlab.errors import InsufficientOrder, MissingFactor, WrongLocus
from ahtlab.geometry import Domain, make_grid
from ahtlab.kato import Context, central_weights, direct_Du, evaluate_expr, fd_oracle, kato_ladder, relative_error, series_residuals
from ahtlab.presets import gradient_steady, random_smooth, rotation

from conftest import sup


def test_central_weights_second_derivative():
    assert central_weights(2, 1) == [Fraction(1), Fraction(-2), Fraction(1)]


def test_trace_of_gradient_square_matches_direct(torus64):
    g = torus64
    y = random_smooth(g, 1)
    ctx = Context(g, y.values, [y.values])
    e = sym.SymbolicExpr([(1, "tr", (sym.g(0), sym.g(0)))])
    J = ctx.matrix(sym.g(0))
    direct = np.einsum("ab...,ba...->...", J, J)
    assert sup(evaluate_expr(e, ctx) - direct) < 1e-12


def test_boundary_form_needs_boundary(disk32):
    y = rotation(disk32)
    ctx = Context(disk32, y.values, [y.values])
    with pytest.raises(WrongLocus):
        evaluate_expr(sym.normal_trace_series(1), ctx)


def test_missing_ladder_level(torus64):
    y = random_smooth(torus64, 1)
    ctx = Context(torus64, y.values, [y.values])
    with pytest.raises(MissingFactor):
        evaluate_expr(sym.div_series(2), ctx)


def test_unit_normal_form_on_disk(disk32):
    # grad rho . x = |x| = 1 on the unit circle
    g = disk32
    x = np.stack([g.x1, g.x2])
    ctx = Context(g, x, [x])
    e = sym.SymbolicExpr([(1, "bf", (sym.rho(1), sym.du(0)))])
    assert sup(evaluate_expr(e, ctx, "boundary") - 1.0) < 1e-12


def test_first_level_matches_direct_formula_on_torus(torus64):
    y = random_smooth(torus64, 2, kmax=3)
    d = kato_ladder(y, 1)
    Du = direct_Du(y).values
    assert sup(d.fields[1] - Du) < 1e-10 * sup(Du)


def test_first_level_matches_direct_formula_on_disk(disk32):
    y = rotation(disk32, 0.3, perturb=0.1, seed=1)
    d = kato_ladder(y, 1)
    Du = direct_Du(y).values
    assert sup(d.fields[1] - Du) < 1e-3 * sup(Du)


def test_rotation_ladder_matches_direct_formula():
    g = make_grid(Domain.disk(), (24, 48))
    a = 0.3
    y = rotation(g, a)
    d = kato_ladder(y, 2)
    assert sup(d.fields[1] - direct_Du(y).values) < 1e-8


def test_steady_ladder_vanishes(torus64):
    d = kato_ladder(gradient_steady(torus64, 1), 3)
    assert max(sup(f) for f in d.fields) < 1e-12


def test_series_residuals_shrink_under_refinement():
    res = []
    for n in (32, 64):
        g = make_grid(Domain.annulus(), (n, 2 * n))
        res.append(series_residuals(kato_ladder(random_smooth(g, 3, kmax=3), 2)))
    for coarse, fine in zip(*res):
        assert fine[0] < coarse[0] / 2 and fine[1] < coarse[1] / 2


def test_ladder_access_beyond_order(torus64):
    d = kato_ladder(random_smooth(torus64, 1), 1)
    with pytest.raises(InsufficientOrder):
        d.at(2, [(0.0, 0.0)])


def test_oracle_agrees_on_small_torus():
    g = make_grid(Domain.torus(), (32, 32))
    y = random_smooth(g, 5, kmax=2)
    pts = np.array([[0.3, 1.0], [2.0, 4.0], [5.0, 0.5]])
    d = kato_ladder(y, 2)
    for k in (1, 2):
        assert relative_error(d.at(k, pts), fd_oracle(y, pts, k).values) < 1e-4
