import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahtlab import calculus as calc
from ahtlab.geometry import Domain, make_grid
from ahtlab.presets import random_smooth, smooth_scalar

from conftest import sup


def test_fornberg_exact_central_difference():
    w = calc.fornberg_weights(Fraction(0), [Fraction(j) for j in (-1, 0, 1)], 2)
    assert w == [1, -2, 1]


@given(st.integers(1, 4), st.integers(1, 3))
def test_fornberg_weights_reproduce_monomials(m, half):
    if m > 2 * half:
        return
    nodes = [Fraction(j) for j in range(-half, half + 1)]
    w = calc.fornberg_weights(Fraction(0), nodes, m)
    for p in range(2 * half + 1):
        got = sum(wi * x**p for wi, x in zip(w, nodes))
        assert got == (math.factorial(m) if p == m else 0)


def test_torus_derivatives_are_spectral(torus64):
    g = torus64
    f = np.sin(3 * g.x1) * np.cos(2 * g.x2)
    d = calc.grad(g, f)
    assert sup(d[0] - 3 * np.cos(3 * g.x1) * np.cos(2 * g.x2)) < 1e-12
    assert sup(d[1] + 2 * np.sin(3 * g.x1) * np.sin(2 * g.x2)) < 1e-12


@pytest.mark.parametrize("dom", [Domain.disk(), Domain.annulus()])
def test_polar_derivatives_fourth_order(dom):
    errs = []
    for n in (16, 32):
        g = make_grid(dom, (n, 64))
        f = np.exp(0.5 * g.x1) * np.sin(g.x2)
        d = calc.grad(g, f)
        errs.append(sup(d[0] - 0.5 * f))
    assert errs[0] / errs[1] > 10


def test_div_curl_of_gradient_and_perp(any_grid):
    g = any_grid
    phi = smooth_scalar(g, 1, kmax=2)
    curl = calc.curl(g, calc.grad(g, phi))
    div = calc.div(g, calc.perp_grad(g, phi))
    tol = 1e-10 if g.kind == "torus" else 1e-3
    assert sup(curl) < tol * sup(phi)
    assert sup(div) < tol * sup(phi)


def test_laplacian_of_quadratic_on_disk(disk32):
    g = disk32
    lap = calc.laplacian(g, g.x1**2 + 3 * g.x2**2)
    assert sup(lap - 8.0) < 1e-8


def test_filter_leaves_low_modes(torus64):
    g = torus64
    f = np.cos(g.x1) + np.sin(4 * g.x2)
    assert sup(calc.mode_filter(g, f) - f) < 1e-14


def test_filter_damps_top_modes(torus64):
    g = torus64
    f = np.cos(31 * g.x1)
    assert sup(calc.mode_filter(g, f)) < 0.1


def test_surrogate_norm_dominates_sup(any_grid):
    v = random_smooth(any_grid, 2)
    assert calc.surrogate_norm(any_grid, v.values) >= v.sup()
