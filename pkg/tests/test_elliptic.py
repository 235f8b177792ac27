import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahtlab import calculus as calc
from ahtlab.elliptic import (
    NeumannProblem,
    solve_dirichlet,
    solve_neumann,
    solve_periodic_poisson,
)
from ahtlab.errors import IncompatibleData, NonzeroMean, WrongDomain
from ahtlab.geometry import Domain, ScalarField, make_grid

from conftest import sup


@given(st.integers(1, 6), st.integers(-6, 6))
def test_periodic_poisson_inverts_laplacian(k1, k2):
    grid = make_grid(Domain.torus(), (32, 32))
    p = np.cos(k1 * grid.x1 + k2 * grid.x2)
    f = ScalarField(grid, calc.laplacian(grid, p))
    assert sup(solve_periodic_poisson(f).values - p) < 1e-12


def test_periodic_poisson_rejects_mean(torus64):
    with pytest.raises(NonzeroMean):
        solve_periodic_poisson(ScalarField(torus64, np.ones(torus64.shape)))


def test_polar_solver_on_torus_raises(torus64):
    with pytest.raises(WrongDomain):
        solve_dirichlet(ScalarField.zeros(torus64))


def test_neumann_quadratic_is_exact_on_disk(disk32):
    g = disk32
    p = 0.5 * (g.x1**2 + g.x2**2)
    prob = NeumannProblem(ScalarField(g, np.full(g.shape, 2.0)), np.ones((1, g.shape[1])))
    sol = solve_neumann(prob).values
    assert sup(sol - (p - g.mean(p))) < 1e-10


@pytest.mark.parametrize("dom", [Domain.disk(), Domain.annulus()])
def test_neumann_fourth_order_convergence(dom):
    errs = []
    for n in (16, 32):
        g = make_grid(dom, (n, 64))
        p = np.exp(g.x1) * np.cos(g.x2)
        b = np.stack([(np.einsum("cn,cn->n", calc.grad(g, p)[:, j, :], g.boundary_normals()[i])) for i, j in enumerate(g.boundary_rows)])
        sol = solve_neumann(NeumannProblem(ScalarField(g, np.zeros(g.shape)), b)).values
        errs.append(sup(sol - (p - g.mean(p))))
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] > 8


def test_incompatible_neumann_data(disk32):
    prob = NeumannProblem(ScalarField(disk32, np.ones(disk32.shape)), np.zeros((1, disk32.shape[1])))
    with pytest.raises(IncompatibleData):
        solve_neumann(prob)


def test_dirichlet_boundary_values(annulus32):
    g = annulus32
    sol = solve_dirichlet(ScalarField.zeros(g), np.array([1.0, 2.0])).values
    assert sup(sol[g.boundary_rows[0]] - 1.0) < 1e-12
    assert sup(sol[g.boundary_rows[1]] - 2.0) < 1e-12
    r = np.hypot(g.x1, g.x2)
    exact = 1.0 + np.log(r / 0.5) / np.log(3.0)
    assert sup(sol - exact) < 1e-5
