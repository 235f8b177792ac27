import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahtlab.errors import GridMismatch, InvalidResolution, LoopOutsideDomain
from ahtlab.geometry import (
    Domain,
    HomologyLoop,
    ScalarField,
    VectorField,
    circulations,
    field_from_bytes,
    field_from_csv,
    field_to_bytes,
    field_to_csv,
    grid_from_config,
    interpolate,
    make_grid,
)
from ahtlab.presets import random_smooth


def test_bad_resolutions_are_rejected():
    with pytest.raises(InvalidResolution):
        make_grid(Domain.torus(), (4, 64))
    with pytest.raises(InvalidResolution):
        make_grid(Domain.torus(), (63, 64))
    with pytest.raises(InvalidResolution):
        make_grid(Domain.disk(), (16, 33))


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain.annulus(1.0, 0.5)
    with pytest.raises(ValueError):
        Domain("sphere")


@pytest.mark.parametrize("dom", [Domain.torus(), Domain.disk(0.7), Domain.annulus(0.4, 1.2)])
def test_config_round_trip(dom):
    grid = make_grid(dom, (16, 32))
    again = grid_from_config(grid.to_config())
    assert again.key == grid.key


def test_area_quadrature(any_grid):
    assert any_grid.integrate(np.ones(any_grid.shape)) == pytest.approx(any_grid.domain.area, rel=1e-12)


def test_loop_counts(torus64, disk32, annulus32):
    assert len(disk32.homology_loops()) == 0
    assert len(annulus32.homology_loops()) == 1
    assert torus64.domain.n_constraints == 2


def test_loop_outside_annulus_is_rejected(annulus32):
    with pytest.raises(LoopOutsideDomain):
        annulus32.check_loop(HomologyLoop(radius=2.0))


def test_circulation_of_rotation(annulus32):
    v = VectorField(annulus32, np.stack([-annulus32.x2, annulus32.x1]))
    loop = annulus32.homology_loops()[0]
    assert circulations(v)[0] == pytest.approx(2 * math.pi * loop.radius**2, rel=1e-12)


def test_field_arithmetic_checks_grids(disk32, annulus32):
    a = ScalarField.zeros(disk32)
    b = ScalarField.zeros(annulus32)
    with pytest.raises(GridMismatch):
        a + b


@pytest.mark.parametrize("kind", ["torus", "disk", "annulus"])
def test_csv_and_binary_round_trip(kind):
    dom = {"torus": Domain.torus(), "disk": Domain.disk(), "annulus": Domain.annulus()}[kind]
    grid = make_grid(dom, (8, 16))
    v = random_smooth(grid, 3)
    back = field_from_csv(grid, field_to_csv(v))
    assert np.array_equal(back.values, v.values)
    back = field_from_bytes(field_to_bytes(v))
    assert back.grid.key == grid.key
    assert np.array_equal(back.values, v.values)


@given(st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi))
def test_torus_interpolation_is_exact_for_resolved_waves(x, y):
    grid = make_grid(Domain.torus(), (16, 16))
    f = np.sin(2 * grid.x1 - 3 * grid.x2) + np.cos(grid.x2)
    got = interpolate(grid, f, [(x, y)])[0]
    assert got == pytest.approx(math.sin(2 * x - 3 * y) + math.cos(y), abs=1e-12)


@given(st.floats(0.05, 0.95), st.floats(-math.pi, math.pi))
def test_polar_interpolation_of_smooth_function(r, th):
    grid = make_grid(Domain.disk(), (48, 64))
    f = grid.x1**2 - 0.5 * grid.x1 * grid.x2 + np.exp(grid.x2)
    x, y = r * math.cos(th), r * math.sin(th)
    got = interpolate(grid, f, [(x, y)])[0]
    assert got == pytest.approx(x * x - 0.5 * x * y + math.exp(y), abs=1e-5)
