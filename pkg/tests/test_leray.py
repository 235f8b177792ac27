import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahtlab import calculus as calc
from ahtlab.errors import IncompatibleData
from ahtlab.geometry import Domain, ScalarField, make_grid
from ahtlab.leray import (
    DivCurlData,
    div_curl_reconstruct,
    estimate_projector_norm,
    estimate_regularity_constant,
    harmonic_field,
    leray_project,
    projection_tolerance,
    reconstruction_residuals,
)
from ahtlab.presets import gradient_steady, random_smooth, rotation, rotation_velocity

from conftest import sup


@given(st.integers(0, 50))
def test_torus_projection_is_divergence_free_and_idempotent(seed):
    grid = make_grid(Domain.torus(), (32, 32))
    y = random_smooth(grid, seed, kmax=3)
    u, _ = leray_project(y)
    assert sup(calc.div(grid, u.values)) < 1e-10
    u2, _ = leray_project(u)
    assert sup(u2.values - u.values) < 1e-12


def test_projection_is_linear(any_grid):
    a = random_smooth(any_grid, 1)
    b = random_smooth(any_grid, 2)
    pa, _ = leray_project(a)
    pb, _ = leray_project(b)
    pab, _ = leray_project(a * 2.0 + b)
    assert sup(pab.values - 2 * pa.values - pb.values) < 1e-10


def test_gradient_projects_to_zero(any_grid):
    y = gradient_steady(any_grid, 3)
    u, _ = leray_project(y)
    assert u.sup() < 50 * projection_tolerance(any_grid) * y.sup()


def test_rotation_projection_is_exact(disk32):
    u, _ = leray_project(rotation(disk32, 0.3))
    assert sup(u.values - rotation_velocity(disk32, 0.3).values) < 1e-12


def test_disk_projection_tangent_and_converging():
    divs = []
    for n in (16, 32):
        g = make_grid(Domain.disk(), (n, 2 * n))
        y = random_smooth(g, 7)
        u, _ = leray_project(y)
        assert sup(u.normal_trace()) < 1e-12
        divs.append(sup(calc.div(g, u.values)))
    assert divs[0] / divs[1] > 3.5


def test_reconstruction_round_trip_disk():
    g = make_grid(Domain.disk(), (64, 128))
    f0 = random_smooth(g, 4, kmax=3)
    f = div_curl_reconstruct(DivCurlData.of(f0))
    assert sup(f.values - f0.values) / f0.sup() < 1e-6


def test_reconstruction_round_trip_torus(torus64):
    f0 = random_smooth(torus64, 4)
    f = div_curl_reconstruct(DivCurlData.of(f0))
    assert sup(f.values - f0.values) < 1e-12


def test_harmonic_field_is_recovered_from_its_circulation(annulus32):
    g = annulus32
    zero = ScalarField.zeros(g)
    data = DivCurlData(zero, zero, np.zeros((2, g.shape[1])), np.array([2 * math.pi]))
    f = div_curl_reconstruct(data)
    assert sup(f.values - harmonic_field(g)) < 1e-10
    res = reconstruction_residuals(f, data)
    assert max(res["div"], res["bc"], res["circ"]) < 1e-10
    assert res["curl"] < 1e-3


def test_incompatible_div_and_trace(disk32):
    g = disk32
    data = DivCurlData(ScalarField(g, np.ones(g.shape)), ScalarField.zeros(g), np.zeros((1, g.shape[1])))
    with pytest.raises(IncompatibleData):
        div_curl_reconstruct(data)


def test_constant_estimates_are_positive_and_bounded(disk32, annulus32):
    for g in (disk32, annulus32):
        assert 0 < estimate_regularity_constant(g, trials=10) < 5
        assert 1.0 <= estimate_projector_norm(g, trials=5) < 5


def test_estimator_needs_ten_trials(disk32):
    with pytest.raises(ValueError):
        estimate_regularity_constant(disk32, trials=3)
