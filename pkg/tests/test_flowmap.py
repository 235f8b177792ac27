import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ahtlab.dynamics import AhtState, run
from ahtlab.errors import InsufficientOrder, LeftDomain
from ahtlab.flowmap import integrate_trajectory, radius_estimate, taylor_flow
from ahtlab.kato import kato_ladder
from ahtlab.presets import random_smooth, rotation


def test_taylor_flow_at_time_zero(torus64):
    d = kato_ladder(random_smooth(torus64, 1), 2)
    pts = np.array([[1.0, 2.0], [3.0, 0.5]])
    assert np.array_equal(taylor_flow(d, pts, 2)(0.0), pts)


def test_taylor_order_limit(torus64):
    d = kato_ladder(random_smooth(torus64, 1), 2)
    with pytest.raises(InsufficientOrder):
        taylor_flow(d, [(0.0, 0.0)], 3)


def test_taylor_error_decays_with_order(torus64):
    y = random_smooth(torus64, 2, kmax=3)
    pts = np.random.default_rng(0).uniform(0, 2 * np.pi, (10, 2))
    t = 0.03
    d = kato_ladder(y, 4)
    ref = run(AhtState.initial(y, pts), t, t, filtered=False, dt_max=t / 40)[-1][0].tracers
    errs = [np.max(np.abs(taylor_flow(d, pts, K)(t) - ref)) for K in range(5)]
    assert all(b < a / 2 for a, b in zip(errs, errs[1:]))


def test_snapshot_trajectory_matches_tracers(disk32):
    y = rotation(disk32, 0.3)
    snaps = [s for s, _ in run(AhtState.initial(y), 1.0, 0.1, include_initial=True, filtered=False)]
    tr = integrate_trajectory(snaps, [(0.5, 0.0), (0.0, -0.3)])
    # the rotation preset is an exact steady rotation at rate sin(0.3) to leading order
    assert tr.final.shape == (2, 2)
    assert np.allclose(np.hypot(*tr.final.T), [0.5, 0.3], atol=1e-3)
    assert tr.error_estimate < 1e-8


def test_leaving_the_domain_is_reported(disk32):
    y = rotation(disk32, 0.3)
    snaps = [s for s, _ in run(AhtState.initial(y), 0.2, 0.1, include_initial=True)]
    with pytest.raises(LeftDomain):
        integrate_trajectory(snaps, [(1.2, 0.0)])


@given(st.floats(0.1, 3.0), st.floats(-2.0, 2.0))
def test_radius_of_geometric_norms(rho, c):
    norms = [math.exp(c) * math.factorial(k) * rho ** (-k) for k in range(8)]
    assert radius_estimate(norms) == pytest.approx(rho, rel=1e-9)


def test_radius_of_vanishing_ladder():
    assert radius_estimate([1.0, 1e-20, 0.0, 0.0]) == math.inf
