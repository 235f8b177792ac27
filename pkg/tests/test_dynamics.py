import numpy as np
import pytest

from ahtlab.dynamics import (
    AhtState,
    TestBattery as Battery,
    courant_rate,
    dissipation_ratio,
    rearrangement_integrals,
    replace_tracers,
    run,
    step,
    transport_cost,
)
from ahtlab.errors import CflViolation, WrongDomain
from ahtlab.geometry import VectorField
from ahtlab.presets import gradient_steady, ipm_embed, random_smooth, rotation

from conftest import sup


def test_battery_names_match_values(torus64):
    y = random_smooth(torus64, 1)
    b = Battery.for_field(y)
    assert len(b.names) == b.evaluate(y.values).shape[0] == 18


def test_rearrangement_integrals_are_invariant_under_relabelling(torus64):
    g = torus64
    y = random_smooth(g, 2)
    shifted = VectorField(g, np.roll(y.values, 5, axis=1))
    b = Battery.for_field(y)
    assert np.allclose(rearrangement_integrals(y, b), rearrangement_integrals(shifted, b), rtol=1e-13, atol=1e-15)


def test_cfl_violation_is_raised(torus64):
    s = AhtState.initial(random_smooth(torus64, 1))
    with pytest.raises(CflViolation):
        step(s, 10.0 / courant_rate(torus64, s.u.values))


def test_gradient_state_is_steady(torus64):
    s = AhtState.initial(gradient_steady(torus64, 1))
    out = run(s, 1.0, 0.5)
    assert len(out) == 1
    assert out[0][0].steps == 0


def test_ipm_first_component_stays_zero(torus64):
    out = run(AhtState.initial(ipm_embed(torus64, 3)), 0.5, 0.25)
    assert all(rec.y1_sup <= 1e-12 for _, rec in out)


def test_step_is_reversible(torus64):
    s0 = AhtState.initial(random_smooth(torus64, 4, kmax=3))
    dt = 0.2 / courant_rate(torus64, s0.u.values)
    s1 = step(s0, dt, filtered=False)
    s2 = step(s1, -dt, filtered=False)
    assert sup(s2.y.values - s0.y.values) < 1e-8


def test_tracers_follow_the_rotation(disk32):
    s = replace_tracers(AhtState.initial(rotation(disk32, 0.3)), [(0.5, 0.0)])
    out = run(s, 0.5, 0.5, filtered=False, dt_max=0.05)
    x = out[-1][0].tracers[0]
    assert np.hypot(*x) == pytest.approx(0.5, abs=1e-6)
    assert x[1] > 0


def test_cost_decreases_and_identity_holds(disk32):
    out = run(AhtState.initial(rotation(disk32, 0.3, perturb=0.1, seed=1)), 0.5, 0.25, include_initial=True)
    recs = [r for _, r in out]
    assert recs[-1].cost < recs[0].cost
    assert max(dissipation_ratio(a, b) for a, b in zip(recs, recs[1:])) < 1e-3


def test_cost_needs_bounded_domain(torus64):
    with pytest.raises(WrongDomain):
        transport_cost(random_smooth(torus64, 1))


def test_rotation_needs_bounded_domain(torus64):
    with pytest.raises(WrongDomain):
        rotation(torus64)
