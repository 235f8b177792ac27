import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ahtlab.geometry import Domain, make_grid

settings.register_profile("lab", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture(scope="session")
def torus64():
    return make_grid(Domain.torus(), (64, 64))


@pytest.fixture(scope="session")
def disk32():
    return make_grid(Domain.disk(), (32, 64))


@pytest.fixture(scope="session")
def annulus32():
    return make_grid(Domain.annulus(), (32, 64))


@pytest.fixture(params=["torus", "disk", "annulus"])
def any_grid(request, torus64, disk32, annulus32):
    return {"torus": torus64, "disk": disk32, "annulus": annulus32}[request.param]


def sup(a):
    return float(np.max(np.abs(a)))
