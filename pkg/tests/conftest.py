import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from abcdwaves.discretize import Grid

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid30():
    return Grid(30.0, 2048)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
