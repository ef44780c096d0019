import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from uamo.model import ModelParams

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def p68():
    return ModelParams(0.6, 0.8, theta=0.13)


@pytest.fixture
def p59():
    return ModelParams(0.5, 0.9, theta=0.2)
