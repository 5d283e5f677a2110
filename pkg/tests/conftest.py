import pytest
from hypothesis import HealthCheck, settings

from winmdp.datasets import load_branching, load_coin_flip, load_reopening

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def reopening():
    return load_reopening()


@pytest.fixture
def reopening_mp():
    return load_reopening("mp")


@pytest.fixture
def coin_flip():
    return load_coin_flip()


@pytest.fixture
def branching():
    return load_branching()
