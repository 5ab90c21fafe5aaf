import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

from stratlab.games import builtin_prior, two_game_family_g1, two_game_family_g2  # noqa: E402

THREADS = min(2, os.cpu_count() or 1)


@pytest.fixture(scope="session")
def fig1_g1():
    return two_game_family_g1(1.0)


@pytest.fixture(scope="session")
def fig1_g2():
    return two_game_family_g2(1.0)


@pytest.fixture(scope="session")
def fig1_prior():
    return builtin_prior("fig1:gamma=1")


@pytest.fixture(scope="session")
def example41_prior():
    return builtin_prior("example41")
