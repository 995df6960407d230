import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cooprs.kernel import PrecoderSet
from cooprs.scenario import ChannelGeometry, build_parametric_scenario, build_random_scenario

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def random_precoders(rng, n_t, scale=1.0):
    draw = lambda: scale * (rng.standard_normal(n_t) + 1j * rng.standard_normal(n_t))
    return PrecoderSet(draw(), draw(), draw())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def los4_scenario():
    return build_parametric_scenario(4, ChannelGeometry(0.3, 1.0, np.pi / 9), 10.0)


@pytest.fixture(scope="session")
def small_random():
    return build_random_scenario(2, 7, 10.0)
