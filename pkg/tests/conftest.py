import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hulm.model import HulmParams

# first calls pay numba compilation, so no per-example deadline
settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_params(rng, H, D, K, scale=0.5):
    n = HulmParams.zeros(H, D, K).to_vector().size
    return HulmParams.from_vector(rng.uniform(-scale, scale, n), H, D, K)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
