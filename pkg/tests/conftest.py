import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from layercalc.instances import build_instance, list_builtin_instances, make_abstract

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

PRESET_NAMES = [d["name"] for d in list_builtin_instances()]


@pytest.fixture(scope="session")
def presets():
    return {name: build_instance({"preset": name}) for name in PRESET_NAMES}


@pytest.fixture(scope="session")
def laplace(presets):
    return presets["laplace-1d-quarter"]


@pytest.fixture(scope="session")
def abstract_complex():
    return make_abstract(7, (4, 3, 2, 2))


@pytest.fixture(scope="session")
def abstract_hermitian_real():
    return make_abstract(3, (3, 3, 2, 2), hermitian=True, real=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
