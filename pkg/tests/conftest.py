import numpy as np
import pytest

from src.channel import Geometry, SystemParams, UncertaintyConfig, generate_realization
from src.metrics import Protocol
from src.optimizer import AOConfig, init_state, nominal_workspace, normalize_channels


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def params():
    return SystemParams(N=2, M=4, J_r=1, J_t=1)


@pytest.fixture
def params_noma():
    return SystemParams(N=3, M=4, J_r=2, J_t=2)


@pytest.fixture
def geometry():
    return Geometry()


@pytest.fixture
def channels(params, geometry):
    return generate_realization(params, geometry, UncertaintyConfig(), seed=7)


@pytest.fixture
def channels_noma(params_noma, geometry):
    return generate_realization(params_noma, geometry, UncertaintyConfig(), seed=11)


@pytest.fixture
def ao_config():
    return AOConfig(max_iterations=15, seed=0)


@pytest.fixture
def es_point(channels_noma, params_noma):
    """ES starting state and workspace on the noise-normalized channels."""
    scaled = normalize_channels(channels_noma, params_noma)
    state = init_state(Protocol.ES, scaled, params_noma, seed=0)
    return state, nominal_workspace(state, scaled, params_noma), scaled


def random_hermitian(rng, n):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (X + X.conj().T)


def crandn(rng, *shape):
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)
