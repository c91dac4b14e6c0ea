import numpy as np
import pytest

from landau_limit.grid import MomentumGrid


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=20240611))


@pytest.fixture(scope="session")
def small_grid():
    return MomentumGrid(12, 6.0)


@pytest.fixture(scope="session")
def tiny_grid():
    return MomentumGrid(8, 5.0)
