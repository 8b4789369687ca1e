import numpy as np
import pytest

from fsfir.funcspace import make_grid


@pytest.fixture(scope="session")
def grid():
    return make_grid(256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
