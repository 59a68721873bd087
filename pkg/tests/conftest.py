import numpy as np
import pytest

from proplab import make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def line_grid():
    return make_grid("line", 256, 12.0)


@pytest.fixture
def radial_grid():
    return make_grid("radial3d", 256, 40.0)
