import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sdlab.fields import DriftSpec
from sdlab.grid import Grid, GridFunction, GridVectorField


@pytest.fixture(scope="session")
def grid8():
    return Grid(3, 8, 2 * np.pi)


@pytest.fixture(scope="session")
def grid16():
    return Grid(3, 16, 16.0)


@pytest.fixture(scope="session")
def grid32():
    return Grid(3, 32, 16.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_f8(grid8, rng):
    return GridFunction(grid8, rng.standard_normal(grid8.shape) + 1j * rng.standard_normal(grid8.shape))


@pytest.fixture(scope="session")
def bounded_field8(grid8):
    """Smooth bounded drift on the 8^3 grid for dense-oracle comparisons."""
    return DriftSpec("smooth-random", amp=0.15, kmax=1, seed=5).on_grid(grid8)


@pytest.fixture(scope="session")
def hardy16(grid16):
    return DriftSpec("hardy", c=0.2).on_grid(grid16)


@pytest.fixture(scope="session")
def zero_field16(grid16):
    return GridVectorField.zeros(grid16)
