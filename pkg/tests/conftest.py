import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from parrotbench import get_system, sample_trajectory


@pytest.fixture(scope="session")
def lorenz_spec():
    return get_system("lorenz")


@pytest.fixture(scope="session")
def lorenz_series(lorenz_spec):
    """A 3000-point normalized Lorenz trajectory shared across tests."""
    return sample_trajectory(lorenz_spec, 30, 3000, seed=0)


@pytest.fixture(scope="session")
def lorenz_long(lorenz_spec):
    """A 20000-point normalized Lorenz trajectory for long-series metrics."""
    return sample_trajectory(lorenz_spec, 30, 20000, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
