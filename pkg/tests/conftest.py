import numpy as np
import pytest

from nslab.gridfn import Grid, Interval, make_bump


@pytest.fixture(scope="session")
def grid():
    return Grid(8.0, 4096)


@pytest.fixture(scope="session")
def unit_bump(grid):
    """Standard smooth bump supported in (-1, 1)."""
    return make_bump(Interval(-1.0, 1.0), 0.0, 1.0, grid)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0)
