import numpy as np
import pytest

import degennes as dg


@pytest.fixture(scope="session")
def colloc160():
    return dg.Discretization(dg.Scheme.COLLOCATION, 15.0, 160)


@pytest.fixture(scope="session")
def colloc200():
    return dg.Discretization(dg.Scheme.COLLOCATION, 15.0, 200)


@pytest.fixture(scope="session")
def band_wide(colloc160):
    """Two-band table over [-2, 4], shared by the continuation tests."""
    grid = np.arange(-2.0, 4.0001, 0.1)
    return dg.band_table(dg.Family.DEGENNES, grid, 2, colloc160)


@pytest.fixture(scope="session")
def r0(band_wide):
    return dg.estimate_r0(band_wide)
