import os

# before any breather import: keep test runs from writing log files
os.environ.setdefault("BREATHER_LOG_TO_FILE", "false")
os.environ.setdefault("BREATHER_SHOW_PROGRESS", "false")

import numpy as np
import pytest

from breather.schemas.field_schema import SpatialGrid, WaveField
from breather.schemas.solver_schema import SolverConfig
from breather.services.scenarios import build_scenario


@pytest.fixture
def coarse_grid():
    return SpatialGrid.from_box(20.0, 0.02)


@pytest.fixture
def gaussian(coarse_grid):
    x = coarse_grid.x
    return WaveField(grid=coarse_grid, amplitudes=np.pi ** -0.25 * np.exp(-x ** 2 / 2))


@pytest.fixture
def sech_field(coarse_grid):
    return WaveField(grid=coarse_grid, amplitudes=2.0 / np.cosh(coarse_grid.x))


@pytest.fixture
def coarse_solver():
    return SolverConfig(dt=1e-3, snapshot_stride=10)


@pytest.fixture(scope="session")
def static_scenario():
    return build_scenario("vanishing_static")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
