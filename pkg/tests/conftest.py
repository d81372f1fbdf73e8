"""Shared fixtures.

The backward two-soliton construction at the reference configuration is the
expensive object of the suite (~10 s); it is built once per session and
shared by the decay-rate, localized-drift, and modified-energy tests.
"""

import numpy as np
import pytest

from zaklab import Grid, MultiSolitonConfig, SolitonParams
from zaklab.dynamics import backward_construct


REFERENCE_SOLITONS = (
    SolitonParams(omega=1.0, c=-0.5, sigma=0.0, gamma=0.0),
    SolitonParams(omega=1.0, c=0.5, sigma=0.0, gamma=1.0),
)


@pytest.fixture(scope="session")
def two_soliton_config():
    return MultiSolitonConfig(REFERENCE_SOLITONS)


@pytest.fixture(scope="session")
def backward_run(two_soliton_config):
    """(grid, config, trajectory) of the reference backward construction."""
    grid = Grid(2048, 80.0)
    traj = backward_construct(grid, two_soliton_config, t_final=30.0, dt=1e-3,
                              sample_stride=100)
    return grid, two_soliton_config, traj
