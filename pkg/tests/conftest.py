import numpy as np
import pytest

from point_interaction.dirichlet import eigenbasis
from point_interaction.geometry import (
    BallSpec,
    DiskSpec,
    RectangleSpec,
    build_domain,
    reflection_atlas,
)


@pytest.fixture(scope="session")
def disk_grid():
    return build_domain(DiskSpec(radius=1.0, resolution=1.0 / 20.0))


@pytest.fixture(scope="session")
def disk_basis(disk_grid):
    return eigenbasis(disk_grid, 20)


@pytest.fixture(scope="session")
def square_grid():
    return build_domain(RectangleSpec(a=1.0, b=1.0, resolution=1.0 / 20.0))


@pytest.fixture(scope="session")
def square_basis(square_grid):
    return eigenbasis(square_grid, 20)


@pytest.fixture(scope="session")
def ball_grid():
    return build_domain(BallSpec(radius=1.0, resolution=1.0 / 10.0))


@pytest.fixture(scope="session")
def ball_basis(ball_grid):
    return eigenbasis(ball_grid, 20)


@pytest.fixture(scope="session")
def disk_atlas(disk_grid):
    return reflection_atlas(disk_grid, 16, 32)


@pytest.fixture(scope="session")
def disk_centre():
    return np.zeros(2)
