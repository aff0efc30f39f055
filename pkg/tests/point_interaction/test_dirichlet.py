import numpy as np
import pytest

from point_interaction.core.errors import DomainError, NumericalError
from point_interaction.dirichlet import (
    BasisSource,
    eigenbasis,
    green_norm,
    group_levels,
    lambda0,
)

FIRST_J0_ZERO = 2.404825557695773


class TestGroupLevels:
    def test_group_levels__degenerate_pair(self) -> None:
        levels, multiplicities = group_levels(np.array([1.0, 2.0, 2.0 + 1e-9, 3.0]))
        assert levels.tolist() == [0, 1, 1, 2]
        assert multiplicities.tolist() == [1, 2, 1]


class TestEigenbasis:
    def test_eigenbasis__analytic_square(self, square_basis) -> None:
        assert square_basis.source == BasisSource.ANALYTIC_RECTANGLE
        assert square_basis.lambda0 == pytest.approx(2.0 * np.pi**2)
        assert square_basis.multiplicities[1] == 2
        assert square_basis.orthonormality_defect() < 1e-8

    def test_eigenbasis__numeric_disk(self, disk_basis) -> None:
        assert disk_basis.source == BasisSource.NUMERIC_GRID
        assert disk_basis.lambda0 == pytest.approx(FIRST_J0_ZERO**2, rel=3e-2)
        assert disk_basis.multiplicities[0] == 1
        assert np.all(disk_basis.nodal_values()[:, 0] > 0)
        assert disk_basis.orthonormality_defect() < 1e-8

    def test_eigenbasis__numeric_matches_discrete_ground_level(self, disk_grid, disk_basis) -> None:
        assert disk_basis.lambda0 == pytest.approx(disk_grid.discrete_lambda0, rel=1e-10)

    def test_eigenbasis__radial_ball(self, ball_basis) -> None:
        assert ball_basis.source == BasisSource.RADIAL_BALL
        assert ball_basis.lambda0 == pytest.approx(np.pi**2)
        assert ball_basis.weyl_ratio() is None
        # psi_n(0) = n pi / sqrt(2 pi R)
        assert ball_basis.at_point(np.zeros(3))[:2] == pytest.approx(np.pi * np.array([1.0, 2.0]) / np.sqrt(2.0 * np.pi))

    def test_eigenbasis__needs_a_mode(self, disk_grid) -> None:
        with pytest.raises(DomainError):
            eigenbasis(disk_grid, 0)

    def test_eigenbasis__grid_too_coarse_for_modes(self, disk_grid) -> None:
        with pytest.raises(DomainError):
            eigenbasis(disk_grid, 200)

    def test_eigenbasis__binary_cache(self, disk_grid, disk_basis, tmp_path) -> None:
        # Arrange
        first = eigenbasis(disk_grid, 20, tmp_path)

        # Act
        second = eigenbasis(disk_grid, 20, tmp_path)

        # Assert
        assert len(list(tmp_path.glob("eigenbasis-*.bin"))) == 1
        assert np.array_equal(first.eigenvalues, second.eigenvalues)
        assert np.array_equal(first.nodal_values(), second.nodal_values())
        assert second.eigenvalues == pytest.approx(disk_basis.eigenvalues)

    def test_lambda0__positive_evaluator(self, disk_basis) -> None:
        level, ground_state = lambda0(disk_basis)
        assert level == disk_basis.lambda0
        assert ground_state(np.array([[0.0, 0.0], [0.5, 0.2]])).min() > 0


class TestGreenNorm:
    def test_green_norm__ball_at_zero_energy(self, ball_basis) -> None:
        # sum over n of (n pi)^2 / (2 pi) / (n pi)^4 = 1 / (12 pi)
        norm = green_norm(ball_basis, np.zeros(3), 0.0)
        assert norm.value == pytest.approx(1.0 / (12.0 * np.pi), rel=1e-6)
        assert norm.relative_tail < 1e-3

    def test_green_norm__ball_off_centre(self, ball_basis) -> None:
        with pytest.raises(DomainError):
            green_norm(ball_basis, np.array([0.1, 0.0, 0.0]), 1.0)

    def test_green_norm__numeric_is_exact(self, disk_basis) -> None:
        norm = green_norm(disk_basis, np.array([0.2, -0.1]), 1.0)
        assert not norm.estimated
        assert norm.value >= norm.head > 0

    def test_green_norm__decreases_with_z(self, square_basis) -> None:
        x0 = np.array([0.4, 0.55])
        values = [green_norm(square_basis, x0, z).value for z in (0.0, 1.0, 10.0)]
        assert values[0] > values[1] > values[2]

    def test_green_norm__tail_above_tolerance(self, square_basis) -> None:
        with pytest.raises(NumericalError) as e:
            green_norm(square_basis, np.array([0.5, 0.5]), 1.0, tail_tolerance=1e-12)
        assert e.value.stage == "green_norm"
