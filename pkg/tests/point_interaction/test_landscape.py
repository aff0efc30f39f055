from dataclasses import replace

import numpy as np
import pytest

from point_interaction.core.errors import DomainError, NotAdmittedError
from point_interaction.geometry import Hyperplane, reflection_atlas
from point_interaction.landscape import (
    STATUS_OK,
    eigenvalue_map,
    gradient_chain,
    locate_minimum,
    monotonicity_audit,
    radial_profile,
    reflection_difference,
    sample_lattice,
)
from point_interaction.spectral import principal_eigenvalue
from point_interaction.specfun import SpectralParameter


@pytest.fixture(scope="module")
def square_landscape(square_grid, square_basis):
    return eigenvalue_map(square_grid, square_basis, 2.0, 0.2, threads=2)


class TestGradientChain:
    @pytest.mark.parametrize("alpha", [2.0, -2.0])
    def test_gradient_chain__matches_finite_difference(self, disk_grid, disk_basis, alpha) -> None:
        # Arrange
        x0 = np.array([0.4, 0.0])
        step = np.array([disk_grid.spacing, 0.0])
        pe = principal_eigenvalue(disk_grid, disk_basis, x0, alpha)

        # Act
        chain = gradient_chain(disk_grid, disk_basis, pe)

        # Assert
        forward = principal_eigenvalue(disk_grid, disk_basis, x0 + step, alpha).xi
        backward = principal_eigenvalue(disk_grid, disk_basis, x0 - step, alpha).xi
        expected = (forward - backward) / (2.0 * disk_grid.spacing)
        assert not chain.guarded
        assert chain.gradient[0] > 0
        assert chain.gradient[0] == pytest.approx(expected, rel=5e-2)

    def test_gradient_chain__2d_denominator_positive(self, disk_grid, disk_basis) -> None:
        pe = principal_eigenvalue(disk_grid, disk_basis, np.array([0.1, 0.3]), 2.0)
        chain = gradient_chain(disk_grid, disk_basis, pe)
        assert chain.denominator > 0
        assert chain.grad_h @ np.array([0.1, 0.3]) > 0


class TestSampleLattice:
    def test_sample_lattice__square(self, square_grid) -> None:
        points, index = sample_lattice(square_grid, 0.2)
        assert len(points) == 9
        assert points[0] == pytest.approx([0.3, 0.3])
        assert index[0].tolist() == [-1, -1]

    def test_sample_lattice__ball_is_centre_only(self, ball_grid) -> None:
        points, _ = sample_lattice(ball_grid, 0.2)
        assert points.tolist() == [[0.0, 0.0, 0.0]]


class TestEigenvalueMap:
    def test_eigenvalue_map__square(self, square_landscape) -> None:
        assert square_landscape.status == [STATUS_OK] * 9
        assert int(np.argmin(square_landscape.xi)) == 4
        assert np.all(square_landscape.xi < 0)

    def test_eigenvalue_map__gradients_agree_in_sign(self, square_landscape) -> None:
        analytic = square_landscape.gradient
        fd = square_landscape.fd_gradient
        # components along a symmetry line vanish
        significant = np.abs(analytic) > 1e-3
        assert np.any(significant)
        assert np.array_equal(np.sign(analytic[significant]), np.sign(fd[significant]))

    def test_eigenvalue_map__too_fine(self, square_grid, square_basis) -> None:
        with pytest.raises(DomainError):
            eigenvalue_map(square_grid, square_basis, 2.0, square_grid.spacing)

    def test_eigenvalue_map__failed_sample_is_flagged(self, square_grid, square_basis, mocker) -> None:
        # Arrange
        mocker.patch(
            "point_interaction.landscape.principal_eigenvalue", side_effect=DomainError("rejected source")
        )

        # Act
        landscape = eigenvalue_map(square_grid, square_basis, 2.0, 0.2)

        # Assert
        assert all(status == "failed:rejected source" for status in landscape.status)
        assert np.all(np.isnan(landscape.xi))
        assert not np.any(landscape.successful)

    def test_locate_minimum__square_centre(self, square_grid, square_landscape) -> None:
        # Arrange
        atlas = reflection_atlas(square_grid, 16, 32)

        # Act
        verdict = locate_minimum(square_landscape, atlas)

        # Assert
        assert verdict.point == pytest.approx([0.5, 0.5])
        assert verdict.centroid_distance == pytest.approx(0.0, abs=1e-12)
        assert verdict.governing_set == "sigma"
        assert verdict.inside


class TestRadialProfile:
    def test_radial_profile__disk(self, disk_grid, disk_basis) -> None:
        # Act
        profile = radial_profile(disk_grid, disk_basis, 2.0, np.array([0.0, 0.3, 0.6, 0.99]), np.array([0.0, np.pi / 2]))

        # Assert
        assert profile.shape == (2, 4)
        assert np.all(np.diff(profile[:, :3], axis=1) > 0)
        assert profile[0, :3] == pytest.approx(profile[1, :3], rel=1e-6)
        assert np.all(np.isnan(profile[:, 3]))

    def test_radial_profile__only_2d(self, ball_grid, ball_basis) -> None:
        with pytest.raises(DomainError):
            radial_profile(ball_grid, ball_basis, 0.0, np.array([0.0]), np.array([0.0]))


class TestReflectionDifference:
    def test_reflection_difference__disk_cap(self, disk_grid, disk_basis) -> None:
        # Arrange
        plane = Hyperplane((1.0, 0.0), 0.5)

        # Act
        diff = reflection_difference(disk_grid, disk_basis, np.array([0.5, 0.0]), plane, SpectralParameter.from_y(1.0))

        # Assert
        assert len(diff.values) > 0
        assert diff.minimum > 0
        assert len(diff.hopf_values) > 0
        assert diff.hopf_minimum > 0

    def test_reflection_difference__diameter_not_admitted(self, disk_grid, disk_basis, disk_centre) -> None:
        with pytest.raises(NotAdmittedError):
            reflection_difference(
                disk_grid, disk_basis, disk_centre, Hyperplane((1.0, 0.0), 0.0), SpectralParameter.from_y(1.0)
            )

    def test_reflection_difference__source_off_plane(self, disk_grid, disk_basis, disk_centre) -> None:
        with pytest.raises(NotAdmittedError):
            reflection_difference(
                disk_grid, disk_basis, disk_centre, Hyperplane((1.0, 0.0), 0.5), SpectralParameter.from_y(1.0)
            )


class TestMonotonicityAudit:
    def test_monotonicity_audit__disk(self, disk_grid, disk_basis, disk_atlas) -> None:
        # Act
        report = monotonicity_audit(disk_grid, disk_basis, 2.0, disk_atlas, pairs=2)

        # Assert
        summary = report.to_dict()
        assert 0 < summary["pairs"] <= 2
        assert summary["failed"] == 0
        assert summary["worst_margins"]["u_min"] > 0

    def test_monotonicity_audit__no_eligible_pairs(self, disk_grid, disk_basis, disk_atlas, mocker) -> None:
        mocker.patch("point_interaction.landscape.audit_point", return_value=None)
        report = monotonicity_audit(disk_grid, disk_basis, 2.0, disk_atlas)
        assert report.entries == []
        assert report.worst("u_min") is None

    def test_monotonicity_audit__pair_without_hopf_samples_fails(self, disk_grid, disk_basis, disk_atlas, mocker) -> None:
        # Arrange
        def without_hopf(*args, **kwargs):
            diff = reflection_difference(*args, **kwargs)
            return replace(diff, hopf_points=np.empty((0, disk_grid.dim)), hopf_values=np.empty(0))

        mocker.patch("point_interaction.landscape.reflection_difference", side_effect=without_hopf)

        # Act
        report = monotonicity_audit(disk_grid, disk_basis, 2.0, disk_atlas, pairs=2)

        # Assert
        assert report.entries
        assert all(entry["hopf_samples"] == 0 for entry in report.entries)
        assert report.passed == 0
        assert report.failed == len(report.entries)
