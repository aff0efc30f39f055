import numpy as np
import pytest
from pydantic import TypeAdapter, ValidationError

from point_interaction.core.errors import DomainError, SpectralMarginError
from point_interaction.geometry import (
    DiskSpec,
    DiskUnionSpec,
    DomainSpec,
    Hyperplane,
    PolygonSpec,
    RectangleSpec,
    atlas_directions,
    build_domain,
    interior_reflection_test,
    reflect,
    reflection_atlas,
)


class TestDomainSpec:
    def test_validate__discriminated_union(self) -> None:
        spec = TypeAdapter(DomainSpec).validate_python({"kind": "rectangle", "a": 2.0, "b": 1.0})
        assert isinstance(spec, RectangleSpec)
        assert spec.resolution == 0.025

    def test_validate__rejects_unknown_field(self) -> None:
        with pytest.raises(ValidationError):
            DiskSpec(radius=1.0, colour="red")  # type: ignore[call-arg]

    def test_validate__rejects_nonpositive_resolution(self) -> None:
        with pytest.raises(ValidationError):
            DiskSpec(radius=1.0, resolution=0.0)

    def test_validate__disk_union_lengths(self) -> None:
        with pytest.raises(ValidationError):
            DiskUnionSpec(centers=[(0.0, 0.0), (1.0, 0.0)], radii=[1.0])

    def test_validate__polygon_needs_three_vertices(self) -> None:
        with pytest.raises(ValidationError):
            PolygonSpec(vertices=[(0.0, 0.0), (1.0, 0.0)])


class TestBuildDomain:
    def test_build_domain__square_lattice(self, square_grid) -> None:
        assert square_grid.n_nodes == 19 * 19
        assert square_grid.dim == 2
        assert np.all((square_grid.coords > 0) & (square_grid.coords < 1))

    def test_build_domain__too_coarse(self) -> None:
        with pytest.raises(DomainError):
            build_domain(DiskSpec(radius=1.0, resolution=0.5))

    def test_build_domain__disconnected_union(self) -> None:
        spec = DiskUnionSpec(centers=[(-2.0, 0.0), (2.0, 0.0)], radii=[1.0, 1.0], resolution=0.1)
        with pytest.raises(DomainError):
            build_domain(spec)

    def test_boundary_points__lie_on_the_circle(self, disk_grid) -> None:
        radii = np.linalg.norm(disk_grid.boundary_points, axis=1)
        assert radii == pytest.approx(np.ones_like(radii), abs=1e-12)

    def test_operator__symmetric(self, disk_grid) -> None:
        difference = disk_grid.operator - disk_grid.operator.T
        assert abs(difference).max() == 0.0


class TestDiscreteOperator:
    def test_solve__reproduces_linear_harmonic(self, disk_grid) -> None:
        # Arrange
        data = disk_grid.boundary_points[:, 0] + 2.0 * disk_grid.boundary_points[:, 1]

        # Act
        values = disk_grid.solve(0.0, disk_grid.boundary_rhs(data))

        # Assert
        expected = disk_grid.coords[:, 0] + 2.0 * disk_grid.coords[:, 1]
        assert values == pytest.approx(expected, abs=1e-9)

    def test_interpolate__linear_field_with_ghosts(self, disk_grid) -> None:
        values = disk_grid.coords[:, 0]
        data = disk_grid.boundary_points[:, 0]
        points = np.array([[0.0, 0.0], [0.33, -0.21], [0.93, 0.1]])
        result = disk_grid.interpolate(values, points, data)
        assert result == pytest.approx(points[:, 0], abs=1e-9)

    def test_discrete_lambda0__square(self, square_grid) -> None:
        assert square_grid.discrete_lambda0 == pytest.approx(2.0 * np.pi**2, rel=1e-2)

    def test_discrete_lambda0__disk(self, disk_grid) -> None:
        assert disk_grid.discrete_lambda0 == pytest.approx(2.404825557695773**2, rel=3e-2)

    def test_check_margin__above_ground_level(self, disk_grid) -> None:
        with pytest.raises(SpectralMarginError):
            disk_grid.solve(-1.01 * disk_grid.discrete_lambda0, np.ones(disk_grid.n_nodes))

    def test_interpolation_weights__sum_to_one(self, disk_grid) -> None:
        nodes, weights = disk_grid.interpolation_weights(np.array([0.12, -0.37]))
        assert weights.sum() == pytest.approx(1.0)
        assert len(nodes) == 4

    def test_interpolation_weights__near_boundary(self, disk_grid) -> None:
        with pytest.raises(DomainError):
            disk_grid.interpolation_weights(np.array([0.99, 0.0]))

    def test_l2_norm__constant(self, square_grid) -> None:
        norm = square_grid.l2_norm(np.ones(square_grid.n_nodes))
        assert norm == pytest.approx(np.sqrt(square_grid.measure))


class TestHyperplane:
    def test_init__rejects_non_unit_normal(self) -> None:
        with pytest.raises(DomainError):
            Hyperplane((1.0, 1.0), 0.0)

    def test_from_normal__normalizes(self) -> None:
        plane = Hyperplane.from_normal(np.array([3.0, 4.0]), 5.0)
        assert plane.n == pytest.approx([0.6, 0.8])
        assert plane.offset == pytest.approx(1.0)

    def test_reflect_points__involution(self) -> None:
        plane = Hyperplane.through(np.array([1.0, 2.0, -1.0]), np.array([0.1, 0.2, 0.3]))
        points = np.random.default_rng(0).normal(size=(5, 3))
        mirrored = reflect(points, plane)
        assert reflect(mirrored, plane) == pytest.approx(points)
        assert plane.signed_distance(mirrored) == pytest.approx(-plane.signed_distance(points))

    def test_reflect__raster_across_axis(self, square_grid) -> None:
        # Arrange
        plane = Hyperplane((1.0, 0.0), 0.7)
        cap = square_grid.coords[:, 0] > 0.7 + 1e-9
        raster = square_grid.lattice_mask(cap)

        # Act
        mirrored = reflect(raster, plane, square_grid)

        # Assert
        expected = square_grid.lattice_mask((square_grid.coords[:, 0] > 0.4 + 1e-9) & (square_grid.coords[:, 0] < 0.7 - 1e-9))
        assert np.array_equal(mirrored, expected)
        assert np.array_equal(reflect(mirrored, plane, square_grid), raster)

    def test_reflect__straddling_raster(self, square_grid) -> None:
        raster = square_grid.lattice_mask(square_grid.coords[:, 0] > 0.5)
        with pytest.raises(DomainError):
            reflect(raster, Hyperplane((1.0, 0.0), 0.6), square_grid)


class TestInteriorReflection:
    def test_interior_reflection_test__disk_cap(self, disk_grid) -> None:
        side = interior_reflection_test(disk_grid, Hyperplane((1.0, 0.0), 0.5))
        assert side is not None
        assert np.all(disk_grid.coords[side, 0] > 0.5)
        assert len(side) == np.count_nonzero(disk_grid.coords[:, 0] > 0.5 + 1e-9)

    def test_interior_reflection_test__diameter_is_not_proper(self, disk_grid) -> None:
        assert interior_reflection_test(disk_grid, Hyperplane((0.0, 1.0), 0.0)) is None

    def test_interior_reflection_test__larger_side(self, square_grid) -> None:
        assert interior_reflection_test(square_grid, Hyperplane((1.0, 0.0), 0.3)) is None

    def test_interior_reflection_test__orientation(self, disk_grid) -> None:
        plane = Hyperplane((1.0, 0.0), 0.5)
        assert interior_reflection_test(disk_grid, plane) is not None
        assert interior_reflection_test(disk_grid, plane.flipped()) is None

    def test_interior_reflection_test__plane_misses(self, disk_grid) -> None:
        with pytest.raises(DomainError):
            interior_reflection_test(disk_grid, Hyperplane((1.0, 0.0), 2.0))


class TestReflectionAtlas:
    def test_atlas_directions__unit_vectors(self) -> None:
        for dim, count in ((2, 8), (3, 26), (3, 40)):
            directions = atlas_directions(dim, count)
            assert directions.shape == (count, dim)
            assert np.linalg.norm(directions, axis=1) == pytest.approx(np.ones(count))

    def test_reflection_atlas__disk_centre_is_admissible(self, disk_grid, disk_atlas) -> None:
        centre = disk_grid.nearest_node(np.zeros(2))
        rim = disk_grid.nearest_node(np.array([0.9, 0.0]))
        assert disk_atlas.admissible[centre]
        assert disk_atlas.sigma[rim]
        assert len(disk_atlas.entries) > 0

    def test_reflection_atlas__sliding_equals_admitted_for_convex_domain(self, disk_atlas) -> None:
        assert np.array_equal(disk_atlas.sigma_prime, disk_atlas.sigma)
        assert len(disk_atlas.sliding_hyperplanes) <= len(disk_atlas.hyperplanes)

    def test_reflection_atlas__governing_set_for_convex_domain(self, disk_atlas) -> None:
        assert np.array_equal(disk_atlas.governing_admissible(), disk_atlas.admissible)


@pytest.fixture(scope="module")
def union_atlas():
    grid = build_domain(DiskUnionSpec(resolution=1.0 / 20.0))
    return reflection_atlas(grid, threads=4)


class TestReflectionAtlasNonConvex:
    def test_reflection_atlas__sliding_subset(self, union_atlas) -> None:
        assert np.all(union_atlas.sigma_prime <= union_atlas.sigma)
        assert np.any(union_atlas.sigma_prime)
        assert len(union_atlas.sliding_hyperplanes) <= len(union_atlas.hyperplanes)

    def test_reflection_atlas__symmetry_segment_is_admissible(self, union_atlas) -> None:
        # Arrange
        coords = union_atlas.grid.coords
        segment = (np.abs(coords[:, 1]) < 1e-9) & (np.abs(coords[:, 0]) <= 0.75 + 1e-9)

        # Act
        admissible = union_atlas.governing_admissible()

        # Assert
        assert np.count_nonzero(segment) == 31
        assert np.all(admissible[segment])
        assert np.all(np.abs(coords[admissible, 0]) <= 0.75 + union_atlas.grid.spacing)

    def test_reflection_atlas__governing_set_for_nonconvex_domain(self, union_atlas) -> None:
        assert not union_atlas.grid.shape.convex
        assert np.array_equal(union_atlas.governing_admissible(), union_atlas.admissible_prime)
