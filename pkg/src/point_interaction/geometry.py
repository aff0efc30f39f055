"""Domain descriptors, their rasterization, hyperplane reflections and the Sigma sets.

A DomainGrid is the lattice origin + i * spacing restricted to the open domain.
Every interior node has one link per axis direction; a link whose neighbour is
not interior ends on the boundary at the fraction theta of a cell. The same
links define the symmetric ghost-point Dirichlet Laplacian used by the
eigen-solver and by every boundary-value problem.
"""

import logging
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Annotated, Callable, ClassVar, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator
from scipy import linalg, ndimage, sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse import linalg as sparse_linalg

from point_interaction.core.base_shape import BaseShape
from point_interaction.core.errors import DomainError, NumericalError, SpectralMarginError
from point_interaction.core.shape_registry import create_shape

logger = logging.getLogger("point_interaction")

# Constants
MIN_INTERIOR_NODES = 100
DIRECT_SOLVER_LIMIT = {2: 250_000, 3: 40_000}
DIRECT_MARGIN = 1.0 - 1e-9
ITERATIVE_MARGIN = 0.95
DENSE_EIGEN_LIMIT = 3000
FACTOR_CACHE_SIZE = 8
GHOST_LINEAR_LIMIT = 0.25
ERROR_EMPTY_DOMAIN = "Rasterized domain has {} interior nodes; at least {} are required."
ERROR_DISCONNECTED_DOMAIN = "Rasterized domain has {} connected components; expected 1."
ERROR_PLANE_MISSES = "Hyperplane {} does not cut the rasterized domain."
ERROR_MASK_STRADDLES = "Mask straddles hyperplane {}."


class _DomainBase(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    resolution: PositiveFloat = 0.025

    dim: ClassVar[int] = 2


class RectangleSpec(_DomainBase):
    kind: Literal["rectangle"] = "rectangle"
    a: PositiveFloat = 1.0
    b: PositiveFloat = 1.0


class DiskSpec(_DomainBase):
    kind: Literal["disk"] = "disk"
    radius: PositiveFloat = 1.0


class PolygonSpec(_DomainBase):
    kind: Literal["polygon"] = "polygon"
    vertices: list[tuple[float, float]] = Field(min_length=3)


class DiskUnionSpec(_DomainBase):
    kind: Literal["disk_union"] = "disk_union"
    centers: list[tuple[float, float]] = Field(
        default_factory=lambda: [(-0.75, 0.0), (0.75, 0.0)], min_length=1
    )
    radii: list[PositiveFloat] = Field(default_factory=lambda: [1.0, 1.0], min_length=1)

    @model_validator(mode="after")
    def _matching_lengths(self) -> "DiskUnionSpec":
        if len(self.centers) != len(self.radii):
            raise ValueError("centers and radii must have the same length")
        return self


class BoxSpec(_DomainBase):
    kind: Literal["box"] = "box"
    a: PositiveFloat = 1.0
    b: PositiveFloat = 1.0
    c: PositiveFloat = 1.0

    dim: ClassVar[int] = 3


class BallSpec(_DomainBase):
    kind: Literal["ball"] = "ball"
    radius: PositiveFloat = 1.0

    dim: ClassVar[int] = 3


DomainSpec = Annotated[
    Union[RectangleSpec, DiskSpec, PolygonSpec, DiskUnionSpec, BoxSpec, BallSpec],
    Field(discriminator="kind"),
]


class DomainGrid:
    """Rasterized interior of a domain with boundary links and the Dirichlet operator."""

    def __init__(self, spec: DomainSpec, shape: BaseShape):
        self.spec = spec
        self.shape = shape
        self.spacing = float(spec.resolution)
        d = shape.dim
        low, high = shape.bounding_box()
        counts = np.floor((high - low) / self.spacing + 1e-9).astype(int) + 3
        self.origin = np.asarray(low, dtype=float) - self.spacing
        self.lattice_shape = tuple(int(c) for c in counts)
        self.axes = [self.origin[k] + self.spacing * np.arange(counts[k]) for k in range(d)]

        all_index = np.indices(self.lattice_shape).reshape(d, -1).T
        inside = shape.contains(self.origin + self.spacing * all_index)
        self.mask = inside.reshape(self.lattice_shape)
        self.lattice_index = np.argwhere(self.mask)
        self.coords = self.origin + self.spacing * self.lattice_index
        self.node_index = np.full(self.lattice_shape, -1, dtype=np.int64)
        self.node_index[self.mask] = np.arange(len(self.coords))

        self.unit_steps = np.zeros((2 * d, d), dtype=np.int64)
        for k in range(d):
            self.unit_steps[2 * k, k] = 1
            self.unit_steps[2 * k + 1, k] = -1
        self._build_links()

        self._lock = threading.Lock()
        self._factors: OrderedDict[float, Callable] = OrderedDict()
        self._discrete_lambda0: Optional[float] = None

    def _build_links(self) -> None:
        n, d = self.coords.shape
        self.neighbours = np.full((n, 2 * d), -1, dtype=np.int64)
        self.theta = np.ones((n, 2 * d))
        for direction, step in enumerate(self.unit_steps):
            target = self.lattice_index + step
            self.neighbours[:, direction] = self.node_index[tuple(target.T)]
            missing = self.neighbours[:, direction] < 0
            if np.any(missing):
                start = self.coords[missing]
                end = start + self.spacing * step
                self.theta[missing, direction] = self.shape.boundary_crossing(start, end)
        owner, direction = np.nonzero(self.neighbours < 0)
        self.boundary_owner = owner
        self.boundary_direction = direction
        self.boundary_theta = self.theta[owner, direction]
        self.boundary_points = (
            self.coords[owner]
            + (self.boundary_theta * self.spacing)[:, None] * self.unit_steps[direction]
        )
        self.boundary_normals = self.shape.outward_normal(self.boundary_points)

    @property
    def dim(self) -> int:
        return self.shape.dim

    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def measure(self) -> float:
        return self.n_nodes * self.cell_volume

    @property
    def uses_direct_solver(self) -> bool:
        return self.n_nodes <= DIRECT_SOLVER_LIMIT[self.dim]

    @cached_property
    def operator(self) -> sparse.csr_matrix:
        """Symmetric M-matrix of -Delta with homogeneous Dirichlet conditions."""
        n = self.n_nodes
        h2 = self.spacing**2
        rows = [np.arange(n)]
        cols = [np.arange(n)]
        values = [np.sum(1.0 / self.theta, axis=1) / h2]
        for direction in range(self.neighbours.shape[1]):
            linked = self.neighbours[:, direction] >= 0
            rows.append(np.nonzero(linked)[0])
            cols.append(self.neighbours[linked, direction])
            values.append(np.full(np.count_nonzero(linked), -1.0 / h2))
        return sparse.csr_matrix(
            (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )

    def boundary_rhs(self, boundary_values: np.ndarray) -> np.ndarray:
        """Right-hand side contributed by Dirichlet data at the boundary points."""
        weights = boundary_values / (self.boundary_theta * self.spacing**2)
        return np.bincount(self.boundary_owner, weights=weights, minlength=self.n_nodes)

    @property
    def discrete_lambda0(self) -> float:
        """Smallest eigenvalue of the discrete Dirichlet operator."""
        with self._lock:
            if self._discrete_lambda0 is None:
                if self.n_nodes < DENSE_EIGEN_LIMIT:
                    value = linalg.eigh(self.operator.toarray(), eigvals_only=True, subset_by_index=[0, 0])[0]
                else:
                    value = sparse_linalg.eigsh(
                        self.operator, k=1, sigma=0.0, which="LM", v0=np.ones(self.n_nodes),
                        return_eigenvectors=False,
                    )[0]
                self._discrete_lambda0 = float(value)
                logger.debug(f"discrete_lambda0={self._discrete_lambda0:.12e}")
            return self._discrete_lambda0

    def check_margin(self, z: float) -> None:
        """Reject shifts -z at or above the discrete ground level."""
        if z >= 0:
            return
        margin = DIRECT_MARGIN if self.uses_direct_solver else ITERATIVE_MARGIN
        if -z >= margin * self.discrete_lambda0:
            raise SpectralMarginError(
                f"Shift {-z:.6e} violates the margin {margin} * lambda0={self.discrete_lambda0:.6e}."
            )

    def _factor(self, z: float) -> Callable:
        with self._lock:
            if z in self._factors:
                self._factors.move_to_end(z)
                return self._factors[z]
        shifted = (self.operator + z * sparse.identity(self.n_nodes, format="csr")).tocsc()
        try:
            solve = sparse_linalg.splu(shifted).solve
        except RuntimeError as e:
            raise NumericalError(f"Sparse factorization failed at z={z}: {e}", stage="helmholtz_solve") from e
        with self._lock:
            self._factors[z] = solve
            while len(self._factors) > FACTOR_CACHE_SIZE:
                self._factors.popitem(last=False)
        return solve

    def solve(self, z: float, rhs: np.ndarray, tolerance: float = 1e-8) -> np.ndarray:
        """Solve (A + z) u = rhs for the discrete Dirichlet operator A."""
        self.check_margin(z)
        if self.uses_direct_solver:
            solution = self._factor(float(z))(np.asarray(rhs, dtype=float))
        else:
            shifted = self.operator + z * sparse.identity(self.n_nodes, format="csr")
            solution, info = sparse_linalg.cg(shifted, rhs, rtol=tolerance, maxiter=20 * self.n_nodes)
            if info != 0:
                raise NumericalError(f"Conjugate gradients did not converge (info={info}).", stage="helmholtz_solve")
        if not np.all(np.isfinite(solution)):
            raise NumericalError(f"Linear solve produced non-finite values at z={z}.", stage="helmholtz_solve")
        return solution

    def residual(self, z: float, values: np.ndarray, rhs: np.ndarray) -> float:
        """Relative max-norm residual of (A + z) u = rhs."""
        applied = self.operator @ values + z * values
        scale = max(float(np.max(np.abs(rhs))), 1e-300)
        return float(np.max(np.abs(applied - rhs)) / scale)

    def extend(self, values: np.ndarray, boundary_values: Optional[np.ndarray] = None) -> np.ndarray:
        """Lattice array of interior values plus linearly extrapolated ghost values.

        Trailing dimensions of `values` (several fields at once) are kept. Nodes
        that are neither interior nor ghosts hold NaN.
        """
        values = np.asarray(values, dtype=float)
        trailing = values.shape[1:]
        full = np.full(self.lattice_shape + trailing, np.nan)
        full[self.mask] = values
        if boundary_values is None:
            boundary_values = np.zeros((len(self.boundary_owner),) + trailing)
        expand = (slice(None),) + (None,) * len(trailing)
        theta = self.boundary_theta[expand]
        inner = values[self.boundary_owner]
        opposite = self.neighbours[self.boundary_owner, self.boundary_direction ^ 1]
        linear = (boundary_values - (1.0 - theta) * inner) / theta
        mirrored = 2.0 * inner - values[opposite]
        ghost = np.where(
            theta >= GHOST_LINEAR_LIMIT,
            linear,
            np.where((opposite >= 0)[expand], mirrored, boundary_values),
        )
        target = self.lattice_index[self.boundary_owner] + self.unit_steps[self.boundary_direction]
        flat = np.ravel_multi_index(tuple(target.T), self.lattice_shape)
        sums = np.zeros((int(np.prod(self.lattice_shape)),) + trailing)
        hits = np.zeros(int(np.prod(self.lattice_shape)))
        np.add.at(sums, flat, ghost)
        np.add.at(hits, flat, 1.0)
        ghosts = hits > 0
        flat_full = full.reshape((-1,) + trailing)
        flat_full[ghosts] = sums[ghosts] / hits[ghosts][expand]
        return flat_full.reshape(self.lattice_shape + trailing)

    def interpolator(
        self, values: np.ndarray, boundary_values: Optional[np.ndarray] = None
    ) -> RegularGridInterpolator:
        return RegularGridInterpolator(
            self.axes, self.extend(values, boundary_values), method="linear",
            bounds_error=False, fill_value=np.nan,
        )

    def interpolate(
        self, values: np.ndarray, points: np.ndarray, boundary_values: Optional[np.ndarray] = None
    ) -> np.ndarray:
        return self.interpolator(values, boundary_values)(np.atleast_2d(points))

    def interpolation_weights(self, point: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Interior nodes and multilinear weights reproducing interpolation at a point."""
        rel = (np.asarray(point, dtype=float) - self.origin) / self.spacing
        base = np.floor(rel).astype(np.int64)
        frac = rel - base
        nodes, weights = [], []
        for corner in np.ndindex(*(2,) * self.dim):
            offset = np.array(corner)
            weight = float(np.prod(np.where(offset == 1, frac, 1.0 - frac)))
            if weight == 0.0:
                continue
            node = self.node_index[tuple(base + offset)]
            if node < 0:
                raise DomainError(f"Point {point} is not surrounded by interior nodes.")
            nodes.append(node)
            weights.append(weight)
        return np.array(nodes, dtype=np.int64), np.array(weights)

    def nearest_node(self, point: np.ndarray) -> int:
        """Interior node closest to a point, or -1 when that lattice node is exterior."""
        index = np.floor((np.asarray(point, dtype=float) - self.origin) / self.spacing + 0.5).astype(np.int64)
        if np.any(index < 0) or np.any(index >= np.array(self.lattice_shape)):
            return -1
        return int(self.node_index[tuple(index)])

    def lattice_mask(self, nodes: np.ndarray) -> np.ndarray:
        """Lattice boolean raster of a set of interior nodes (indices or node mask)."""
        nodes = np.asarray(nodes)
        raster = np.zeros(self.lattice_shape, dtype=bool)
        if nodes.dtype == bool:
            raster[self.mask] = nodes
        else:
            raster[tuple(self.lattice_index[nodes].T)] = True
        return raster

    def lattice_of(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest lattice indices of points and whether they lie on the lattice."""
        index = np.floor((np.atleast_2d(points) - self.origin) / self.spacing + 0.5).astype(np.int64)
        valid = np.all((index >= 0) & (index < np.array(self.lattice_shape)), axis=1)
        return index, valid

    def components(self, nodes: np.ndarray) -> int:
        """Number of face-connected components of a node set."""
        _, count = ndimage.label(self.lattice_mask(nodes))
        return int(count)

    def l2_norm(self, values: np.ndarray) -> float:
        return float(np.sqrt(self.cell_volume * np.sum(np.asarray(values) ** 2)))


def build_domain(spec: DomainSpec) -> DomainGrid:
    """Rasterize a domain descriptor.

    Args:
        spec: Domain descriptor.
    Returns:
        DomainGrid with boundary links, normals and the Dirichlet operator.
    Raises:
        DomainError: If the raster has fewer than 100 nodes or is disconnected.
    """
    shape = create_shape(spec.model_dump())
    grid = DomainGrid(spec, shape)
    if grid.n_nodes < MIN_INTERIOR_NODES:
        logger.error(ERROR_EMPTY_DOMAIN.format(grid.n_nodes, MIN_INTERIOR_NODES))
        raise DomainError(ERROR_EMPTY_DOMAIN.format(grid.n_nodes, MIN_INTERIOR_NODES))
    _, count = ndimage.label(grid.mask)
    if count != 1:
        logger.error(ERROR_DISCONNECTED_DOMAIN.format(count))
        raise DomainError(ERROR_DISCONNECTED_DOMAIN.format(count))
    logger.info(
        f"build_domain: kind={spec.kind}, spacing={grid.spacing}, nodes={grid.n_nodes}, "
        f"boundary_links={len(grid.boundary_owner)}"
    )
    return grid


@dataclass(frozen=True)
class Hyperplane:
    """The hyperplane {x : n . x = t}; n points toward the candidate smaller side."""

    normal: tuple[float, ...]
    offset: float

    def __post_init__(self):
        if abs(float(np.linalg.norm(self.normal)) - 1.0) > 1e-12:
            raise DomainError(f"Hyperplane normal must be a unit vector, got {self.normal}.")

    @classmethod
    def from_normal(cls, normal: np.ndarray, offset: float) -> "Hyperplane":
        normal = np.asarray(normal, dtype=float)
        length = float(np.linalg.norm(normal))
        return cls(tuple(float(v) for v in normal / length), float(offset) / length)

    @classmethod
    def through(cls, normal: np.ndarray, point: np.ndarray) -> "Hyperplane":
        normal = np.asarray(normal, dtype=float)
        normal = normal / np.linalg.norm(normal)
        return cls(tuple(float(v) for v in normal), float(normal @ np.asarray(point, dtype=float)))

    @property
    def n(self) -> np.ndarray:
        return np.asarray(self.normal)

    def flipped(self) -> "Hyperplane":
        return Hyperplane(tuple(-v for v in self.normal), -self.offset)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return np.atleast_2d(points) @ self.n - self.offset

    def project(self, point: np.ndarray) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        return point - (float(point @ self.n) - self.offset) * self.n

    def reflect_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        flat = np.atleast_2d(points)
        mirrored = flat - 2.0 * self.signed_distance(flat)[:, None] * self.n
        return mirrored.reshape(points.shape)


def _pull_back(grid: DomainGrid, source: np.ndarray, plane: Hyperplane, targets: np.ndarray) -> np.ndarray:
    """For lattice indices `targets`, read the lattice raster `source` at their mirror nodes."""
    mirrored = plane.reflect_points(grid.origin + grid.spacing * targets)
    index, valid = grid.lattice_of(mirrored)
    hit = np.zeros(len(targets), dtype=bool)
    hit[valid] = source[tuple(index[valid].T)]
    return hit


def reflect(target: np.ndarray, plane: Hyperplane, grid: Optional[DomainGrid] = None) -> np.ndarray:
    """Mirror image of a point array, or of a lattice raster when a grid is given.

    Rasters are reflected by pull-back to the nearest lattice node, which is an
    exact involution for axis-aligned and diagonal hyperplanes.

    Raises:
        DomainError: If a raster meets or straddles the hyperplane.
    """
    target = np.asarray(target)
    if grid is None or target.dtype != bool:
        return plane.reflect_points(target)
    if target.shape != grid.lattice_shape:
        raise DomainError(f"Raster shape {target.shape} does not match the lattice {grid.lattice_shape}.")
    occupied = np.argwhere(target)
    side = plane.signed_distance(grid.origin + grid.spacing * occupied)
    tolerance = 1e-9 * grid.spacing
    if np.any(np.abs(side) <= tolerance) or (np.any(side > 0) and np.any(side < 0)):
        logger.error(ERROR_MASK_STRADDLES.format(plane))
        raise DomainError(ERROR_MASK_STRADDLES.format(plane))
    everything = np.indices(grid.lattice_shape).reshape(grid.dim, -1).T
    return _pull_back(grid, target, plane, everything).reshape(grid.lattice_shape)


def _component_contained(grid: DomainGrid, plane: Hyperplane, members: np.ndarray) -> bool:
    tolerance = 1e-9 * grid.spacing
    if not np.all(grid.shape.in_closure(plane.reflect_points(grid.coords[members]), tolerance)):
        return False
    in_component = np.zeros(grid.n_nodes, dtype=bool)
    in_component[members] = True
    links = in_component[grid.boundary_owner]
    points = grid.boundary_points[links]
    points = points[plane.signed_distance(points) > tolerance] if len(points) else points
    if len(points) == 0:
        return True
    return bool(np.all(grid.shape.in_closure(plane.reflect_points(points), tolerance)))


def _component_proper(grid: DomainGrid, plane: Hyperplane, members: np.ndarray, other: np.ndarray, rest_of_side: int) -> bool:
    if rest_of_side > 0:
        return True
    source = grid.lattice_mask(members)
    other_index = grid.lattice_index[other]
    covered = np.zeros(grid.lattice_shape, dtype=bool)
    hit = _pull_back(grid, source, plane, other_index)
    covered[tuple(other_index[hit].T)] = True
    dilated = ndimage.binary_dilation(covered, structure=np.ones((3,) * grid.dim, dtype=bool))
    uncovered = ~dilated[tuple(other_index.T)]
    return bool(np.count_nonzero(uncovered) >= 1)


def interior_reflection_test(grid: DomainGrid, plane: Hyperplane) -> Optional[np.ndarray]:
    """Smaller side of the domain with respect to a hyperplane, if any.

    Each face-connected component of {n . x > t} is reflected; it qualifies when
    its mirrored nodes and boundary points lie in the closed domain, and the
    mirror image misses at least one node of the rest of the domain beyond a
    one-cell collar.

    Args:
        grid: Rasterized domain.
        plane: Hyperplane, normal oriented toward the candidate side.
    Returns:
        Sorted node indices of the qualifying components, or None.
    Raises:
        DomainError: If the hyperplane misses the rasterized domain.
    """
    tolerance = 1e-9 * grid.spacing
    distance = plane.signed_distance(grid.coords)
    side = distance > tolerance
    other = np.nonzero(distance < -tolerance)[0]
    if not np.any(side) or len(other) == 0:
        raise DomainError(ERROR_PLANE_MISSES.format(plane))
    labels, count = ndimage.label(grid.lattice_mask(side))
    node_labels = labels[grid.mask]
    side_total = int(np.count_nonzero(side))
    qualifying = []
    for label in range(1, count + 1):
        members = np.nonzero(node_labels == label)[0]
        if not _component_contained(grid, plane, members):
            continue
        if _component_proper(grid, plane, members, other, side_total - len(members)):
            qualifying.append(members)
    if not qualifying:
        return None
    return np.sort(np.concatenate(qualifying))


def atlas_directions(dim: int, count: int) -> np.ndarray:
    """Candidate unit normals: 2D angles 2 pi k / count; 3D the 26 lattice
    directions, followed by Fibonacci points when more are requested."""
    if dim == 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    lattice = np.array(
        [v for v in np.ndindex(3, 3, 3) if v != (1, 1, 1)], dtype=float
    ) - 1.0
    lattice /= np.linalg.norm(lattice, axis=1)[:, None]
    if count <= len(lattice):
        return lattice[:count]
    extra = count - len(lattice)
    k = np.arange(extra) + 0.5
    polar = np.arccos(1.0 - 2.0 * k / extra)
    azimuth = np.pi * (1.0 + np.sqrt(5.0)) * k
    fibonacci = np.stack(
        [np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar)], axis=1
    )
    return np.vstack([lattice, fibonacci])


@dataclass(frozen=True)
class AtlasEntry:
    direction_index: int
    offset_index: int
    hyperplane: Hyperplane
    side_size: int
    sliding: bool


@dataclass
class ReflectionAtlas:
    """Admitted hyperplanes (Pi), their sliding-admissible subset (Pi') and the
    node masks Sigma and Sigma' built from their smaller sides."""

    grid: DomainGrid
    directions: np.ndarray
    offsets: np.ndarray
    admitted: np.ndarray
    sliding: np.ndarray
    side_sizes: np.ndarray
    sigma: np.ndarray
    sigma_prime: np.ndarray
    entries: list[AtlasEntry] = field(default_factory=list)

    @property
    def hyperplanes(self) -> list[Hyperplane]:
        return [entry.hyperplane for entry in self.entries]

    @property
    def sliding_hyperplanes(self) -> list[Hyperplane]:
        return [entry.hyperplane for entry in self.entries if entry.sliding]

    @property
    def admissible(self) -> np.ndarray:
        """Node mask of the complement of Sigma."""
        return ~self.sigma

    @property
    def admissible_prime(self) -> np.ndarray:
        return ~self.sigma_prime

    def governing_admissible(self) -> np.ndarray:
        """Complement of Sigma for convex domains, of Sigma' otherwise."""
        return self.admissible if self.grid.shape.convex else self.admissible_prime

    def smaller_side(self, entry: AtlasEntry) -> np.ndarray:
        side = interior_reflection_test(self.grid, entry.hyperplane)
        return np.zeros(0, dtype=np.int64) if side is None else side

    def swept_side(self, entry: AtlasEntry) -> np.ndarray:
        """Union of the smaller sides of the translates of a sliding hyperplane."""
        nodes = np.zeros(self.grid.n_nodes, dtype=bool)
        for other in self.entries:
            if (
                other.direction_index == entry.direction_index
                and other.offset_index >= entry.offset_index
                and other.sliding
            ):
                nodes[self.smaller_side(other)] = True
        return np.nonzero(nodes)[0]


def _scan_direction(grid: DomainGrid, normal: np.ndarray, n_offsets: int):
    projection = grid.coords @ normal
    low = float(projection.min()) - grid.spacing
    high = float(projection.max()) + grid.spacing
    offsets = low + (np.arange(n_offsets) + 0.5) * (high - low) / n_offsets
    admitted = np.zeros(n_offsets, dtype=bool)
    sliding = np.zeros(n_offsets, dtype=bool)
    sizes = np.zeros(n_offsets, dtype=np.int64)
    sigma = np.zeros(grid.n_nodes, dtype=bool)
    sigma_prime = np.zeros(grid.n_nodes, dtype=bool)
    unbroken = True
    tolerance = 1e-9 * grid.spacing
    for j in reversed(range(n_offsets)):
        t = offsets[j]
        if not np.any(projection - t > tolerance):
            continue
        if not np.any(projection - t < -tolerance):
            unbroken = False
            continue
        plane = Hyperplane(tuple(float(v) for v in normal), float(t))
        side = interior_reflection_test(grid, plane)
        if side is None:
            unbroken = False
            continue
        admitted[j] = True
        sizes[j] = len(side)
        sigma[side] = True
        if unbroken:
            sliding[j] = True
            sigma_prime[side] = True
    return offsets, admitted, sliding, sizes, sigma, sigma_prime


def reflection_atlas(
    grid: DomainGrid,
    angular_resolution: Optional[int] = None,
    offset_resolution: Optional[int] = None,
    *,
    threads: int = 1,
) -> ReflectionAtlas:
    """Enumerate hyperplanes on a (direction, offset) grid and assemble Sigma, Sigma'.

    A hyperplane is sliding-admissible when every translate toward its smaller
    side (on the offset grid) is admitted as well.

    Args:
        grid: Rasterized domain.
        angular_resolution: Number of directions (default 64 in 2D, 26 in 3D).
        offset_resolution: Number of offsets per direction (default 128 in 2D, 64 in 3D).
        threads: Worker threads; the merge does not depend on completion order.
    """
    n_angles = angular_resolution or (64 if grid.dim == 2 else 26)
    n_offsets = offset_resolution or (128 if grid.dim == 2 else 64)
    if n_angles < 8 or n_offsets < 8:
        raise DomainError(f"Atlas resolutions must be >= 8, got {n_angles} x {n_offsets}.")
    directions = atlas_directions(grid.dim, n_angles)
    logger.info(f"reflection_atlas is started. directions={n_angles}, offsets={n_offsets}")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        scans = list(executor.map(lambda normal: _scan_direction(grid, normal, n_offsets), directions))

    offsets = np.array([scan[0] for scan in scans])
    admitted = np.array([scan[1] for scan in scans])
    sliding = np.array([scan[2] for scan in scans])
    sizes = np.array([scan[3] for scan in scans])
    sigma = np.logical_or.reduce([scan[4] for scan in scans])
    sigma_prime = np.logical_or.reduce([scan[5] for scan in scans])
    entries = [
        AtlasEntry(
            direction_index=int(k),
            offset_index=int(j),
            hyperplane=Hyperplane(tuple(float(v) for v in directions[k]), float(offsets[k, j])),
            side_size=int(sizes[k, j]),
            sliding=bool(sliding[k, j]),
        )
        for k, j in zip(*np.nonzero(admitted))
    ]
    logger.info(
        f"reflection_atlas is finished. admitted={len(entries)}, sliding={int(sliding.sum())}, "
        f"sigma={int(sigma.sum())}, sigma_prime={int(sigma_prime.sum())}, nodes={grid.n_nodes}"
    )
    return ReflectionAtlas(
        grid=grid,
        directions=directions,
        offsets=offsets,
        admitted=admitted,
        sliding=sliding,
        side_sizes=sizes,
        sigma=sigma,
        sigma_prime=sigma_prime,
        entries=entries,
    )
