"""Principal eigenvalue as a function of the interaction site, and the reflection
arguments that locate its minimum."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from point_interaction.core.errors import DomainError, NotAdmittedError, PointInteractionError
from point_interaction.dirichlet import EigenBasis
from point_interaction.geometry import DomainGrid, Hyperplane, ReflectionAtlas, interior_reflection_test
from point_interaction.helmholtz import HField, dh_dy, grad_h_diag, is_radial, solve_h
from point_interaction.spectral import AlphaLike, CouplingAlpha, PrincipalEigenvalue, principal_eigenvalue
from point_interaction.specfun import Branch, SpectralParameter

logger = logging.getLogger("point_interaction")

# Constants
LATTICE_MARGIN_CELLS = 3.0
MIN_LATTICE_CELLS = 2.0
DENOMINATOR_GUARD = 1e-8
PLANE_CLEARANCE = 0.25
HOPF_MARGIN_CELLS = 2.0
MIN_AUDIT_SIDE = 20
STATUS_OK = "ok"
STATUS_FD = "fd_fallback"


@dataclass(frozen=True)
class GradientChain:
    """Quantities of the eigenvalue gradient: grad xi = -+2y (d_x0 g) / (d_y g)."""

    gradient: np.ndarray
    grad_h: np.ndarray
    denominator: float
    guarded: bool


@dataclass
class LandscapeMap:
    grid: DomainGrid
    alpha: float
    spacing: float
    points: np.ndarray
    lattice_index: np.ndarray
    xi: np.ndarray
    gradient: np.ndarray
    fd_gradient: np.ndarray
    residual: np.ndarray
    status: list[str]

    @property
    def successful(self) -> np.ndarray:
        return np.array([s in (STATUS_OK, STATUS_FD) for s in self.status], dtype=bool)

    def best_gradient(self) -> np.ndarray:
        """Analytic gradient, FD where the analytic one was guarded."""
        fallback = np.array([s == STATUS_FD for s in self.status], dtype=bool)
        gradient = self.gradient.copy()
        gradient[fallback] = self.fd_gradient[fallback]
        return gradient


@dataclass
class ReflectionDiff:
    plane: Hyperplane
    x0: np.ndarray
    side: np.ndarray
    nodes: np.ndarray
    values: np.ndarray
    hopf_points: np.ndarray
    hopf_values: np.ndarray

    @property
    def minimum(self) -> float:
        return float(np.min(self.values)) if len(self.values) else np.nan

    @property
    def hopf_minimum(self) -> float:
        return float(np.min(self.hopf_values)) if len(self.hopf_values) else np.nan


@dataclass
class AuditReport:
    alpha: float
    entries: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> int:
        return sum(1 for entry in self.entries if entry["passed"])

    @property
    def failed(self) -> int:
        return len(self.entries) - self.passed

    def worst(self, key: str) -> Optional[float]:
        values = [entry[key] for entry in self.entries if entry.get(key) is not None]
        return float(min(values)) if values else None

    def to_dict(self) -> dict:
        keys = ("n_grad_xi", "n_grad_h", "denominator_margin", "u_min", "hopf_min")
        return {
            "alpha": self.alpha,
            "pairs": len(self.entries),
            "passed": self.passed,
            "failed": self.failed,
            "worst_margins": {key: self.worst(key) for key in keys},
            "entries": self.entries,
        }


@dataclass(frozen=True)
class MinimumVerdict:
    point: np.ndarray
    xi: float
    index: int
    governing_set: str
    distance: float
    inside: bool
    centroid_distance: float

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "xi": self.xi,
            "index": self.index,
            "governing_set": self.governing_set,
            "distance_to_admissible": self.distance,
            "inside": self.inside,
            "centroid_distance": self.centroid_distance,
        }


def gradient_chain(
    grid: DomainGrid,
    basis: EigenBasis,
    pe: PrincipalEigenvalue,
    tolerance: float = 1e-8,
    tail_tolerance: float = 0.1,
) -> GradientChain:
    """Analytic gradient of xi with respect to the interaction site.

    d_y g is 1/(4 pi) + d_y h (3D, xi < 0), d_y Re h (3D, xi > 0), or
    1/y + 2 pi d_y h (2D); samples with |d_y g| < 1e-8 are flagged as guarded.
    """
    grad_h = grad_h_diag(grid, basis, pe.x0, pe.parameter, tolerance, field=pe.field)
    if pe.branch == Branch.ZERO_XI:
        return GradientChain(gradient=np.full(grid.dim, np.nan), grad_h=grad_h, denominator=0.0, guarded=True)
    p = pe.parameter
    derivative = dh_dy(grid, basis, pe.x0, p, tolerance, tail_tolerance, cross_check=False, field=pe.field).value
    if grid.dim == 3:
        denominator = derivative + (1.0 / (4.0 * np.pi) if p.negative else 0.0)
        numerator = grad_h
    else:
        denominator = 1.0 / p.y + 2.0 * np.pi * derivative
        numerator = 2.0 * np.pi * grad_h
    if abs(denominator) < DENOMINATOR_GUARD:
        return GradientChain(gradient=np.full(grid.dim, np.nan), grad_h=grad_h, denominator=denominator, guarded=True)
    sign = 1.0 if p.negative else -1.0
    gradient = sign * 2.0 * p.y * numerator / denominator
    return GradientChain(gradient=gradient, grad_h=grad_h, denominator=denominator, guarded=False)


def sample_lattice(grid: DomainGrid, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Points centroid + spacing * k at least 3 cells from the boundary, in lexicographic k order."""
    if is_radial(grid):
        return np.zeros((1, grid.dim)), np.zeros((1, grid.dim), dtype=np.int64)
    centroid = np.asarray(grid.shape.centroid, dtype=float)
    low, high = grid.shape.bounding_box()
    k_low = np.floor((low - centroid) / spacing).astype(int)
    k_high = np.ceil((high - centroid) / spacing).astype(int)
    ranges = [np.arange(k_low[k], k_high[k] + 1) for k in range(grid.dim)]
    index = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, grid.dim)
    points = centroid + spacing * index
    keep = grid.shape.contains(points) & (
        grid.shape.boundary_distance(points) >= LATTICE_MARGIN_CELLS * grid.spacing
    )
    return points[keep], index[keep]


def _lattice_fd(index: np.ndarray, xi: np.ndarray, ok: np.ndarray, spacing: float) -> np.ndarray:
    lookup = {tuple(k): i for i, k in enumerate(index) if ok[i]}
    gradient = np.full(index.shape, np.nan)
    for i, k in enumerate(index):
        if not ok[i]:
            continue
        for axis in range(index.shape[1]):
            step = np.zeros(index.shape[1], dtype=np.int64)
            step[axis] = 1
            forward = lookup.get(tuple(k + step))
            backward = lookup.get(tuple(k - step))
            if forward is not None and backward is not None:
                gradient[i, axis] = (xi[forward] - xi[backward]) / (2.0 * spacing)
            elif forward is not None:
                gradient[i, axis] = (xi[forward] - xi[i]) / spacing
            elif backward is not None:
                gradient[i, axis] = (xi[i] - xi[backward]) / spacing
    return gradient


def eigenvalue_map(
    grid: DomainGrid,
    basis: EigenBasis,
    alpha: AlphaLike,
    spacing: Optional[float] = None,
    *,
    threads: int = 1,
    root_tolerance: float = 1e-10,
    tolerance: float = 1e-8,
    tail_tolerance: float = 0.1,
) -> LandscapeMap:
    """xi(x0) with analytic and lattice finite-difference gradients over a sample lattice.

    Failed samples are flagged with "failed:<reason>" and do not stop the sweep.

    Raises:
        DomainError: If the lattice spacing is below 2 cells.
    """
    a = CouplingAlpha.parse(alpha)
    spacing = spacing or 4.0 * grid.spacing
    if spacing < MIN_LATTICE_CELLS * grid.spacing * (1.0 - 1e-12):
        raise DomainError(f"Lattice spacing {spacing} is below {MIN_LATTICE_CELLS} cells.")
    points, index = sample_lattice(grid, spacing)
    logger.info(f"eigenvalue_map is started. samples={len(points)}, alpha={a}, spacing={spacing}")

    def sample(i: int):
        try:
            pe = principal_eigenvalue(grid, basis, points[i], a, root_tolerance, tolerance, tail_tolerance)
            chain = gradient_chain(grid, basis, pe, tolerance, tail_tolerance)
            return pe.xi, chain.gradient, pe.residual, STATUS_FD if chain.guarded else STATUS_OK
        except PointInteractionError as e:
            logger.warning(f"Landscape sample {i} at {points[i].tolist()} failed: {e}")
            return np.nan, np.full(grid.dim, np.nan), np.nan, f"failed:{e}"

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        results = list(executor.map(sample, range(len(points))))

    xi = np.array([r[0] for r in results], dtype=float)
    status = [r[3] for r in results]
    ok = np.array([s in (STATUS_OK, STATUS_FD) for s in status], dtype=bool)
    landscape = LandscapeMap(
        grid=grid,
        alpha=a.value,
        spacing=spacing,
        points=points,
        lattice_index=index,
        xi=xi,
        gradient=np.array([r[1] for r in results], dtype=float).reshape(len(points), grid.dim),
        fd_gradient=_lattice_fd(index, xi, ok, spacing),
        residual=np.array([r[2] for r in results], dtype=float),
        status=status,
    )
    logger.info(f"eigenvalue_map is finished. ok={int(ok.sum())}, failed={int((~ok).sum())}")
    return landscape


def radial_profile(
    grid: DomainGrid,
    basis: EigenBasis,
    alpha: AlphaLike,
    radii: np.ndarray,
    angles: np.ndarray,
    root_tolerance: float = 1e-10,
    tolerance: float = 1e-8,
) -> np.ndarray:
    """xi along rays from the centroid, shape (len(angles), len(radii)); NaN where x0 is rejected."""
    if grid.dim != 2:
        raise DomainError("radial_profile is only available in 2D.")
    centroid = np.asarray(grid.shape.centroid, dtype=float)
    profile = np.full((len(angles), len(radii)), np.nan)
    for i, angle in enumerate(angles):
        direction = np.array([np.cos(angle), np.sin(angle)])
        for j, radius in enumerate(radii):
            try:
                profile[i, j] = principal_eigenvalue(
                    grid, basis, centroid + radius * direction, alpha, root_tolerance, tolerance
                ).xi
            except DomainError as e:
                logger.warning(f"radial_profile: angle={angle}, radius={radius} rejected: {e}")
    return profile


def _tangent_basis(normal: np.ndarray) -> np.ndarray:
    return linalg.null_space(normal[None, :]).T


def plane_samples(grid: DomainGrid, plane: Hyperplane, margin: float) -> np.ndarray:
    """Points of the hyperplane inside the domain on a tangent lattice of one cell."""
    foot = plane.project(np.asarray(grid.shape.centroid, dtype=float))
    tangents = _tangent_basis(plane.n)
    reach = int(np.ceil(grid.shape.diameter / grid.spacing)) + 1
    steps = np.arange(-reach, reach + 1)
    grids = np.meshgrid(*([steps] * len(tangents)), indexing="ij")
    coefficients = np.stack([g.ravel() for g in grids], axis=1) * grid.spacing
    points = foot + coefficients @ tangents
    keep = grid.shape.contains(points) & (grid.shape.boundary_distance(points) >= margin)
    return points[keep]


def reflection_difference(
    grid: DomainGrid,
    basis: EigenBasis,
    x0: np.ndarray,
    plane: Hyperplane,
    p: SpectralParameter,
    tolerance: float = 1e-8,
    field: Optional[HField] = None,
) -> ReflectionDiff:
    """u(x) = h(x, x0) - h(x^P, x0) on the smaller side, and its normal derivative on P.

    x0 is projected onto the hyperplane. Nodes closer than a quarter cell to P or
    two cells to the boundary are left out; Hopf samples use the one-sided
    difference (4 u(q + dn) - u(q + 2 dn)) / (2 d) with u(q) = 0.

    Raises:
        NotAdmittedError: If P has no smaller side or x0 is more than a cell off P.
    """
    x0 = np.asarray(x0, dtype=float)
    try:
        side = interior_reflection_test(grid, plane)
    except DomainError as e:
        raise NotAdmittedError(f"Hyperplane {plane} is not admitted: {e}") from e
    if side is None:
        raise NotAdmittedError(f"Hyperplane {plane} has no smaller side.")
    if abs(float(plane.signed_distance(x0)[0])) > grid.spacing:
        raise NotAdmittedError(f"Source point {x0.tolist()} is more than one cell off {plane}.")
    x0 = plane.project(x0)
    field = field if field is not None else solve_h(grid, basis, x0, p, tolerance)

    distance = plane.signed_distance(grid.coords[side])
    clear = (distance >= PLANE_CLEARANCE * grid.spacing) & (
        grid.shape.boundary_distance(grid.coords[side]) >= HOPF_MARGIN_CELLS * grid.spacing
    )
    nodes = side[clear]
    mirrored = field.evaluate(plane.reflect_points(grid.coords[nodes]))
    values = field.values[nodes] - mirrored
    finite = np.isfinite(values)

    in_side = np.zeros(grid.n_nodes, dtype=bool)
    in_side[side] = True
    candidates = plane_samples(grid, plane, HOPF_MARGIN_CELLS * grid.spacing)
    normal = plane.n
    hopf_points, hopf_values = [], []
    for q in candidates:
        near = grid.nearest_node(q + grid.spacing * normal)
        if near < 0 or not in_side[near]:
            continue
        ahead = np.stack([q + grid.spacing * normal, q + 2.0 * grid.spacing * normal])
        behind = np.stack([q - grid.spacing * normal, q - 2.0 * grid.spacing * normal])
        u = field.evaluate(ahead) - field.evaluate(behind)
        if np.all(np.isfinite(u)):
            hopf_points.append(q)
            hopf_values.append((4.0 * u[0] - u[1]) / (2.0 * grid.spacing))
    return ReflectionDiff(
        plane=plane,
        x0=x0,
        side=side,
        nodes=nodes[finite],
        values=values[finite],
        hopf_points=np.array(hopf_points).reshape(-1, grid.dim),
        hopf_values=np.array(hopf_values),
    )


def audit_point(grid: DomainGrid, plane: Hyperplane) -> Optional[np.ndarray]:
    """x0 on P inside the domain: the foot of the centroid, else the chord midpoint."""
    margin = LATTICE_MARGIN_CELLS * grid.spacing
    foot = plane.project(np.asarray(grid.shape.centroid, dtype=float))
    candidates = [foot]
    chord = plane_samples(grid, plane, 0.0)
    if len(chord):
        candidates.append(chord.mean(axis=0))
    for point in candidates:
        if grid.shape.contains(point)[0] and grid.shape.boundary_distance(point)[0] >= margin:
            return point
    return None


def monotonicity_audit(
    grid: DomainGrid,
    basis: EigenBasis,
    alpha: AlphaLike,
    atlas: ReflectionAtlas,
    pairs: int = 16,
    root_tolerance: float = 1e-10,
    tolerance: float = 1e-8,
    tail_tolerance: float = 0.1,
) -> AuditReport:
    """Check n . grad xi > 0 and its sign chain at points of admitted hyperplanes.

    Each pair also checks n . grad h > 0, the sign of d_y g per branch, u > 0 on
    the smaller side and the Hopf derivative on P. Failures are recorded in the
    report; nothing is raised.
    """
    a = CouplingAlpha.parse(alpha)
    eligible = []
    for entry in atlas.entries:
        if entry.side_size < MIN_AUDIT_SIDE:
            continue
        point = audit_point(grid, entry.hyperplane)
        if point is not None:
            eligible.append((entry, point))
    report = AuditReport(alpha=a.value)
    if not eligible:
        logger.warning("monotonicity_audit: no eligible (hyperplane, point) pairs.")
        return report
    chosen = np.unique(np.round(np.linspace(0, len(eligible) - 1, min(pairs, len(eligible)))).astype(int))
    logger.info(f"monotonicity_audit is started. eligible={len(eligible)}, pairs={len(chosen)}, alpha={a}")

    for i in chosen:
        entry, x0 = eligible[i]
        plane = entry.hyperplane
        record = {
            "direction_index": entry.direction_index,
            "offset_index": entry.offset_index,
            "normal": list(plane.normal),
            "offset": plane.offset,
            "x0": [float(v) for v in x0],
            "sliding": entry.sliding,
        }
        try:
            pe = principal_eigenvalue(grid, basis, x0, a, root_tolerance, tolerance, tail_tolerance)
            chain = gradient_chain(grid, basis, pe, tolerance, tail_tolerance)
            diff = reflection_difference(grid, basis, x0, plane, pe.parameter, tolerance, field=pe.field)
            expected = 1.0 if pe.branch == Branch.NEGATIVE_XI else -1.0
            record.update(
                xi=pe.xi,
                branch=pe.branch.value,
                n_grad_xi=float(plane.n @ chain.gradient) if not chain.guarded else None,
                n_grad_h=float(plane.n @ chain.grad_h),
                denominator=chain.denominator,
                denominator_margin=expected * chain.denominator,
                u_min=diff.minimum,
                hopf_min=diff.hopf_minimum,
                hopf_samples=int(len(diff.hopf_values)),
                error=None,
            )
            record["passed"] = bool(
                record["n_grad_xi"] is not None
                and record["n_grad_xi"] > 0
                and record["n_grad_h"] > 0
                and record["denominator_margin"] > 0
                and record["u_min"] > 0
                and record["hopf_samples"] > 0
                and record["hopf_min"] > 0
            )
        except PointInteractionError as e:
            logger.warning(f"monotonicity_audit: pair {int(i)} failed: {e}", exc_info=True)
            record.update(error=str(e), passed=False)
        report.entries.append(record)
    logger.info(f"monotonicity_audit is finished. passed={report.passed}, failed={report.failed}")
    return report


def locate_minimum(landscape: LandscapeMap, atlas: ReflectionAtlas) -> MinimumVerdict:
    """Lattice minimizer of xi and whether it lies in the admissible region.

    The region is the complement of Sigma for convex domains and of Sigma'
    otherwise; inside means within one cell of an admissible node.
    """
    grid = landscape.grid
    ok = landscape.successful
    if not np.any(ok):
        raise DomainError("The landscape has no successful samples.")
    candidates = np.nonzero(ok)[0]
    best = int(candidates[np.argmin(landscape.xi[candidates])])
    point = landscape.points[best]
    admissible = atlas.governing_admissible()
    governing = "sigma" if grid.shape.convex else "sigma_prime"
    if np.any(admissible):
        distance = float(np.min(np.linalg.norm(grid.coords[admissible] - point, axis=1)))
    else:
        distance = np.inf
    verdict = MinimumVerdict(
        point=point,
        xi=float(landscape.xi[best]),
        index=best,
        governing_set=governing,
        distance=distance,
        inside=distance <= grid.spacing * (1.0 + 1e-9),
        centroid_distance=float(np.linalg.norm(point - np.asarray(grid.shape.centroid))),
    )
    logger.info(f"locate_minimum: point={point.tolist()}, xi={verdict.xi:.12e}, inside={verdict.inside}")
    return verdict
