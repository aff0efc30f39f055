"""Regular part h of the Dirichlet Green function and the 2D harmonic field f.

h(., x0, y) solves (-Delta + z) h = 0 in the domain with the free kernel of
(-Delta + z) centred at x0 as boundary data, so that G_free - h is the
Dirichlet Green function. On the positive branch (z = -y^2) the real part of
h is solved for; its imaginary part is known in closed form.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from point_interaction.core.errors import DomainError, NumericalError, SpectralMarginError
from point_interaction.dirichlet import BasisSource, EigenBasis, GreenNorm, green_norm
from point_interaction.geometry import DomainGrid
from point_interaction.specfun import (
    Branch,
    SpectralParameter,
    free_green_dy,
    free_green_imag,
    free_green_real,
    harmonic_f_data,
)

logger = logging.getLogger("point_interaction")

# Constants
SOURCE_MARGIN_CELLS = 2.0
CORE_CELLS = 8.0
CORE_FRACTION = 0.9
FD_STEP = 1e-3
ODE_RTOL = 1e-12
ODE_ATOL = 1e-14
ERROR_SOURCE_OUTSIDE = "Source point {} is not inside the domain."
ERROR_SOURCE_NEAR_BOUNDARY = "Source point {} is {:.3e} from the boundary; at least {:.3e} is required."
ERROR_BALL_SOURCE = "The radial ball solver only accepts the centre as source point, got {}."
ERROR_ABOVE_CEILING = "y^2={:.6e} is not below the first Dirichlet level {:.6e}."
ERROR_F0_DIMENSION = "The harmonic f field is only defined in 2D."


class FieldKind(str, Enum):
    H = "h"
    RE_H = "re_h"
    F0 = "f0"


@dataclass
class HField:
    """A regular Green part (or the 2D f field) for one source point and parameter.

    coincidence is h(x0, x0) (Re h on the positive branch); for the f field it
    is the 2D threshold 2 pi f(x0, x0, 0).
    """

    grid: DomainGrid
    x0: np.ndarray
    parameter: Optional[SpectralParameter]
    kind: FieldKind
    values: np.ndarray
    boundary_values: np.ndarray
    coincidence: float
    gradient: np.ndarray
    imag_coincidence: float = 0.0
    residual: float = 0.0
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.profile is not None:
            return self.profile(np.linalg.norm(points - self.x0, axis=1))
        return self.grid.interpolate(self.values, points, self.boundary_values)

    def imag_part(self, points: np.ndarray) -> np.ndarray:
        """Closed-form imaginary part of h on the positive branch, zero otherwise."""
        points = np.atleast_2d(points)
        if self.parameter is None or self.kind != FieldKind.RE_H:
            return np.zeros(len(points))
        r = np.linalg.norm(points - self.x0, axis=1)
        return free_green_imag(self.grid.dim, self.parameter, r)


@dataclass(frozen=True)
class DhDy:
    """y-derivative of the coincidence value h(x0, x0, y) (Re h on the positive branch)."""

    value: float
    green_norm: float
    tail: float
    cross_check: Optional[float] = None
    bvp: Optional[float] = None
    residual: Optional[float] = None


@dataclass(frozen=True)
class ConsistencyCheck:
    points: np.ndarray
    bvp: np.ndarray
    series: np.ndarray
    max_relative_error: float


def is_radial(grid: DomainGrid) -> bool:
    return grid.spec.kind == "ball"


def check_source(grid: DomainGrid, x0: np.ndarray) -> np.ndarray:
    """Validate a source point: inside and at least 2 cells from the boundary."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (grid.dim,):
        raise DomainError(f"Source point must have {grid.dim} coordinates, got {x0.tolist()}.")
    if is_radial(grid):
        if np.linalg.norm(x0) > 1e-12:
            raise DomainError(ERROR_BALL_SOURCE.format(x0.tolist()))
        return x0
    if not grid.shape.contains(x0)[0]:
        raise DomainError(ERROR_SOURCE_OUTSIDE.format(x0.tolist()))
    distance = float(grid.shape.boundary_distance(x0)[0])
    required = SOURCE_MARGIN_CELLS * grid.spacing
    if distance < required:
        raise DomainError(ERROR_SOURCE_NEAR_BOUNDARY.format(x0.tolist(), distance, required))
    return x0


def spectral_ceiling(grid: DomainGrid, basis: EigenBasis) -> float:
    """First Dirichlet level bounding the positive branch: y^2 must stay below it."""
    if is_radial(grid):
        return basis.lambda0
    return min(basis.lambda0, grid.discrete_lambda0)


def _check_branch(grid: DomainGrid, basis: EigenBasis, p: SpectralParameter) -> None:
    if p.branch == Branch.POSITIVE_XI:
        ceiling = spectral_ceiling(grid, basis)
        if p.y**2 >= ceiling:
            raise SpectralMarginError(ERROR_ABOVE_CEILING.format(p.y**2, ceiling))


def _stencil_gradient(evaluate: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, step: float) -> np.ndarray:
    """Fourth-order centred gradient, second order where the wide stencil leaves the raster."""
    d = len(x0)
    offsets = np.array([2.0, 1.0, -1.0, -2.0])
    points = np.concatenate(
        [x0[None, :] + step * offsets[:, None] * np.eye(d)[k][None, :] for k in range(d)]
    )
    samples = evaluate(points).reshape(d, 4)
    gradient = (-samples[:, 0] + 8.0 * samples[:, 1] - 8.0 * samples[:, 2] + samples[:, 3]) / (12.0 * step)
    narrow = (samples[:, 1] - samples[:, 2]) / (2.0 * step)
    return np.where(np.isnan(gradient), narrow, gradient)


@dataclass(frozen=True)
class _RadialSolution:
    """Regular radial solution w of w'' = z w, w(0) = 0, w'(0) = 1, and a companion
    q'' = z q - sign * 2y * w used for the y-derivative."""

    solution: object
    scale: float

    def h(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        state = self.solution.sol(np.clip(r, 0.0, None).ravel())
        w, slope = state[0], state[1]
        safe = np.where(r.ravel() > 1e-12, r.ravel(), 1.0)
        values = np.where(r.ravel() > 1e-12, w / safe, slope)
        return (self.scale * values).reshape(r.shape)


def _shoot_radial(z: float, y: float, sign: float, radius: float):
    def rhs(_, state):
        w, dw, q, dq = state
        return [dw, z * w, dq, z * q - sign * 2.0 * y * w]

    solution = integrate.solve_ivp(
        rhs, (0.0, radius), [0.0, 1.0, 0.0, 0.0], method="DOP853",
        rtol=ODE_RTOL, atol=ODE_ATOL, dense_output=True,
    )
    if not solution.success:
        raise NumericalError(f"Radial integration failed: {solution.message}", stage="radial_solve")
    return solution


def _solve_ball(grid: DomainGrid, x0: np.ndarray, p: SpectralParameter) -> HField:
    radius = float(grid.shape.radius)
    solution = _shoot_radial(p.z, p.y, -1.0 if p.negative else 1.0, radius)
    boundary_value = float(free_green_real(3, p, radius))
    w_end = float(solution.y[0, -1])
    radial = _RadialSolution(solution=solution, scale=boundary_value * radius / w_end)
    boundary_values = free_green_real(3, p, np.linalg.norm(grid.boundary_points, axis=1))
    coincidence = float(radial.h(np.zeros(1))[0])
    residual = abs(float(radial.h(np.array([radius]))[0]) - boundary_value) / abs(boundary_value)
    return HField(
        grid=grid,
        x0=x0,
        parameter=p,
        kind=FieldKind.H if p.negative else FieldKind.RE_H,
        values=radial.h(np.linalg.norm(grid.coords, axis=1)),
        boundary_values=boundary_values,
        coincidence=coincidence,
        gradient=np.zeros(3),
        imag_coincidence=0.0 if p.negative else -p.y / (4.0 * np.pi),
        residual=residual,
        profile=radial.h,
    )


def _ball_dh_dy(grid: DomainGrid, p: SpectralParameter) -> float:
    """Centre value of the radial y-derivative solution."""
    radius = float(grid.shape.radius)
    solution = _shoot_radial(p.z, p.y, -1.0 if p.negative else 1.0, radius)
    w_end, q_end = float(solution.y[0, -1]), float(solution.y[2, -1])
    scale = float(free_green_real(3, p, radius)) * radius / w_end
    data = float(free_green_dy(3, p, radius))
    return (radius * data - scale * q_end) / w_end


def _solve_grid(
    grid: DomainGrid, x0: np.ndarray, p: Optional[SpectralParameter], kind: FieldKind,
    boundary_values: np.ndarray, tolerance: float,
) -> HField:
    z = 0.0 if p is None else p.z
    rhs = grid.boundary_rhs(boundary_values)
    try:
        values = grid.solve(z, rhs, tolerance)
    except NumericalError:
        logger.error(f"Helmholtz solve failed: x0={x0.tolist()}, z={z}", exc_info=True)
        raise
    interpolator = grid.interpolator(values, boundary_values)
    coincidence = float(interpolator(x0[None, :])[0])
    gradient = _stencil_gradient(interpolator, x0, grid.spacing)
    imag = 0.0
    if p is not None and not p.negative:
        imag = -0.25 if grid.dim == 2 else -p.y / (4.0 * np.pi)
    return HField(
        grid=grid,
        x0=x0,
        parameter=p,
        kind=kind,
        values=values,
        boundary_values=boundary_values,
        coincidence=coincidence,
        gradient=gradient,
        imag_coincidence=imag,
        residual=grid.residual(z, values, rhs),
    )


def solve_h(
    grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, p: SpectralParameter, tolerance: float = 1e-8
) -> HField:
    """Solve for h(., x0, y) on the negative branch, or Re h(., x0, iy) on the positive one.

    Args:
        grid: Rasterized domain.
        basis: Eigenbasis of the same domain; bounds the positive branch.
        x0: Source point, at least two cells from the boundary.
        p: Spectral parameter.
        tolerance: Relative tolerance of iterative solves.
    Returns:
        HField with coincidence value and gradient at x0.
    Raises:
        DomainError: If x0 is outside or too close to the boundary.
        SpectralMarginError: If y^2 reaches the first Dirichlet level.
        NumericalError: If the linear solve fails.
    """
    x0 = check_source(grid, x0)
    _check_branch(grid, basis, p)
    if is_radial(grid):
        field = _solve_ball(grid, x0, p)
    else:
        data = free_green_real(grid.dim, p, np.linalg.norm(grid.boundary_points - x0, axis=1))
        kind = FieldKind.H if p.negative else FieldKind.RE_H
        field = _solve_grid(grid, x0, p, kind, data, tolerance)
    logger.debug(
        f"solve_h: x0={x0.tolist()}, y={p.y}, branch={p.branch.value}, "
        f"coincidence={field.coincidence:.12e}, residual={field.residual:.3e}"
    )
    return field


def solve_f0(grid: DomainGrid, x0: np.ndarray, tolerance: float = 1e-8) -> HField:
    """Harmonic 2D field with data -(1/2pi)(ln(|x - x0|/2) + gamma).

    coincidence is 2 pi f(x0, x0, 0), the limit of ln y + 2 pi h(x0, x0, y) as y -> 0.
    """
    if grid.dim != 2:
        raise DomainError(ERROR_F0_DIMENSION)
    x0 = check_source(grid, x0)
    data = harmonic_f_data(np.linalg.norm(grid.boundary_points - x0, axis=1))
    field = _solve_grid(grid, x0, None, FieldKind.F0, data, tolerance)
    field.coincidence *= 2.0 * np.pi
    logger.debug(f"solve_f0: x0={x0.tolist()}, threshold={field.coincidence:.12e}")
    return field


def coincidence(
    grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, p: SpectralParameter, tolerance: float = 1e-8
) -> float:
    return solve_h(grid, basis, x0, p, tolerance).coincidence


def _finite_difference(
    grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, p: SpectralParameter, tolerance: float
) -> float:
    step = FD_STEP * p.y
    ceiling = spectral_ceiling(grid, basis)

    def value(y: float) -> float:
        return coincidence(grid, basis, x0, SpectralParameter.from_y(y, p.branch), tolerance)

    if p.negative or (p.y + step) ** 2 < ceiling:
        return (value(p.y + step) - value(p.y - step)) / (2.0 * step)
    return (3.0 * value(p.y) - 4.0 * value(p.y - step) + value(p.y - 2.0 * step)) / (2.0 * step)


def _derivative_bvp(grid: DomainGrid, x0: np.ndarray, field: HField, p: SpectralParameter, tolerance: float) -> float:
    """Solve (A + z) dh = sign * 2y * h + boundary data of d/dy of the free kernel."""
    sign = -1.0 if p.negative else 1.0
    data = free_green_dy(grid.dim, p, np.linalg.norm(grid.boundary_points - x0, axis=1))
    rhs = grid.boundary_rhs(data) + sign * 2.0 * p.y * field.values
    derivative = grid.solve(p.z, rhs, tolerance)
    return float(grid.interpolate(derivative, x0, data)[0])


def _sphere_mean(dim: int, p: SpectralParameter, r: np.ndarray) -> np.ndarray:
    """Mean over the sphere of radius r of a solution of (-Delta + z) u = 0, relative to u(x0)."""
    t = p.y * r
    if dim == 2:
        return special.i0(t) if p.negative else special.j0(t)
    return special.spherical_in(0, t) if p.negative else special.spherical_jn(0, t)


def field_green_norm(grid: DomainGrid, field: HField) -> float:
    """S = ||G_free - h||^2 (real parts on the positive branch) from a solved field.

    Inside a ball B of radius rho around x0 the singular terms G_free^2 and
    2 G_free h are weighted by the cutoff (1 - r^2/rho^2)^4 and integrated
    radially, the cross term through the sphere mean of h; the smooth remainder
    is summed over the nodes.
    """
    p, x0, dim = field.parameter, field.x0, grid.dim
    rho = min(CORE_CELLS * grid.spacing, CORE_FRACTION * float(grid.shape.boundary_distance(x0[None, :])[0]))
    r = np.linalg.norm(grid.coords - x0, axis=1)
    cutoff = (1.0 - np.minimum(r / rho, 1.0) ** 2) ** 4
    free = np.zeros_like(r)
    away = r > 0
    free[away] = free_green_real(dim, p, r[away])
    h = field.values
    remainder = (free - h) ** 2 - cutoff * (free**2 - 2.0 * free * h)
    surface = 2.0 * np.pi if dim == 2 else 4.0 * np.pi

    def weight(t: float) -> float:
        return surface * t ** (dim - 1) * (1.0 - (t / rho) ** 2) ** 4

    core_free, _ = integrate.quad(
        lambda t: weight(t) * float(free_green_real(dim, p, t)) ** 2, 0.0, rho, epsabs=0.0, epsrel=1e-12, limit=200
    )
    core_cross, _ = integrate.quad(
        lambda t: weight(t) * float(free_green_real(dim, p, t)) * float(_sphere_mean(dim, p, t)),
        0.0, rho, epsabs=0.0, epsrel=1e-12, limit=200,
    )
    return float(grid.cell_volume * np.sum(remainder) + core_free - 2.0 * field.coincidence * core_cross)


def identity_dh_dy(dim: int, p: SpectralParameter, norm: float) -> float:
    """d/dy of the coincidence value from the squared norm S of the regular Green function."""
    if p.negative:
        singular = 1.0 / (4.0 * np.pi) if dim == 3 else 1.0 / (2.0 * np.pi * p.y)
        return 2.0 * p.y * norm - singular
    if dim == 3:
        return -2.0 * p.y * norm
    return -1.0 / (2.0 * np.pi * p.y) - 2.0 * p.y * norm


def dh_dy(
    grid: DomainGrid,
    basis: EigenBasis,
    x0: np.ndarray,
    p: SpectralParameter,
    tolerance: float = 1e-8,
    tail_tolerance: float = 0.1,
    cross_check: bool = True,
    field: Optional[HField] = None,
) -> DhDy:
    """y-derivative of h(x0, x0, y), or of Re h(x0, x0, iy) on the positive branch.

    The value comes from the squared-norm identity; the centred finite difference
    of coincidence values and the derivative boundary-value problem are reported
    next to it when `cross_check` is set.

    Raises:
        DomainError: If y = 0.
        SpectralMarginError: If y^2 reaches the first Dirichlet level.
        NumericalError: If the eigen-sum tail exceeds `tail_tolerance`.
    """
    if p.y <= 0:
        raise DomainError("dh_dy requires y > 0.")
    x0 = check_source(grid, x0)
    _check_branch(grid, basis, p)
    if basis.source == BasisSource.NUMERIC_GRID:
        field = field if field is not None else solve_h(grid, basis, x0, p, tolerance)
        total = field_green_norm(grid, field)
        norm = GreenNorm(value=total, head=total, tail=0.0, modes=basis.size, estimated=False)
    else:
        norm = green_norm(basis, x0, p.z, tail_tolerance)
    value = identity_dh_dy(grid.dim, p, norm.value)
    if not cross_check:
        return DhDy(value=value, green_norm=norm.value, tail=norm.relative_tail)
    finite = _finite_difference(grid, basis, x0, p, tolerance)
    if is_radial(grid):
        bvp = _ball_dh_dy(grid, p)
    else:
        field = field if field is not None else solve_h(grid, basis, x0, p, tolerance)
        bvp = _derivative_bvp(grid, x0, field, p, tolerance)
    residual = abs(value - finite) / max(abs(value), 1e-300)
    logger.debug(
        f"dh_dy: x0={x0.tolist()}, y={p.y}, branch={p.branch.value}, identity={value:.12e}, "
        f"fd={finite:.12e}, bvp={bvp:.12e}, residual={residual:.3e}"
    )
    return DhDy(
        value=value, green_norm=norm.value, tail=norm.relative_tail,
        cross_check=finite, bvp=bvp, residual=residual,
    )


def grad_h_diag(
    grid: DomainGrid,
    basis: EigenBasis,
    x0: np.ndarray,
    p: SpectralParameter,
    tolerance: float = 1e-8,
    field: Optional[HField] = None,
) -> np.ndarray:
    """Gradient of x0 -> h(x0, x0, .); by symmetry of h it is twice the field gradient at x0."""
    field = field if field is not None else solve_h(grid, basis, x0, p, tolerance)
    return 2.0 * field.gradient


def green_positivity(
    grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, p: SpectralParameter, tolerance: float = 1e-8
) -> float:
    """Minimum of the (real part of the) Dirichlet Green function G_free - h over
    interior nodes outside the ball of radius 2 cells around x0."""
    field = solve_h(grid, basis, x0, p, tolerance)
    r = np.linalg.norm(grid.coords - field.x0, axis=1)
    outside = r > SOURCE_MARGIN_CELLS * grid.spacing
    green = free_green_real(grid.dim, p, r[outside]) - field.values[outside]
    return float(np.min(green))


def spectral_consistency(
    grid: DomainGrid,
    basis: EigenBasis,
    x0: np.ndarray,
    p: SpectralParameter,
    points: np.ndarray,
    reference: Optional[SpectralParameter] = None,
    tolerance: float = 1e-8,
) -> ConsistencyCheck:
    """Compare h (Re h) from its boundary-value problem with the once-subtracted eigen-expansion

        h^z(x) = h^z'(x) + G_free^z(x) - G_free^z'(x) - (z' - z) sum psi(x) psi(x0) / ((lambda + z)(lambda + z'))

    around a reference parameter on the negative branch.
    """
    points = np.atleast_2d(points)
    reference = reference or SpectralParameter.from_y(float(np.sqrt(abs(p.z) + 1.0)))
    field = solve_h(grid, basis, x0, p, tolerance)
    base = solve_h(grid, basis, x0, reference, tolerance)
    r = np.linalg.norm(points - field.x0, axis=1)
    values = basis.evaluate(points) * basis.at_point(field.x0)[None, :]
    weights = (reference.z - p.z) / ((basis.eigenvalues + p.z) * (basis.eigenvalues + reference.z))
    series = (
        base.evaluate(points)
        + free_green_real(grid.dim, p, r)
        - free_green_real(grid.dim, reference, r)
        - values @ weights
    )
    bvp = field.evaluate(points)
    error = float(np.max(np.abs(bvp - series)) / max(float(np.max(np.abs(bvp))), 1e-300))
    logger.debug(f"spectral_consistency: y={p.y}, branch={p.branch.value}, error={error:.3e}")
    return ConsistencyCheck(points=points, bvp=bvp, series=series, max_relative_error=error)
