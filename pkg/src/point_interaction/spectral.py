"""Spectral condition of the point interaction, its principal eigenvalue and resolvent.

The defining function is written through an alpha-independent part g:
    3D: F = g + alpha, g = y/(4 pi) + h(x0, x0, y) (xi <= 0) or Re h(x0, x0, iy) (xi > 0)
    2D: F = g - alpha, g = ln y + 2 pi h(x0, x0, y) (xi <= 0) or ln y + 2 pi Re h (xi > 0)
Below the first Dirichlet level F has exactly one zero.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import optimize

from point_interaction.core.errors import (
    BracketError,
    DomainError,
    NumericalError,
    PoleProximityError,
    SpectralMarginError,
)
from point_interaction.dirichlet import EigenBasis, green_norm
from point_interaction.geometry import DomainGrid
from point_interaction.helmholtz import (
    HField,
    check_source,
    solve_f0,
    solve_h,
    spectral_ceiling,
)
from point_interaction.specfun import Branch, SpectralParameter, free_green_real, harmonic_f_data

logger = logging.getLogger("point_interaction")

# Constants
ZERO_XI_TOLERANCE = 1e-10
POLE_TOLERANCE = 1e-12
Y_FLOOR = 1e-8
MAX_BRACKET_DOUBLINGS = 60
CEILING_PROBES = tuple(1.0 - 10.0**-k for k in range(3, 9))
RESOLVENT_WEIGHT = {2: -2.0 * np.pi, 3: 1.0}
ERROR_INFINITE_ALPHA = "No eigenvalue below the first Dirichlet level exists for alpha={}."
ERROR_NO_BRACKET = "Root function has no sign change for alpha={} on the {} branch."
ERROR_POLE = "z={} sits on a pole: |denominator|={:.3e}."
ERROR_2D_ZERO_Z = "The 2D charge is undefined at z = 0."

AlphaLike = Union[float, str, "CouplingAlpha"]


@dataclass(frozen=True)
class CouplingAlpha:
    """Coupling constant on the extended real line; +-inf is the unperturbed operator."""

    value: float

    @classmethod
    def parse(cls, alpha: AlphaLike) -> "CouplingAlpha":
        if isinstance(alpha, CouplingAlpha):
            return alpha
        if isinstance(alpha, str):
            text = alpha.strip().lower()
            if text in ("inf", "+inf"):
                return cls(np.inf)
            if text == "-inf":
                return cls(-np.inf)
        value = float(alpha)
        if np.isnan(value):
            raise DomainError("alpha must not be NaN.")
        return cls(value)

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.value))

    def __str__(self) -> str:
        if self.finite:
            return repr(self.value)
        return "inf" if self.value > 0 else "-inf"


@dataclass
class PrincipalEigenvalue:
    """The unique spectral point xi < lambda_0 of the perturbed operator."""

    xi: float
    y: float
    branch: Branch
    alpha: float
    alpha_threshold: float
    x0: np.ndarray
    residual: float
    bracket: tuple[float, float]
    newton_shift: float
    field: Optional[HField]
    green_norm: float
    evaluations: int = 0

    @property
    def parameter(self) -> SpectralParameter:
        if self.branch == Branch.ZERO_XI:
            return SpectralParameter.from_y(0.0)
        return SpectralParameter.from_y(self.y, self.branch)

    @property
    def pole_weight(self) -> float:
        """Residue scale 1 / ||G_0^{-xi}||^2 of the resolvent at the pole."""
        return 1.0 / self.green_norm

    def to_dict(self) -> dict:
        return {
            "xi": self.xi,
            "y": self.y,
            "branch": self.branch.value,
            "alpha": self.alpha,
            "alpha_threshold": self.alpha_threshold,
            "x0": [float(v) for v in self.x0],
            "residual": self.residual,
            "bracket": list(self.bracket),
            "newton_shift": self.newton_shift,
            "green_norm": self.green_norm,
            "pole_weight": self.pole_weight,
            "evaluations": self.evaluations,
        }


@dataclass(frozen=True)
class Charge:
    q: complex
    z: float
    denominator: complex
    field: Optional[HField] = None


@dataclass
class EigenFunction:
    values: np.ndarray
    residual: float
    boundary_trace: float
    continuum_gap: float
    minimum: float
    positive: bool
    scale: float


@dataclass
class ResolventAction:
    values: np.ndarray
    free_part: np.ndarray
    coefficient: float
    q: complex
    norm: float = field(default=0.0)


def alpha_threshold(grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, tolerance: float = 1e-8) -> float:
    """alpha* with xi(alpha*) = 0: -h(x0, x0, 0) in 3D, 2 pi f(x0, x0, 0) in 2D."""
    if grid.dim == 2:
        return solve_f0(grid, x0, tolerance).coincidence
    return -solve_h(grid, basis, x0, SpectralParameter.from_y(0.0), tolerance).coincidence


class RootFunction:
    """alpha-independent part g of the spectral condition at a fixed source point."""

    def __init__(self, grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, tolerance: float = 1e-8):
        self.grid = grid
        self.basis = basis
        self.x0 = check_source(grid, x0)
        self.tolerance = tolerance
        self.evaluations = 0

    @property
    def sign(self) -> float:
        """F = g + sign * alpha."""
        return 1.0 if self.grid.dim == 3 else -1.0

    def field(self, p: SpectralParameter) -> HField:
        self.evaluations += 1
        return solve_h(self.grid, self.basis, self.x0, p, self.tolerance)

    def from_field(self, p: SpectralParameter, h: HField) -> float:
        if self.grid.dim == 3:
            return (p.y / (4.0 * np.pi) if p.negative else 0.0) + h.coincidence
        return float(np.log(p.y)) + 2.0 * np.pi * h.coincidence

    def value(self, p: SpectralParameter) -> float:
        return self.from_field(p, self.field(p))

    def derivative(self, p: SpectralParameter, tail_tolerance: float = 0.1) -> float:
        """dg/dy = +-2yS (3D), +-4 pi y S (2D), + on the negative branch."""
        norm = green_norm(self.basis, self.x0, p.z, tail_tolerance).value
        factor = 2.0 if self.grid.dim == 3 else 4.0 * np.pi
        return (1.0 if p.negative else -1.0) * factor * p.y * norm

    def at_xi(self, xi: float, threshold: float) -> float:
        if xi == 0.0:
            return -threshold if self.grid.dim == 3 else threshold
        return self.value(SpectralParameter.from_xi(xi))


def root_function_samples(
    grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, xis: np.ndarray, tolerance: float = 1e-8
) -> np.ndarray:
    """g at the given energies; F(xi; alpha) = g + alpha (3D) or g - alpha (2D)."""
    function = RootFunction(grid, basis, x0, tolerance)
    threshold = alpha_threshold(grid, basis, x0, tolerance)
    return np.array([function.at_xi(float(xi), threshold) for xi in xis])


def sample_energies(grid: DomainGrid, basis: EigenBasis, y_max: float, count: int = 16) -> np.ndarray:
    """Ascending energies covering (-y_max^2, lambda_0), denser toward both ends."""
    ceiling = spectral_ceiling(grid, basis)
    negative = -((y_max * np.arange(count, 0, -1) / count) ** 2)
    positive = ceiling * (1.0 - np.geomspace(0.5, 1e-6, count))
    return np.concatenate([negative, [0.0], positive])


def root_sign_table(
    grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, alpha: AlphaLike,
    xis: Optional[np.ndarray] = None, tolerance: float = 1e-8,
) -> list[tuple[float, float]]:
    """(xi, F(xi; alpha)) pairs over (-Y^2, lambda_0), Y = 4 pi (|alpha| + 10)."""
    a = CouplingAlpha.parse(alpha)
    if xis is None:
        xis = sample_energies(grid, basis, 4.0 * np.pi * (abs(a.value) + 10.0))
    g = root_function_samples(grid, basis, x0, xis, tolerance)
    sign = 1.0 if grid.dim == 3 else -1.0
    return [(float(xi), float(value + sign * a.value)) for xi, value in zip(xis, g)]


def sign_changes(table: list[tuple[float, float]]) -> int:
    signs = np.sign([value for _, value in table])
    signs = signs[signs != 0]
    return int(np.count_nonzero(np.diff(signs)))


def _negative_branch_bracket(function, target, alpha, threshold, dim) -> tuple[float, float, list]:
    table = []
    low = Y_FLOOR
    high = 4.0 * np.pi * (abs(alpha) + abs(threshold) + 10.0)
    if dim == 2:
        high = max(high, float(np.exp(min(alpha + 1.0, 700.0))))
    for _ in range(MAX_BRACKET_DOUBLINGS):
        value = function.value(SpectralParameter.from_y(high)) - target
        table.append((-(high**2), value))
        if value > 0:
            return low, high, table
        low, high = high, 2.0 * high
    raise BracketError(ERROR_NO_BRACKET.format(alpha, "negative"), sign_table=table)


def _positive_branch_bracket(function, target, alpha, ceiling) -> tuple[float, float, list]:
    table = []
    low = Y_FLOOR
    for fraction in CEILING_PROBES:
        y = float(np.sqrt(ceiling * fraction))
        value = function.value(SpectralParameter.from_y(y, Branch.POSITIVE_XI)) - target
        table.append((y**2, value))
        if value < 0:
            return low, y, table
        low = y
    raise BracketError(ERROR_NO_BRACKET.format(alpha, "positive"), sign_table=table)


def principal_eigenvalue(
    grid: DomainGrid,
    basis: EigenBasis,
    x0: np.ndarray,
    alpha: AlphaLike,
    root_tolerance: float = 1e-10,
    tolerance: float = 1e-8,
    tail_tolerance: float = 0.1,
) -> PrincipalEigenvalue:
    """Unique eigenvalue xi < lambda_0 of the point interaction at x0 with coupling alpha.

    Bracketed root search in y = sqrt(|xi|) on the branch selected by alpha
    against alpha*, followed by one Newton step using the squared-norm derivative.

    Args:
        grid: Rasterized domain.
        basis: Eigenbasis of the same domain.
        x0: Source point.
        alpha: Finite coupling constant.
        root_tolerance: Relative tolerance in y.
        tolerance: Linear solver tolerance.
        tail_tolerance: Accepted relative tail of eigen-sums.
    Returns:
        PrincipalEigenvalue.
    Raises:
        DomainError: If alpha is infinite or x0 is not a valid source.
        BracketError: If no sign change is found; carries the sampled table.
    """
    a = CouplingAlpha.parse(alpha)
    if not a.finite:
        raise DomainError(ERROR_INFINITE_ALPHA.format(a))
    function = RootFunction(grid, basis, x0, tolerance)
    x0 = function.x0
    threshold = alpha_threshold(grid, basis, x0, tolerance)
    alpha_value = a.value
    # F = g - target with target = -alpha (3D) or alpha (2D)
    target = -function.sign * alpha_value

    if abs(alpha_value - threshold) < ZERO_XI_TOLERANCE:
        p = SpectralParameter.from_y(0.0)
        field = solve_f0(grid, x0, tolerance) if grid.dim == 2 else function.field(p)
        norm = green_norm(basis, x0, 0.0, tail_tolerance).value
        logger.info(f"principal_eigenvalue: x0={x0.tolist()}, alpha={alpha_value}, xi=0 (threshold)")
        return PrincipalEigenvalue(
            xi=0.0, y=0.0, branch=Branch.ZERO_XI, alpha=alpha_value, alpha_threshold=threshold,
            x0=x0, residual=0.0, bracket=(0.0, 0.0), newton_shift=0.0, field=field,
            green_norm=norm, evaluations=function.evaluations,
        )

    negative = (alpha_value < threshold) if grid.dim == 3 else (alpha_value > threshold)
    branch = Branch.NEGATIVE_XI if negative else Branch.POSITIVE_XI
    if negative:
        low, high, _ = _negative_branch_bracket(function, target, alpha_value, threshold, grid.dim)
    else:
        low, high, _ = _positive_branch_bracket(function, target, alpha_value, spectral_ceiling(grid, basis))

    def residual_at(y: float) -> float:
        return function.value(SpectralParameter.from_y(y, branch)) - target

    try:
        root = optimize.brentq(residual_at, low, high, xtol=1e-15, rtol=max(root_tolerance, 1e-15), maxiter=200)
    except (ValueError, RuntimeError) as e:
        logger.error(f"Root search failed: alpha={alpha_value}, bracket=({low}, {high})", exc_info=True)
        raise NumericalError(f"Root search failed for alpha={alpha_value}: {e}", stage="principal_eigenvalue") from e

    p = SpectralParameter.from_y(root, branch)
    field = function.field(p)
    value = function.from_field(p, field) - target
    shift = -value / function.derivative(p, tail_tolerance)
    polished = root + shift
    if low < polished < high:
        p_polished = SpectralParameter.from_y(polished, branch)
        field_polished = function.field(p_polished)
        value_polished = function.from_field(p_polished, field_polished) - target
        if abs(value_polished) <= abs(value):
            root, p, field, value = polished, p_polished, field_polished, value_polished
    norm = green_norm(basis, x0, p.z, tail_tolerance).value
    result = PrincipalEigenvalue(
        xi=p.xi, y=root, branch=branch, alpha=alpha_value, alpha_threshold=threshold, x0=x0,
        residual=abs(value), bracket=(float(low), float(high)), newton_shift=float(shift),
        field=field, green_norm=norm, evaluations=function.evaluations,
    )
    logger.info(
        f"principal_eigenvalue: x0={x0.tolist()}, alpha={alpha_value}, xi={result.xi:.12e}, "
        f"branch={branch.value}, residual={result.residual:.3e}, evaluations={result.evaluations}"
    )
    return result


def _parameter_for(grid: DomainGrid, basis: EigenBasis, z: float) -> SpectralParameter:
    if grid.dim == 2 and z == 0.0:
        raise DomainError(ERROR_2D_ZERO_Z)
    ceiling = spectral_ceiling(grid, basis)
    if z <= -ceiling:
        raise SpectralMarginError(f"z={z} is not above -lambda_0={-ceiling:.6e}.")
    return SpectralParameter.from_xi(-z)


def krein_denominator(
    grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, alpha: AlphaLike, z: float, tolerance: float = 1e-8
) -> tuple[complex, HField]:
    """Denominator of the charge; its zero in z is the pole at -xi."""
    a = CouplingAlpha.parse(alpha)
    p = _parameter_for(grid, basis, z)
    field = solve_h(grid, basis, x0, p, tolerance)
    h = complex(field.coincidence, field.imag_coincidence)
    if grid.dim == 3:
        denominator = a.value + p.sqrt_z / (4.0 * np.pi) + h
    else:
        denominator = a.value - np.log(p.sqrt_z) - 2.0 * np.pi * h
    return complex(denominator), field


def charge(
    grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, alpha: AlphaLike, z: float, tolerance: float = 1e-8
) -> Charge:
    """Charge q_z of the perturbed resolvent (H_alpha + z)^-1; zero for alpha = +-inf.

    Raises:
        PoleProximityError: If |denominator| <= 1e-12.
    """
    a = CouplingAlpha.parse(alpha)
    if not a.finite:
        _parameter_for(grid, basis, z)
        return Charge(q=0j, z=float(z), denominator=complex(np.inf))
    denominator, field = krein_denominator(grid, basis, x0, a, z, tolerance)
    if abs(denominator) <= POLE_TOLERANCE:
        raise PoleProximityError(ERROR_POLE.format(z, abs(denominator)))
    return Charge(q=1.0 / denominator, z=float(z), denominator=denominator, field=field)


def _regular_green(grid: DomainGrid, field: HField, p: Optional[SpectralParameter]) -> np.ndarray:
    """Real part of G_free - h on the interior nodes; NaN where a node hits x0."""
    r = np.linalg.norm(grid.coords - field.x0, axis=1)
    values = np.full(grid.n_nodes, np.nan)
    away = r > 0
    if p is None:
        values[away] = harmonic_f_data(r[away]) - field.values[away]
    else:
        values[away] = free_green_real(grid.dim, p, r[away]) - field.values[away]
    return values


def discrete_green(grid: DomainGrid, x0: np.ndarray, z: float, tolerance: float = 1e-8) -> np.ndarray:
    """Lattice Green function: (A + z) u = delta_x0 with the delta spread by multilinear weights."""
    nodes, weights = grid.interpolation_weights(x0)
    rhs = np.zeros(grid.n_nodes)
    np.add.at(rhs, nodes, weights / grid.cell_volume)
    return grid.solve(z, rhs, tolerance)


def eigenfunction(
    grid: DomainGrid, basis: EigenBasis, x0: np.ndarray, pe: PrincipalEigenvalue, tolerance: float = 1e-8
) -> EigenFunction:
    """Eigenfunction G_0^{-xi}(., x0) at the principal eigenvalue, L2-normalized
    outside the ball of radius 2 cells around x0.

    The values are the lattice Green function of (A - xi). `residual` is the
    discrete (A - xi) u residual on nodes farther than 5 cells from x0, relative
    to the norm of u there. `continuum_gap` compares u with the normalized
    G_free - h on the same nodes, and `boundary_trace` is the Dirichlet trace of
    G_free - h. Positivity is audited on nodes outside the 2-cell ball and at
    least one cell from the boundary.
    """
    field = pe.field
    if field is None or not np.allclose(field.x0, x0):
        p = pe.parameter
        field = solve_f0(grid, x0, tolerance) if (grid.dim == 2 and pe.branch == Branch.ZERO_XI) else solve_h(
            grid, basis, x0, p, tolerance
        )
    p = None if (grid.dim == 2 and pe.branch == Branch.ZERO_XI) else pe.parameter
    r = np.linalg.norm(grid.coords - field.x0, axis=1)
    outside = r >= 2.0 * grid.spacing
    far = r > 5.0 * grid.spacing

    lattice = discrete_green(grid, field.x0, -pe.xi, tolerance)
    scale = 1.0 / grid.l2_norm(lattice[outside])
    values = scale * lattice
    applied = grid.operator @ values - pe.xi * values
    residual = grid.l2_norm(applied[far]) / grid.l2_norm(values[far])

    continuum = _regular_green(grid, field, p)
    continuum_scale = 1.0 / grid.l2_norm(continuum[outside])
    gap = grid.l2_norm(values[far] - continuum_scale * continuum[far]) / grid.l2_norm(values[far])

    interior = outside & (grid.shape.boundary_distance(grid.coords) >= grid.spacing)
    minimum = float(np.min(values[interior]))
    r_boundary = np.linalg.norm(grid.boundary_points - field.x0, axis=1)
    if p is None:
        free_boundary = harmonic_f_data(r_boundary)
    else:
        free_boundary = free_green_real(grid.dim, p, r_boundary)
    trace = float(np.max(np.abs(free_boundary - field.boundary_values))) * continuum_scale
    logger.debug(f"eigenfunction: residual={residual:.3e}, continuum_gap={gap:.3e}, minimum={minimum:.3e}")
    return EigenFunction(
        values=values,
        residual=float(residual),
        boundary_trace=trace,
        continuum_gap=float(gap),
        minimum=minimum,
        positive=minimum > 0,
        scale=scale,
    )


def apply_resolvent(
    grid: DomainGrid,
    basis: EigenBasis,
    x0: np.ndarray,
    alpha: AlphaLike,
    z: float,
    phi: np.ndarray,
    tolerance: float = 1e-8,
) -> ResolventAction:
    """(H_alpha + z)^-1 phi in the truncated eigenbasis plus the rank-one charge term.

    The charge term is weight * q_z * <G_0^z, phi> * G_0^z with weight 1 in 3D
    and -2 pi in 2D, and <G_0^z, phi> = sum psi(x0) c / (lambda + z).
    """
    a = CouplingAlpha.parse(alpha)
    phi = np.asarray(phi, dtype=float)
    modes = basis.nodal_values()
    coefficients = grid.cell_volume * modes.T @ phi
    resolved = coefficients / (basis.eigenvalues + z)
    free_part = modes @ resolved
    charge_value = charge(grid, basis, x0, a, z, tolerance)
    if not a.finite:
        return ResolventAction(values=free_part, free_part=free_part, coefficient=0.0, q=0j,
                               norm=grid.l2_norm(free_part))
    amplitude = float(basis.at_point(charge_value.field.x0) @ resolved)
    coefficient = RESOLVENT_WEIGHT[grid.dim] * charge_value.q.real * amplitude
    green = _regular_green(grid, charge_value.field, SpectralParameter.from_xi(-z))
    values = free_part + coefficient * green
    finite = np.isfinite(values)
    return ResolventAction(
        values=values, free_part=free_part, coefficient=coefficient, q=charge_value.q,
        norm=grid.l2_norm(values[finite]),
    )
