"""Modified Bessel functions and the free Green kernels in two and three dimensions.

The kernels are the Green functions of -Delta + z in the whole space,
    G^z(r) = K0(sqrt(z) r) / (2 pi)        (2D)
    G^z(r) = exp(-sqrt(z) r) / (4 pi r)    (3D)
for the two real half-lines of z used here: z = y^2 > 0 (negative energy) and
z = -y^2 < 0 (positive energy, sqrt(z) = i y on the principal branch).
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike
from scipy import integrate, optimize, special

from point_interaction.core.errors import DomainError

logger = logging.getLogger("point_interaction")

EULER_GAMMA = float(np.euler_gamma)

# Constants
ERROR_NONPOSITIVE_ARGUMENT = "{} requires x > 0, got min(x)={}."
ERROR_NEGATIVE_ARGUMENT = "{} requires x >= 0, got min(x)={}."
ERROR_NONPOSITIVE_RADIUS = "free_green requires r > 0, got min(r)={}."
ERROR_UNSUPPORTED_DIMENSION = "Dimension {} is not supported (expected 2 or 3)."
ERROR_LOGARITHMIC_LIMIT = "The 2D kernel has no y = 0 limit; use the harmonic f field."


class Branch(str, Enum):
    """Energy branch of the spectral parameter."""

    NEGATIVE_XI = "negative_xi"
    ZERO_XI = "zero_xi"
    POSITIVE_XI = "positive_xi"


@dataclass(frozen=True)
class SpectralParameter:
    """Energy xi with y = sqrt(|xi|) and z = -xi.

    branch is NEGATIVE_XI for xi <= 0 (sqrt(z) = y) and POSITIVE_XI for xi > 0
    (sqrt(z) = i y).
    """

    xi: float
    y: float
    branch: Branch

    def __post_init__(self):
        if self.branch == Branch.ZERO_XI:
            raise DomainError("A spectral parameter lives on the negative or positive branch.")
        if self.y < 0:
            raise DomainError(f"y must be nonnegative, got {self.y}.")
        if (self.branch == Branch.NEGATIVE_XI) != (self.xi <= 0):
            raise DomainError(f"Branch {self.branch.value} does not match xi={self.xi}.")

    @classmethod
    def from_xi(cls, xi: float) -> "SpectralParameter":
        xi = float(xi)
        branch = Branch.NEGATIVE_XI if xi <= 0 else Branch.POSITIVE_XI
        return cls(xi=xi, y=float(np.sqrt(abs(xi))), branch=branch)

    @classmethod
    def from_y(cls, y: float, branch: Branch = Branch.NEGATIVE_XI) -> "SpectralParameter":
        y = float(y)
        if branch == Branch.NEGATIVE_XI:
            return cls(xi=-(y**2), y=y, branch=branch)
        if y == 0.0:
            raise DomainError("The positive branch requires y > 0.")
        return cls(xi=y**2, y=y, branch=branch)

    @property
    def negative(self) -> bool:
        return self.branch == Branch.NEGATIVE_XI

    @property
    def z(self) -> float:
        """Real spectral argument of (-Delta + z)."""
        return -self.xi

    @property
    def sqrt_z(self) -> complex:
        return complex(self.y) if self.negative else 1j * self.y


def _checked(x: ArrayLike, name: str, strict: bool) -> np.ndarray:
    values = np.asarray(x, dtype=float)
    if values.size and (np.min(values) <= 0 if strict else np.min(values) < 0):
        template = ERROR_NONPOSITIVE_ARGUMENT if strict else ERROR_NEGATIVE_ARGUMENT
        raise DomainError(template.format(name, np.min(values)))
    return values


def bessel_K0(x: ArrayLike) -> np.ndarray:
    """Macdonald function K0, defined for x > 0."""
    return special.k0(_checked(x, "bessel_K0", strict=True))


def bessel_K1(x: ArrayLike) -> np.ndarray:
    return special.k1(_checked(x, "bessel_K1", strict=True))


def bessel_I0(x: ArrayLike) -> np.ndarray:
    """Modified Bessel function I0 = sum (x/2)^(2n) / (n!)^2, defined for x >= 0."""
    return special.i0(_checked(x, "bessel_I0", strict=False))


def bessel_I1(x: ArrayLike) -> np.ndarray:
    return special.i1(_checked(x, "bessel_I1", strict=False))


def k0_quadrature(x: float) -> float:
    """K0(x) = int_0^inf exp(-x cosh t) dt."""
    value, _ = integrate.quad(lambda t: np.exp(-x * np.cosh(t)), 0.0, np.inf, epsabs=0.0, epsrel=1e-13)
    return float(value)


def k1_quadrature(x: float) -> float:
    """K1(x) = int_0^inf exp(-x cosh t) cosh t dt."""
    value, _ = integrate.quad(
        lambda t: np.exp(-x * np.cosh(t)) * np.cosh(t), 0.0, np.inf, epsabs=0.0, epsrel=1e-13
    )
    return float(value)


def i0_quadrature(x: float) -> float:
    """I0(x) = (1/pi) int_0^pi exp(x cos t) dt."""
    value, _ = integrate.quad(lambda t: np.exp(x * np.cos(t)), 0.0, np.pi, epsabs=0.0, epsrel=1e-13)
    return float(value / np.pi)


def i1_quadrature(x: float) -> float:
    """I1(x) = (1/pi) int_0^pi exp(x cos t) cos t dt."""
    value, _ = integrate.quad(
        lambda t: np.exp(x * np.cos(t)) * np.cos(t), 0.0, np.pi, epsabs=0.0, epsrel=1e-13
    )
    return float(value / np.pi)


def j0_quadrature(x: float) -> float:
    """J0(x) = (1/pi) int_0^pi cos(x sin t) dt."""
    value, _ = integrate.quad(lambda t: np.cos(x * np.sin(t)), 0.0, np.pi, epsabs=0.0, epsrel=1e-13)
    return float(value / np.pi)


def first_j0_zero() -> float:
    """First positive zero of J0 by bracketed root search on the quadrature form."""
    return float(optimize.brentq(j0_quadrature, 2.0, 3.0, xtol=1e-15, rtol=1e-15))


def _radii(r: ArrayLike) -> np.ndarray:
    values = np.asarray(r, dtype=float)
    if values.size and np.min(values) <= 0:
        raise DomainError(ERROR_NONPOSITIVE_RADIUS.format(np.min(values)))
    return values


def free_green(dim: int, p: SpectralParameter, r: ArrayLike) -> np.ndarray:
    """Free Green kernel G^z(r) at z = -p.xi, complex on the positive branch.

    Positive branch: (1/2pi) K0(i y r) = -(Y0(y r) + i J0(y r)) / 4 in 2D and
    exp(-i y r) / (4 pi r) in 3D.
    """
    r = _radii(r)
    y = p.y
    if dim == 2:
        if p.negative:
            if y == 0.0:
                raise DomainError(ERROR_LOGARITHMIC_LIMIT)
            return (special.k0(y * r) / (2.0 * np.pi)).astype(complex)
        return -(special.y0(y * r) + 1j * special.j0(y * r)) / 4.0
    if dim == 3:
        if p.negative:
            return (np.exp(-y * r) / (4.0 * np.pi * r)).astype(complex)
        return (np.cos(y * r) - 1j * np.sin(y * r)) / (4.0 * np.pi * r)
    raise DomainError(ERROR_UNSUPPORTED_DIMENSION.format(dim))


def free_green_real(dim: int, p: SpectralParameter, r: ArrayLike) -> np.ndarray:
    """Real part of free_green: the boundary data of h (or of Re h)."""
    return np.real(free_green(dim, p, r))


def free_green_imag(dim: int, p: SpectralParameter, r: ArrayLike) -> np.ndarray:
    """Imaginary part of free_green, extended continuously to r = 0.

    Both -J0(y r)/4 and -sin(y r)/(4 pi r) are entire in r, so this is also
    the imaginary part of h on the positive branch.
    """
    r = np.asarray(r, dtype=float)
    if p.negative:
        return np.zeros_like(r)
    if dim == 2:
        return -special.j0(p.y * r) / 4.0
    if dim == 3:
        return -p.y * np.sinc(p.y * r / np.pi) / (4.0 * np.pi)
    raise DomainError(ERROR_UNSUPPORTED_DIMENSION.format(dim))


def free_green_dy(dim: int, p: SpectralParameter, r: ArrayLike) -> np.ndarray:
    """y-derivative of free_green_real, the boundary data of the y-derivative problem."""
    r = _radii(r)
    y = p.y
    if dim == 2:
        if p.negative:
            return -r * special.k1(y * r) / (2.0 * np.pi)
        return r * special.y1(y * r) / 4.0
    if dim == 3:
        if p.negative:
            return -np.exp(-y * r) / (4.0 * np.pi)
        return -np.sin(y * r) / (4.0 * np.pi)
    raise DomainError(ERROR_UNSUPPORTED_DIMENSION.format(dim))


def harmonic_f_data(r: ArrayLike) -> np.ndarray:
    """Boundary data -(1/2pi)(ln(r/2) + gamma) of the 2D harmonic field at y = 0."""
    r = _radii(r)
    return -(np.log(r / 2.0) + EULER_GAMMA) / (2.0 * np.pi)
