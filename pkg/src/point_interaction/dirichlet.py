"""Eigenpairs of the Dirichlet Laplacian and the eigen-sums built from them."""

import hashlib
import logging
from abc import ABCMeta, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import integrate, linalg
from scipy.sparse import linalg as sparse_linalg

from point_interaction.core.errors import DomainError, NumericalError
from point_interaction.geometry import DENSE_EIGEN_LIMIT, DomainGrid

logger = logging.getLogger("point_interaction")

# Constants
LEVEL_TOLERANCE = 1e-6
TAIL_TARGET = 1e-4
MODE_CAP = 65536
NODES_PER_MODE = 10
ERROR_MODE_COUNT = "At least one mode is required, got {}."
ERROR_GRID_CAPACITY = "Grid with {} nodes cannot carry {} modes (need {} nodes per mode)."
ERROR_NUMERIC_3D = "Numeric eigenbases are only available in 2D; kind '{}' is 3D."
ERROR_TAIL = "Eigen-sum tail {:.3e} exceeds {:.3e} of the sum at z={}."


class BasisSource(str, Enum):
    ANALYTIC_RECTANGLE = "analytic_rectangle"
    ANALYTIC_BOX = "analytic_box"
    RADIAL_BALL = "radial_ball"
    NUMERIC_GRID = "numeric_grid"


@dataclass(frozen=True)
class GreenNorm:
    """S = sum psi(x0)^2 / (lambda + z)^2 split into retained head and tail."""

    value: float
    head: float
    tail: float
    modes: int
    estimated: bool = True

    @property
    def relative_tail(self) -> float:
        return abs(self.tail) / self.value if self.value > 0 else np.inf


def group_levels(eigenvalues: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Level index of each eigenvalue and the multiplicity of each level."""
    levels = np.zeros(len(eigenvalues), dtype=np.int64)
    start = 0
    for i in range(1, len(eigenvalues)):
        if abs(eigenvalues[i] - eigenvalues[start]) < LEVEL_TOLERANCE * abs(eigenvalues[start]):
            levels[i] = levels[i - 1]
        else:
            levels[i] = levels[i - 1] + 1
            start = i
    multiplicities = np.bincount(levels)
    return levels, multiplicities


class EigenBasis(metaclass=ABCMeta):
    """
    EigenBasis holds the first M Dirichlet eigenpairs of a domain, ascending.
    It is immutable after construction.
    """

    source: BasisSource

    def __init__(self, grid: DomainGrid, eigenvalues: np.ndarray):
        self.grid = grid
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        self.levels, self.multiplicities = group_levels(self.eigenvalues)

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    @property
    def lambda0(self) -> float:
        return float(self.eigenvalues[0])

    @abstractmethod
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Eigenfunction values, shape (n_points, M)."""
        pass

    def at_point(self, x0: np.ndarray) -> np.ndarray:
        return self.evaluate(np.atleast_2d(x0))[0]

    def nodal_values(self) -> np.ndarray:
        """Eigenfunctions on the interior nodes of the grid, shape (n_nodes, M)."""
        return self.evaluate(self.grid.coords)

    @abstractmethod
    def green_norm(self, x0: np.ndarray, z: float) -> GreenNorm:
        """Squared L2 norm of the regular Green function, sum psi(x0)^2 / (lambda + z)^2."""
        pass

    def orthonormality_defect(self) -> float:
        values = self.nodal_values()
        gram = self.grid.cell_volume * values.T @ values
        return float(np.max(np.abs(gram - np.eye(self.size))))

    def weyl_ratio(self) -> Optional[float]:
        """Count of retained modes over the leading Weyl count at the top eigenvalue."""
        top = float(self.eigenvalues[-1])
        measure = self.grid.shape.measure
        if self.grid.dim == 2:
            weyl = measure * top / (4.0 * np.pi)
        else:
            weyl = measure * top**1.5 / (6.0 * np.pi**2)
        return float(self.size / weyl)

    def summary(self) -> dict:
        return {
            "source": self.source.value,
            "size": self.size,
            "lambda0": self.lambda0,
            "levels": int(self.levels[-1] + 1),
            "weyl_ratio": self.weyl_ratio(),
            "orthonormality_defect": self.orthonormality_defect(),
        }


def _weyl_tail(dim: int, cutoff: float, z: float) -> float:
    """Weyl-density estimate of sum psi(x0)^2 / (lambda + z)^2 over lambda > cutoff."""
    if dim == 2:
        return 1.0 / (4.0 * np.pi * (cutoff + z))
    value, _ = integrate.quad(
        lambda lam: np.sqrt(lam) / (4.0 * np.pi**2 * (lam + z) ** 2), cutoff, np.inf, epsrel=1e-10
    )
    return float(value)


class AnalyticProductBasis(EigenBasis):
    """Sine-product eigenpairs of a rectangle or a box."""

    def __init__(self, grid: DomainGrid, count: int):
        self.source = BasisSource.ANALYTIC_RECTANGLE if grid.dim == 2 else BasisSource.ANALYTIC_BOX
        self.lengths = grid.shape.lengths
        self.normalisation = float(np.sqrt(2.0**grid.dim / np.prod(self.lengths)))
        eigenvalues, self.numbers = grid.shape.dirichlet_modes(count)
        super().__init__(grid, eigenvalues)

    def _products(self, points: np.ndarray, numbers: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        phases = np.pi * points[:, None, :] * numbers[None, :, :] / self.lengths[None, None, :]
        return self.normalisation * np.prod(np.sin(phases), axis=2)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self._products(points, self.numbers)

    def green_norm(self, x0: np.ndarray, z: float) -> GreenNorm:
        count = self.size
        while True:
            eigenvalues, numbers = self.grid.shape.dirichlet_modes(count)
            values = self._products(x0, numbers)[0]
            head = float(np.sum(values**2 / (eigenvalues + z) ** 2))
            spacing = float(eigenvalues[-1] - eigenvalues[0]) / max(count - 1, 1)
            tail = _weyl_tail(self.grid.dim, float(eigenvalues[-1]) + 0.5 * spacing, z)
            if tail < TAIL_TARGET * head or count >= MODE_CAP:
                return GreenNorm(value=head + tail, head=head, tail=tail, modes=count)
            count *= 2


class RadialBallBasis(EigenBasis):
    """Radial Dirichlet modes of the ball, lambda_n = (n pi / R)^2.

    Non-radial modes vanish at the centre, so the family is complete for every
    eigen-sum evaluated at the centre.
    """

    source = BasisSource.RADIAL_BALL

    def __init__(self, grid: DomainGrid, count: int):
        self.radius = float(grid.shape.radius)
        super().__init__(grid, (np.pi * np.arange(1, count + 1) / self.radius) ** 2)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(np.atleast_2d(points), axis=1)
        k = np.pi * np.arange(1, self.size + 1) / self.radius
        scale = 1.0 / np.sqrt(2.0 * np.pi * self.radius)
        # sin(k r) / r -> k at the centre
        return scale * k[None, :] * np.sinc(k[None, :] * r[:, None] / np.pi)

    def weyl_ratio(self) -> Optional[float]:
        return None

    def green_norm(self, x0: np.ndarray, z: float) -> GreenNorm:
        if np.linalg.norm(x0) > 1e-12:
            raise DomainError("The radial ball basis only represents eigen-sums at the centre.")

        def term(n):
            lam = (np.pi * n / self.radius) ** 2
            return lam / (2.0 * np.pi * self.radius) / (lam + z) ** 2

        count = self.size
        while True:
            head = float(np.sum(term(np.arange(1, count + 1, dtype=float))))
            tail, _ = integrate.quad(term, count + 0.5, np.inf, epsrel=1e-10)
            if tail < TAIL_TARGET * head or count >= MODE_CAP:
                return GreenNorm(value=head + tail, head=head, tail=float(tail), modes=count)
            count *= 2


class NumericGridBasis(EigenBasis):
    """Lowest eigenpairs of the discrete Dirichlet operator of the grid."""

    source = BasisSource.NUMERIC_GRID

    def __init__(self, grid: DomainGrid, eigenvalues: np.ndarray, vectors: np.ndarray):
        self.vectors = vectors
        super().__init__(grid, eigenvalues)

    @classmethod
    def compute(cls, grid: DomainGrid, count: int) -> "NumericGridBasis":
        n = grid.n_nodes
        if n < NODES_PER_MODE * count:
            raise DomainError(ERROR_GRID_CAPACITY.format(n, count, NODES_PER_MODE))
        try:
            if n < DENSE_EIGEN_LIMIT:
                eigenvalues, vectors = linalg.eigh(grid.operator.toarray(), subset_by_index=[0, count - 1])
            else:
                eigenvalues, vectors = sparse_linalg.eigsh(
                    grid.operator, k=count, sigma=0.0, which="LM", v0=np.ones(n)
                )
        except sparse_linalg.ArpackNoConvergence as e:
            logger.error(f"Eigensolver did not converge: {e}", exc_info=True)
            raise NumericalError(f"Eigensolver did not converge: {e}", stage="eigensolver") from e
        order = np.argsort(eigenvalues, kind="stable")
        eigenvalues = eigenvalues[order]
        vectors = vectors[:, order]
        vectors /= np.sqrt(grid.cell_volume * np.sum(vectors**2, axis=0))[None, :]
        # sign convention: psi_0 positive, other modes with a positive largest component
        if np.sum(vectors[:, 0]) < 0:
            vectors[:, 0] *= -1.0
        for k in range(1, count):
            if vectors[np.argmax(np.abs(vectors[:, k])), k] < 0:
                vectors[:, k] *= -1.0
        if np.any(vectors[:, 0] <= 0):
            logger.warning(f"Numeric ground state has {int(np.sum(vectors[:, 0] <= 0))} nonpositive entries.")
        return cls(grid, eigenvalues, vectors)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.grid.interpolate(self.vectors, points)

    def at_point(self, x0: np.ndarray) -> np.ndarray:
        nodes, weights = self.grid.interpolation_weights(x0)
        return weights @ self.vectors[nodes]

    def nodal_values(self) -> np.ndarray:
        return self.vectors

    def green_norm(self, x0: np.ndarray, z: float) -> GreenNorm:
        """Head over the retained modes; the remainder is exact through the
        discrete resolvent applied to the interpolation weights at x0."""
        values = self.at_point(x0)
        head = float(np.sum(values**2 / (self.eigenvalues + z) ** 2))
        nodes, weights = self.grid.interpolation_weights(x0)
        rhs = np.zeros(self.grid.n_nodes)
        rhs[nodes] = weights
        resolved = self.grid.solve(z, rhs)
        total = float(np.sum(resolved**2) / self.grid.cell_volume)
        return GreenNorm(value=total, head=head, tail=total - head, modes=self.size, estimated=False)


def _cache_path(cache_dir: Path, grid: DomainGrid, count: int) -> Path:
    key = f"{grid.spec.model_dump_json()}|{grid.spacing!r}|{count}"
    return Path(cache_dir) / f"eigenbasis-{hashlib.sha256(key.encode()).hexdigest()[:24]}.bin"


def save_basis(basis: NumericGridBasis, path: Path) -> None:
    """Little-endian layout: int64 header [M, n], then M eigenvalues and the n x M vectors."""
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array([basis.size, basis.grid.n_nodes], dtype="<i8")
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(basis.eigenvalues.astype("<f8").tobytes())
        f.write(np.ascontiguousarray(basis.vectors).astype("<f8").tobytes())


def load_basis(grid: DomainGrid, path: Path) -> Optional[NumericGridBasis]:
    raw = Path(path).read_bytes()
    count, n = (int(v) for v in np.frombuffer(raw[:16], dtype="<i8"))
    if n != grid.n_nodes or len(raw) != 16 + 8 * count * (n + 1):
        logger.warning(f"Ignoring eigenbasis cache {path}: layout does not match the grid.")
        return None
    eigenvalues = np.frombuffer(raw[16 : 16 + 8 * count], dtype="<f8").astype(float)
    vectors = np.frombuffer(raw[16 + 8 * count :], dtype="<f8").reshape(n, count).astype(float)
    return NumericGridBasis(grid, eigenvalues, vectors)


def eigenbasis(grid: DomainGrid, count: int, cache_dir: Optional[Path] = None) -> EigenBasis:
    """First `count` Dirichlet eigenpairs of the grid's domain.

    Rectangles and boxes use closed forms, the ball its radial family, and every
    other 2D kind the discrete operator of the grid.

    Args:
        grid: Rasterized domain.
        count: Number of modes M >= 1.
        cache_dir: Optional directory for the binary cache of numeric bases.
    Returns:
        EigenBasis.
    Raises:
        DomainError: If M < 1, the grid is too coarse, or a 3D kind has no basis.
        NumericalError: If the eigensolver does not converge.
    """
    if count < 1:
        raise DomainError(ERROR_MODE_COUNT.format(count))
    kind = grid.spec.kind
    if kind in ("rectangle", "box"):
        basis: EigenBasis = AnalyticProductBasis(grid, count)
    elif kind == "ball":
        basis = RadialBallBasis(grid, count)
    elif grid.dim == 3:
        raise DomainError(ERROR_NUMERIC_3D.format(kind))
    else:
        path = _cache_path(cache_dir, grid, count) if cache_dir is not None else None
        cached = load_basis(grid, path) if path is not None and path.exists() else None
        if cached is not None:
            logger.info(f"eigenbasis: loaded {count} modes from {path}")
            basis = cached
        else:
            basis = NumericGridBasis.compute(grid, count)
            if path is not None:
                save_basis(basis, path)
    logger.info(f"eigenbasis: source={basis.source.value}, M={basis.size}, lambda0={basis.lambda0:.12e}")
    return basis


def lambda0(basis: EigenBasis) -> tuple[float, Callable[[np.ndarray], np.ndarray]]:
    """Ground level and a positive evaluator of its eigenfunction."""

    def ground_state(points: np.ndarray) -> np.ndarray:
        return basis.evaluate(points)[:, 0]

    return basis.lambda0, ground_state


def green_norm(basis: EigenBasis, x0: np.ndarray, z: float, tail_tolerance: float = 0.1) -> GreenNorm:
    """Eigen-sum ||G_0^z(., x0)||^2 with its tail checked against `tail_tolerance`."""
    norm = basis.green_norm(np.asarray(x0, dtype=float), float(z))
    if norm.value <= 0 or (norm.estimated and norm.relative_tail > tail_tolerance):
        raise NumericalError(ERROR_TAIL.format(norm.relative_tail, tail_tolerance, z), stage="green_norm")
    return norm
