import itertools
from typing import Optional

import numpy as np

from point_interaction.core.base_shape import MIN_LINK_FRACTION, BaseShape


class BoxShape(BaseShape):
    """The box (0, a) x (0, b) x (0, c); also the base of the rectangle."""

    @property
    def lengths(self) -> np.ndarray:
        return np.array(
            [self.config["a"], self.config["b"], self.config["c"]], dtype=float
        )

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def _tolerance(self) -> float:
        return 1e-12 * float(np.max(self.lengths))

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        tol = self._tolerance
        return np.all((points > tol) & (points < self.lengths - tol), axis=1)

    def _face_distances(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.concatenate([points, self.lengths - points], axis=1)

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        inside = np.all((points >= 0.0) & (points <= self.lengths), axis=1)
        inner = np.min(np.abs(self._face_distances(points)), axis=1)
        outer = np.linalg.norm(
            np.maximum(np.maximum(-points, points - self.lengths), 0.0), axis=1
        )
        return np.where(inside, inner, outer)

    def outward_normal(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        face = np.argmin(np.abs(self._face_distances(points)), axis=1)
        normals = np.zeros_like(points, dtype=float)
        axis = face % self.dim
        sign = np.where(face < self.dim, -1.0, 1.0)
        normals[np.arange(len(points)), axis] = sign
        return normals

    def boundary_crossing(self, inside: np.ndarray, outside: np.ndarray) -> np.ndarray:
        step = outside - inside
        theta = np.ones(len(inside))
        for k in range(self.dim):
            moving = np.abs(step[:, k]) > 0
            target = np.where(step[:, k] > 0, self.lengths[k], 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                candidate = (target - inside[:, k]) / step[:, k]
            candidate = np.where(moving & (candidate > 0), candidate, np.inf)
            theta = np.minimum(theta, candidate)
        return np.clip(theta, MIN_LINK_FRACTION, 1.0)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(self.dim), self.lengths.copy()

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def boundary_measure(self) -> float:
        a, b, c = self.lengths
        return float(2.0 * (a * b + b * c + a * c))

    @property
    def centroid(self) -> np.ndarray:
        return 0.5 * self.lengths

    @property
    def convex(self) -> bool:
        return True

    def dirichlet_modes(self, count: int) -> Optional[tuple[np.ndarray, np.ndarray]]:
        """Sine-product eigenpairs: lambda = pi^2 sum (m_k / L_k)^2, m_k >= 1.

        Modes are ordered by eigenvalue, ties broken by the quantum numbers.
        """
        lengths = self.lengths
        # Weyl estimate of the cutoff holding `count` modes, widened until it does
        if self.dim == 2:
            cutoff = 4.0 * np.pi * count / self.measure
        else:
            cutoff = (6.0 * np.pi**2 * count / self.measure) ** (2.0 / 3.0)
        cutoff = 1.5 * cutoff + 2.0 * float(np.pi**2 * np.sum(1.0 / lengths**2))
        while True:
            top = [int(np.ceil(L * np.sqrt(cutoff) / np.pi)) + 1 for L in lengths]
            numbers = np.array(
                list(itertools.product(*[range(1, m + 1) for m in top])), dtype=int
            )
            eigenvalues = np.pi**2 * np.sum((numbers / lengths) ** 2, axis=1)
            keep = eigenvalues <= cutoff
            if np.count_nonzero(keep) >= count:
                break
            cutoff *= 2.0
        numbers = numbers[keep]
        eigenvalues = eigenvalues[keep]
        order = np.lexsort(tuple(numbers[:, k] for k in reversed(range(self.dim))) + (eigenvalues,))
        return eigenvalues[order][:count], numbers[order][:count]
