import numpy as np

from point_interaction.core.base_shape import MIN_LINK_FRACTION, BaseShape


class DiskShape(BaseShape):
    """The disk of radius R centred at the origin."""

    @property
    def radius(self) -> float:
        return float(self.config["radius"])

    @property
    def dim(self) -> int:
        return 2

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.linalg.norm(points, axis=1) < self.radius * (1.0 - 1e-12)

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        return np.abs(self.radius - np.linalg.norm(np.atleast_2d(points), axis=1))

    def outward_normal(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points).astype(float)
        norms = np.linalg.norm(points, axis=1)
        normals = np.zeros_like(points)
        normals[:, 0] = 1.0
        nonzero = norms > 0
        normals[nonzero] = points[nonzero] / norms[nonzero, None]
        return normals

    def boundary_crossing(self, inside: np.ndarray, outside: np.ndarray) -> np.ndarray:
        # |p + t d| = R, the root with t > 0
        step = outside - inside
        a = np.sum(step * step, axis=1)
        b = 2.0 * np.sum(inside * step, axis=1)
        c = np.sum(inside * inside, axis=1) - self.radius**2
        disc = np.sqrt(np.maximum(b * b - 4.0 * a * c, 0.0))
        theta = (-b + disc) / (2.0 * a)
        return np.clip(theta, MIN_LINK_FRACTION, 1.0)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return -self.radius * np.ones(self.dim), self.radius * np.ones(self.dim)

    @property
    def measure(self) -> float:
        return float(np.pi * self.radius**2)

    @property
    def boundary_measure(self) -> float:
        return float(2.0 * np.pi * self.radius)

    @property
    def centroid(self) -> np.ndarray:
        return np.zeros(self.dim)

    @property
    def convex(self) -> bool:
        return True
