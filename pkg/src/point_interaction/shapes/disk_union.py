import itertools
from functools import cached_property

import numpy as np

from point_interaction.core.base_shape import BaseShape

# Midpoint raster used for the centroid of overlapping disks
CENTROID_RASTER = 400


class DiskUnionShape(BaseShape):
    """A union of overlapping disks, e.g. two unit disks with centres 1.5 apart."""

    @cached_property
    def centers(self) -> np.ndarray:
        return np.asarray(self.config["centers"], dtype=float)

    @cached_property
    def radii(self) -> np.ndarray:
        return np.asarray(self.config["radii"], dtype=float)

    @property
    def dim(self) -> int:
        return 2

    def _distances(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.linalg.norm(points[:, None, :] - self.centers[None, :, :], axis=2)

    def contains(self, points: np.ndarray) -> np.ndarray:
        inside = self._distances(points) < self.radii[None, :] * (1.0 - 1e-12)
        return np.any(inside, axis=1)

    @cached_property
    def _intersections(self) -> np.ndarray:
        """Boundary corners: pairwise circle intersections not covered by a third disk."""
        corners = []
        for i, j in itertools.combinations(range(len(self.radii)), 2):
            c1, c2 = self.centers[i], self.centers[j]
            r1, r2 = self.radii[i], self.radii[j]
            d = float(np.linalg.norm(c2 - c1))
            if d == 0.0 or d >= r1 + r2 or d <= abs(r1 - r2):
                continue
            a = (r1**2 - r2**2 + d**2) / (2.0 * d)
            h = np.sqrt(max(r1**2 - a**2, 0.0))
            u = (c2 - c1) / d
            base = c1 + a * u
            perp = np.array([-u[1], u[0]])
            corners.extend([base + h * perp, base - h * perp])
        if not corners:
            return np.zeros((0, 2))
        corners = np.array(corners)
        return corners[~self.contains(corners)]

    def _radial_projections(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        rel = points[:, None, :] - self.centers[None, :, :]
        norm = np.linalg.norm(rel, axis=2)
        direction = np.where(
            norm[:, :, None] > 0, rel / np.where(norm > 0, norm, 1.0)[:, :, None], 0.0
        )
        direction[norm == 0, 0] = 1.0
        return self.centers[None, :, :] + self.radii[None, :, None] * direction

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        projections = self._radial_projections(points)
        n, k, _ = projections.shape
        flat = projections.reshape(n * k, 2)
        valid = ~self.contains(flat).reshape(n, k)
        dist = np.linalg.norm(projections - points[:, None, :], axis=2)
        dist = np.where(valid, dist, np.inf)
        best = np.min(dist, axis=1)
        if len(self._intersections):
            corner = np.linalg.norm(
                points[:, None, :] - self._intersections[None, :, :], axis=2
            )
            best = np.minimum(best, np.min(corner, axis=1))
        return best

    def outward_normal(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        gap = np.abs(self._distances(points) - self.radii[None, :])
        nearest = np.argmin(gap, axis=1)
        rel = points - self.centers[nearest]
        norm = np.linalg.norm(rel, axis=1)
        rel[norm == 0] = [1.0, 0.0]
        return rel / np.linalg.norm(rel, axis=1)[:, None]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        low = np.min(self.centers - self.radii[:, None], axis=0)
        high = np.max(self.centers + self.radii[:, None], axis=0)
        return low, high

    @cached_property
    def measure(self) -> float:
        """Inclusion-exclusion over pairs; exact when no three disks overlap."""
        area = float(np.sum(np.pi * self.radii**2))
        for i, j in itertools.combinations(range(len(self.radii)), 2):
            r1, r2 = self.radii[i], self.radii[j]
            d = float(np.linalg.norm(self.centers[j] - self.centers[i]))
            if d >= r1 + r2:
                continue
            if d <= abs(r1 - r2):
                area -= np.pi * min(r1, r2) ** 2
                continue
            lens = (
                r1**2 * np.arccos((d**2 + r1**2 - r2**2) / (2 * d * r1))
                + r2**2 * np.arccos((d**2 + r2**2 - r1**2) / (2 * d * r2))
                - 0.5
                * np.sqrt((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
            )
            area -= lens
        return float(area)

    @cached_property
    def boundary_measure(self) -> float:
        # arc length of each circle outside the other disks
        total = 0.0
        angles = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
        ring = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        for center, radius in zip(self.centers, self.radii):
            exposed = ~self.contains(center + radius * ring * (1.0 + 1e-9))
            total += 2.0 * np.pi * radius * np.count_nonzero(exposed) / len(angles)
        return float(total)

    @cached_property
    def centroid(self) -> np.ndarray:
        low, high = self.bounding_box()
        step = (high - low) / CENTROID_RASTER
        axes = [low[k] + (np.arange(CENTROID_RASTER) + 0.5) * step[k] for k in range(2)]
        xx, yy = np.meshgrid(*axes, indexing="ij")
        points = np.stack([xx.ravel(), yy.ravel()], axis=1)
        inside = self.contains(points)
        return points[inside].mean(axis=0)

    @property
    def convex(self) -> bool:
        return len(self.radii) == 1
