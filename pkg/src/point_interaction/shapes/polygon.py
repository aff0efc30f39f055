from functools import cached_property

import numpy as np
from matplotlib.path import Path

from point_interaction.core.base_shape import BaseShape


def _segment_distances(points: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Distances (n_points, n_edges) from points to closed segments."""
    edge = ends - starts
    rel = points[:, None, :] - starts[None, :, :]
    length2 = np.sum(edge * edge, axis=1)
    t = np.clip(np.sum(rel * edge[None, :, :], axis=2) / length2[None, :], 0.0, 1.0)
    foot = starts[None, :, :] + t[:, :, None] * edge[None, :, :]
    return np.linalg.norm(points[:, None, :] - foot, axis=2)


class PolygonShape(BaseShape):
    """A simple polygon given by its vertex list, in either orientation."""

    @cached_property
    def vertices(self) -> np.ndarray:
        vertices = np.asarray(self.config["vertices"], dtype=float)
        if np.allclose(vertices[0], vertices[-1]):
            vertices = vertices[:-1]
        return vertices

    @cached_property
    def path(self) -> Path:
        closed = np.vstack([self.vertices, self.vertices[:1]])
        codes = [Path.MOVETO] + [Path.LINETO] * (len(self.vertices) - 1) + [Path.CLOSEPOLY]
        return Path(closed, codes)

    @property
    def dim(self) -> int:
        return 2

    @cached_property
    def _edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    @cached_property
    def signed_area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def _edge_distances(self, points: np.ndarray) -> np.ndarray:
        starts, ends = self._edges
        return _segment_distances(np.atleast_2d(points), starts, ends)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        inside = self.path.contains_points(points)
        return inside & (self.boundary_distance(points) > 1e-12 * self.scale)

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        return np.min(self._edge_distances(points), axis=1)

    def outward_normal(self, points: np.ndarray) -> np.ndarray:
        starts, ends = self._edges
        edge = np.argmin(self._edge_distances(points), axis=1)
        tangent = ends[edge] - starts[edge]
        tangent /= np.linalg.norm(tangent, axis=1)[:, None]
        orientation = 1.0 if self.signed_area > 0 else -1.0
        return orientation * np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def measure(self) -> float:
        return abs(self.signed_area)

    @property
    def boundary_measure(self) -> float:
        starts, ends = self._edges
        return float(np.sum(np.linalg.norm(ends - starts, axis=1)))

    @cached_property
    def centroid(self) -> np.ndarray:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        cross = x * np.roll(y, -1) - np.roll(x, -1) * y
        cx = np.sum((x + np.roll(x, -1)) * cross)
        cy = np.sum((y + np.roll(y, -1)) * cross)
        return np.array([cx, cy]) / (6.0 * self.signed_area)

    @cached_property
    def convex(self) -> bool:
        starts, ends = self._edges
        edge = ends - starts
        turn = edge[:, 0] * np.roll(edge[:, 1], -1) - edge[:, 1] * np.roll(edge[:, 0], -1)
        return bool(np.all(turn >= -1e-12) or np.all(turn <= 1e-12))
