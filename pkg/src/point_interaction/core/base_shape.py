import logging
from abc import ABCMeta, abstractmethod
from typing import Optional

import numpy as np

logger = logging.getLogger("point_interaction")

# Constants
BISECTION_STEPS = 60
MIN_LINK_FRACTION = 1e-6


class BaseShape(metaclass=ABCMeta):
    """
    BaseShape describes a bounded open region of the plane or of space.
    Rasterization, reflections and the boundary-value solvers only talk to it
    through the methods below.
    """

    def __init__(self, config: dict):
        """
        Initialize the shape with its domain descriptor (a dumped DomainSpec).
        """
        self.config = config

    @property
    def kind(self) -> str:
        return self.config["kind"]

    @property
    @abstractmethod
    def dim(self) -> int:
        """Spatial dimension, 2 or 3."""
        pass

    @abstractmethod
    def contains(self, points: np.ndarray) -> np.ndarray:
        """Return a boolean array telling which points lie strictly inside.

        Args:
            points: Array of shape (n, dim).
        Returns:
            Boolean array of shape (n,).

        """
        pass

    @abstractmethod
    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance from each point to the boundary."""
        pass

    @abstractmethod
    def outward_normal(self, points: np.ndarray) -> np.ndarray:
        """Unit outward normal at (or nearest to) each boundary point."""
        pass

    @abstractmethod
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Return the (low, high) corners of an axis-aligned box enclosing the closure."""
        pass

    @property
    @abstractmethod
    def measure(self) -> float:
        """Area (2D) or volume (3D)."""
        pass

    @property
    @abstractmethod
    def boundary_measure(self) -> float:
        """Perimeter (2D) or surface area (3D)."""
        pass

    @property
    @abstractmethod
    def centroid(self) -> np.ndarray:
        pass

    @property
    @abstractmethod
    def convex(self) -> bool:
        pass

    @property
    def scale(self) -> float:
        low, high = self.bounding_box()
        return float(np.max(high - low))

    @property
    def diameter(self) -> float:
        low, high = self.bounding_box()
        return float(np.linalg.norm(high - low))

    def dirichlet_modes(self, count: int) -> Optional[tuple[np.ndarray, np.ndarray]]:
        """Closed-form Dirichlet eigenpairs, when the shape has them.

        Args:
            count: Number of modes requested.
        Returns:
            None, or a pair (eigenvalues, quantum numbers) sorted ascending.

        """
        return None

    def boundary_crossing(self, inside: np.ndarray, outside: np.ndarray) -> np.ndarray:
        """Locate the boundary along each segment from an inside to an outside point.

        The default bisects on `contains`; shapes with an explicit boundary override it.

        Args:
            inside: Array (n, dim) of interior points.
            outside: Array (n, dim) of exterior points.
        Returns:
            Fractions theta in (0, 1] so that inside + theta * (outside - inside)
            lies on the boundary.

        """
        low = np.zeros(len(inside))
        high = np.ones(len(inside))
        step = outside - inside
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (low + high)
            inner = self.contains(inside + mid[:, None] * step)
            low = np.where(inner, mid, low)
            high = np.where(inner, high, mid)
        return np.clip(0.5 * (low + high), MIN_LINK_FRACTION, 1.0)

    def in_closure(self, points: np.ndarray, tolerance: float) -> np.ndarray:
        """Points inside or within `tolerance` of the boundary."""
        points = np.atleast_2d(points)
        return self.contains(points) | (self.boundary_distance(points) <= tolerance)
