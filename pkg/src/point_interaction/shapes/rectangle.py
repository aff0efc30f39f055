import numpy as np

from point_interaction.shapes.box import BoxShape


class RectangleShape(BoxShape):
    """The rectangle (0, a) x (0, b)."""

    @property
    def lengths(self) -> np.ndarray:
        return np.array([self.config["a"], self.config["b"]], dtype=float)

    @property
    def boundary_measure(self) -> float:
        return float(2.0 * np.sum(self.lengths))
