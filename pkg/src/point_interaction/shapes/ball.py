import numpy as np

from point_interaction.shapes.disk import DiskShape


class BallShape(DiskShape):
    """The ball of radius R centred at the origin."""

    @property
    def dim(self) -> int:
        return 3

    @property
    def measure(self) -> float:
        return float(4.0 * np.pi * self.radius**3 / 3.0)

    @property
    def boundary_measure(self) -> float:
        return float(4.0 * np.pi * self.radius**2)
