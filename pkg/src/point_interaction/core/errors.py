"""Error hierarchy shared by every stage of the pipeline."""

from typing import Optional


class PointInteractionError(Exception):
    """Base class of all errors raised by point_interaction."""


class ConfigError(PointInteractionError, ValueError):
    """The run configuration is invalid."""


class DomainError(PointInteractionError, ValueError):
    """An argument lies outside the domain of an operation.

    Raised for empty or disconnected rasters, unsupported shapes, source points
    too close to the boundary, and hyperplanes that miss the domain.
    """


class SpectralMarginError(DomainError):
    """The spectral parameter is too close to (or above) the first Dirichlet level."""


class NotAdmittedError(DomainError):
    """A hyperplane does not have the interior reflection property."""


class NumericalError(PointInteractionError, RuntimeError):
    """A numerical stage failed.

    Args:
        message: Human readable description.
        stage: Name of the failing stage, reported by the command line front end.
    """

    def __init__(self, message: str, stage: str = "numerics"):
        super().__init__(message)
        self.stage = stage


class BracketError(NumericalError):
    """The root function has no sign change on the sampled interval."""

    def __init__(
        self,
        message: str,
        stage: str = "principal_eigenvalue",
        sign_table: Optional[list[tuple[float, float]]] = None,
    ):
        super().__init__(message, stage)
        self.sign_table = sign_table or []


class PoleProximityError(NumericalError):
    """The spectral argument sits on a pole of the perturbed resolvent."""

    def __init__(self, message: str, stage: str = "charge"):
        super().__init__(message, stage)


class VerificationError(PointInteractionError):
    """At least one verification suite failed."""
