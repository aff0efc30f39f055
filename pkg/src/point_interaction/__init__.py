"""Principal eigenvalue of a point interaction in a bounded Dirichlet domain."""

from point_interaction.core.errors import (
    ConfigError,
    DomainError,
    NumericalError,
    PointInteractionError,
    VerificationError,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "NumericalError",
    "PointInteractionError",
    "VerificationError",
]
