"""Run configuration: a validated pydantic model loaded from JSON."""

import json
import logging
import os
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from point_interaction.core.errors import ConfigError
from point_interaction.geometry import DiskSpec, DomainSpec
from point_interaction.specfun import Branch

logger = logging.getLogger("point_interaction")

UNITS_NOTE = "All lengths are dimensionless multiples of the domain scale; ln y is taken in these units."
VERIFY_SUITES = (
    "specfun",
    "ball_oracle",
    "disk_oracle",
    "thresholds",
    "identity",
    "uniqueness",
    "theorem_audit",
    "optimizer",
    "resolvent",
    "convergence",
    "green_positivity",
    "configured_domain",
)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Tolerances(_Section):
    root: PositiveFloat = 1e-10
    solver: PositiveFloat = 1e-8
    oracle: PositiveFloat = 1e-3
    identity: PositiveFloat = 1e-3
    tail: PositiveFloat = 0.1


class AtlasOptions(_Section):
    angles: Optional[int] = Field(default=None, ge=8)
    offsets: Optional[int] = Field(default=None, ge=8)


class HEvalOptions(_Section):
    y_values: list[PositiveFloat] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 5.0], min_length=1)
    branch: Branch = Branch.NEGATIVE_XI


class ResolventOptions(_Section):
    z_values: Optional[list[float]] = None
    offsets: list[PositiveFloat] = Field(default_factory=lambda: [1.0, 0.1, 0.01, 0.001], min_length=1)


class AuditOptions(_Section):
    pairs: PositiveInt = 16


class VerifyOptions(_Section):
    suites: list[Literal[VERIFY_SUITES]] = Field(default_factory=lambda: list(VERIFY_SUITES))  # type: ignore[valid-type]


class RunConfig(_Section):
    units: str = UNITS_NOTE
    domain: DomainSpec = Field(default_factory=lambda: DiskSpec(radius=1.0, resolution=1.0 / 40.0))
    alpha: Union[Literal["inf", "+inf", "-inf"], float] = 0.0
    x0: Optional[list[float]] = None
    basis_size: PositiveInt = 60
    lattice_spacing: Optional[PositiveFloat] = None
    atlas: AtlasOptions = Field(default_factory=AtlasOptions)
    tolerances: Tolerances = Field(default_factory=Tolerances)
    output_dir: str = "results"
    threads: PositiveInt = 1
    seed: int = 0
    cache_dir: Optional[str] = None
    h_eval: HEvalOptions = Field(default_factory=HEvalOptions)
    resolvent: ResolventOptions = Field(default_factory=ResolventOptions)
    audit: AuditOptions = Field(default_factory=AuditOptions)
    verify: VerifyOptions = Field(default_factory=VerifyOptions)

    @model_validator(mode="after")
    def _check_source_point(self) -> "RunConfig":
        if self.x0 is not None and len(self.x0) != self.domain.dim:
            raise ValueError(f"x0 must have {self.domain.dim} coordinates, got {len(self.x0)}")
        if isinstance(self.alpha, float) and np.isnan(self.alpha):
            raise ValueError("alpha must not be NaN")
        return self

    @property
    def alpha_value(self) -> float:
        if isinstance(self.alpha, str):
            return -np.inf if self.alpha == "-inf" else np.inf
        return float(self.alpha)

    def source_point(self, centroid: np.ndarray) -> np.ndarray:
        """Configured x0, or the domain centroid."""
        return np.asarray(self.x0 if self.x0 is not None else centroid, dtype=float)


def _expand(value: Any) -> Any:
    if isinstance(value, dict):
        return assign_environ(value)
    if isinstance(value, list):
        return [_expand(item) for item in value]
    if isinstance(value, str):
        return os.path.expanduser(os.path.expandvars(value))  # noqa: PTH111
    return value


def assign_environ(config: dict[str, Any]) -> dict[str, Any]:
    """Copy of a raw JSON or YAML mapping with $VAR and ~ expanded in every string.

    Nested mappings and lists are walked; the input is left untouched. Run
    configurations pass through here before `RunConfig` validation, and the
    logging YAML before `dictConfig`.
    """
    return {key: _expand(value) for key, value in config.items()}


def load_config(path: Optional[str]) -> RunConfig:
    """Load and validate a JSON run configuration; None gives the defaults.

    Raises:
        ConfigError: If the file cannot be read or does not validate.
    """
    if path is None:
        return RunConfig()
    try:
        with Path(path).open("r", encoding="utf-8") as file:
            raw = json.load(file)
        if not isinstance(raw, dict):
            raise ConfigError(f"Configuration {path} must be a JSON object.")
        return RunConfig.model_validate(assign_environ(raw))
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Failed to read configuration {path}: {e}")
        raise ConfigError(f"Failed to read configuration {path}: {e}") from e
    except ValidationError as e:
        logger.error(f"Invalid configuration {path}: {e}")
        raise ConfigError(f"Invalid configuration {path}: {e}") from e


def dump_config(config: RunConfig, path: Path) -> None:
    """Write the resolved configuration with sorted keys."""
    text = json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")
