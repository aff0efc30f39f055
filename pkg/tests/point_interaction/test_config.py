import json

import numpy as np
import pytest

from point_interaction.config import (
    VERIFY_SUITES,
    RunConfig,
    assign_environ,
    dump_config,
    load_config,
)
from point_interaction.core.errors import ConfigError
from point_interaction.geometry import BallSpec, DiskSpec


def test_defaults():
    """Test the configuration used when no file is given."""
    config = load_config(None)
    assert isinstance(config.domain, DiskSpec)
    assert config.alpha_value == 0.0
    assert config.tolerances.identity == 1e-3
    assert config.verify.suites == list(VERIFY_SUITES)
    assert config.source_point(np.array([0.1, 0.2])).tolist() == [0.1, 0.2]


@pytest.mark.parametrize(("alpha", "expected"), [("inf", np.inf), ("+inf", np.inf), ("-inf", -np.inf), (-1.5, -1.5)])
def test_alpha_spellings(alpha, expected):
    """Test the accepted spellings of the coupling constant."""
    assert RunConfig(alpha=alpha).alpha_value == expected


def test_x0_must_match_dimension():
    """Test that x0 is checked against the dimension of the domain."""
    with pytest.raises(ValueError):
        RunConfig(domain=BallSpec(radius=1.0), x0=[0.0, 0.0])


def test_unknown_field_is_rejected():
    """Test that unknown keys are rejected."""
    with pytest.raises(ValueError):
        RunConfig(colour="red")  # type: ignore[call-arg]


def test_load_config_missing_file(tmp_path):
    """Test that an unreadable file is reported as a configuration error."""
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))


def test_load_config_invalid_json(tmp_path):
    """Test that malformed JSON is reported as a configuration error."""
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_load_config_not_an_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_load_config_validation_error(tmp_path):
    """Test that a schema violation is reported as a configuration error."""
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"domain": {"kind": "disk", "radius": -1.0}}), encoding="utf-8")
    with pytest.raises(ConfigError) as e:
        load_config(str(path))
    assert "Invalid configuration" in str(e.value)


def test_load_config_expands_environment(tmp_path, monkeypatch):
    """Test that environment variables in string values are expanded."""
    monkeypatch.setenv("POINT_INTERACTION_OUT", str(tmp_path / "out"))
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"output_dir": "$POINT_INTERACTION_OUT/disk"}), encoding="utf-8")
    assert load_config(str(path)).output_dir == str(tmp_path / "out" / "disk")


def test_assign_environ_nested(monkeypatch):
    monkeypatch.setenv("POINT_INTERACTION_KIND", "disk")
    config = assign_environ({"domain": {"kind": "$POINT_INTERACTION_KIND"}, "threads": 2})
    assert config == {"domain": {"kind": "disk"}, "threads": 2}


def test_dump_config_reloads(tmp_path):
    """Test that a dumped configuration loads back to the same model."""
    # Arrange
    config = RunConfig(domain=DiskSpec(radius=2.0, resolution=0.05), alpha="-inf", x0=[0.1, -0.2], threads=3)
    path = tmp_path / "resolved_config.json"

    # Act
    dump_config(config, path)

    # Assert
    assert load_config(str(path)) == config
    text = path.read_text(encoding="utf-8")
    assert text.endswith("\n")
    assert list(json.loads(text)) == sorted(json.loads(text))


def test_assign_environ_lists_and_copy(monkeypatch):
    """Test that strings inside lists are expanded and the input mapping is not modified."""
    # Arrange
    monkeypatch.setenv("POINT_INTERACTION_SUITE", "specfun")
    raw = {"verify": {"suites": ["$POINT_INTERACTION_SUITE", "identity"]}, "x0": [0.1, 0.2]}

    # Act
    config = assign_environ(raw)

    # Assert
    assert config == {"verify": {"suites": ["specfun", "identity"]}, "x0": [0.1, 0.2]}
    assert raw["verify"]["suites"][0] == "$POINT_INTERACTION_SUITE"
    assert RunConfig.model_validate(config).verify.suites == ["specfun", "identity"]
