import json
import logging

import pytest

from point_interaction import cli
from point_interaction.core.errors import BracketError, DomainError, NumericalError
from point_interaction.verify import SuiteReport

SQUARE = {"domain": {"kind": "rectangle", "a": 1.0, "b": 1.0, "resolution": 0.05}, "basis_size": 10}
DISK = {"domain": {"kind": "disk", "radius": 1.0, "resolution": 0.05}, "basis_size": 20}
SMALL_SQUARE = {
    **SQUARE,
    "alpha": 2.0,
    "lattice_spacing": 0.2,
    "atlas": {"angles": 8, "offsets": 16},
    "h_eval": {"y_values": [0.5, 1.0]},
    "audit": {"pairs": 2},
    "resolvent": {"offsets": [1.0, 0.1]},
    "verify": {"suites": ["specfun"]},
    "threads": 2,
}
COMMAND_FILES = {
    "basis": ("basis.csv", "basis.json"),
    "h-eval": ("h_eval.csv", "h_field.csv", "h_eval.gp"),
    "solve": ("solve.json",),
    "landscape": ("landscape.csv", "minimum.json", "landscape.gp"),
    "sigma": ("sigma.csv", "atlas.json", "sigma.gp"),
    "audit": ("audit.json",),
    "resolvent": ("resolvent.csv", "resolvent.gp"),
    "verify": ("verify.json",),
}


@pytest.fixture
def write_config(tmp_path):
    def write(data: dict) -> str:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return write


@pytest.fixture
def no_logging_file(tmp_path):
    return ["-l", str(tmp_path / "missing_logging.yaml")]


class TestMain:
    def test_main__basis_is_reproducible(self, tmp_path, write_config, no_logging_file) -> None:
        # Arrange
        config = write_config(SQUARE)

        # Act
        first = cli.main(["basis", "-c", config, "--out", str(tmp_path / "a"), *no_logging_file])
        second = cli.main(["basis", "-c", config, "--out", str(tmp_path / "b"), *no_logging_file])

        # Assert
        assert first == second == cli.EXIT_OK
        for name in ("basis.csv", "basis.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        summary = json.loads((tmp_path / "a" / "basis.json").read_text(encoding="utf-8"))
        assert summary["source"] == "analytic_rectangle"
        assert summary["size"] == 10
        header = (tmp_path / "a" / "basis.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "index,eigenvalue,multiplicity,level"

    @pytest.mark.parametrize("command", sorted(COMMAND_FILES))
    def test_main__command_outputs_are_byte_stable(self, tmp_path, write_config, no_logging_file, command) -> None:
        # Arrange
        config = write_config(SMALL_SQUARE)

        # Act
        codes = [
            cli.main([command, "-c", config, "--out", str(tmp_path / run), *no_logging_file]) for run in ("a", "b")
        ]

        # Assert
        assert codes == [cli.EXIT_OK, cli.EXIT_OK]
        assert sorted(path.name for path in (tmp_path / "a").iterdir()) == sorted(
            (*COMMAND_FILES[command], "resolved_config.json")
        )
        for name in COMMAND_FILES[command]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_main__resolved_config(self, tmp_path, write_config, no_logging_file) -> None:
        out = tmp_path / "out"
        assert cli.main(["basis", "-c", write_config(SQUARE), "--out", str(out), "--threads", "2", *no_logging_file]) == 0
        resolved = json.loads((out / "resolved_config.json").read_text(encoding="utf-8"))
        assert resolved["threads"] == 2
        assert resolved["output_dir"] == str(out)
        assert resolved["domain"]["kind"] == "rectangle"

    def test_main__solve_infinite_alpha(self, tmp_path, write_config, no_logging_file) -> None:
        # Arrange
        config = write_config({**DISK, "alpha": "inf"})

        # Act
        code = cli.main(["solve", "-c", config, "--out", str(tmp_path / "out"), *no_logging_file])

        # Assert
        assert code == cli.EXIT_OK
        report = json.loads((tmp_path / "out" / "solve.json").read_text(encoding="utf-8"))
        assert report["alpha"] == "inf"
        assert report["xi"] is None
        assert report["alpha_threshold"] == pytest.approx(0.115931515658, abs=1e-8)

    def test_main__missing_config(self, tmp_path, no_logging_file) -> None:
        code = cli.main(["basis", "-c", str(tmp_path / "missing.json"), *no_logging_file])
        assert code == cli.EXIT_CONFIG

    def test_main__invalid_override(self, write_config, no_logging_file) -> None:
        assert cli.main(["basis", "-c", write_config(SQUARE), "--threads", "0", *no_logging_file]) == cli.EXIT_CONFIG

    def test_main__domain_error(self, tmp_path, write_config, no_logging_file, mocker) -> None:
        mocker.patch.dict(cli.COMMAND_RUNNERS, {"basis": mocker.Mock(side_effect=DomainError("x0 outside"))})
        code = cli.main(["basis", "-c", write_config(SQUARE), "--out", str(tmp_path), *no_logging_file])
        assert code == cli.EXIT_CONFIG

    @pytest.mark.parametrize(
        "error", [NumericalError("solver diverged", stage="helmholtz"), BracketError("no sign change")]
    )
    def test_main__numerical_error(self, tmp_path, write_config, no_logging_file, mocker, error) -> None:
        # Arrange
        mocker.patch.dict(cli.COMMAND_RUNNERS, {"solve": mocker.Mock(side_effect=error)})

        # Act
        code = cli.main(["solve", "-c", write_config(SQUARE), "--out", str(tmp_path / "out"), *no_logging_file])

        # Assert
        assert code == cli.EXIT_NUMERICAL
        assert not (tmp_path / "out" / "resolved_config.json").exists()

    def test_main__verification_failure(self, tmp_path, write_config, no_logging_file, mocker) -> None:
        # Arrange
        failing = SuiteReport(name="identity")
        failing.close("identity vs FD", 1.0, 2.0, 1e-3)
        mocker.patch("point_interaction.cli.run_suites", return_value=[SuiteReport(name="specfun"), failing])

        # Act
        code = cli.main(["verify", "-c", write_config(SQUARE), "--out", str(tmp_path / "out"), *no_logging_file])

        # Assert
        assert code == cli.EXIT_VERIFICATION
        document = json.loads((tmp_path / "out" / "verify.json").read_text(encoding="utf-8"))
        assert document["passed"] is False
        assert [suite["passed"] for suite in document["suites"]] == [True, False]

    def test_main__unknown_command(self, no_logging_file) -> None:
        with pytest.raises(SystemExit):
            cli.main(["explode", *no_logging_file])


class TestSetupLogging:
    def test_setup_logging__missing_file(self, tmp_path, mocker) -> None:
        basic_config = mocker.patch("point_interaction.cli.logging.basicConfig")
        cli.setup_logging(str(tmp_path / "missing.yaml"))
        basic_config.assert_called_once_with(level=logging.WARNING)

    def test_setup_logging__creates_log_directory(self, tmp_path, mocker) -> None:
        # Arrange
        dict_config = mocker.patch("point_interaction.cli.logging.config.dictConfig")
        path = tmp_path / "logging.yaml"
        path.write_text(
            "version: 1\n"
            "handlers:\n"
            "  file:\n"
            "    class: logging.FileHandler\n"
            f"    filename: {tmp_path}/logs/point_interaction.log\n",
            encoding="utf-8",
        )

        # Act
        cli.setup_logging(str(path))

        # Assert
        assert (tmp_path / "logs").is_dir()
        dict_config.assert_called_once()
