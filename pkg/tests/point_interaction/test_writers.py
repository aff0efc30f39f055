import json

import numpy as np

from point_interaction.specfun import Branch
from point_interaction.writers import to_jsonable, write_csv, write_gnuplot, write_json


def test_write_csv_format(tmp_path):
    """Test the number format, boolean cells and line endings of CSV tables."""
    # Arrange
    path = tmp_path / "table.csv"

    # Act
    write_csv(path, ["x", "ok", "count", "status"], [(0.5, True, np.int64(3), "ok"), (np.float64(-2.0), False, 1, "fd")])

    # Assert
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.decode("utf-8").splitlines() == [
        "x,ok,count,status",
        "5.000000000000e-01,1,3,ok",
        "-2.000000000000e+00,0,1,fd",
    ]


def test_to_jsonable_values():
    """Test that numpy values, non-finite floats and enums become plain JSON."""
    data = {
        "nan": float("nan"),
        "inf": np.inf,
        "array": np.array([1.0, 2.0]),
        "branch": Branch.NEGATIVE_XI,
        "flag": np.bool_(True),
        "third": 1.0 / 3.0,
        2: "key",
    }
    assert to_jsonable(data) == {
        "nan": None,
        "inf": None,
        "array": [1.0, 2.0],
        "branch": "negative_xi",
        "flag": True,
        "third": 0.333333333333,
        "2": "key",
    }


def test_to_jsonable_complex():
    assert to_jsonable(1.0 - 2.0j) == {"real": 1.0, "imag": -2.0}


def test_write_json_sorted(tmp_path):
    """Test that JSON reports have sorted keys and no NaN tokens."""
    path = tmp_path / "report.json"
    write_json(path, {"b": float("nan"), "a": [1, 2]})
    text = path.read_text(encoding="utf-8")
    assert "NaN" not in text
    assert list(json.loads(text)) == ["a", "b"]
    assert json.loads(text)["b"] is None


def test_write_gnuplot(tmp_path):
    path = tmp_path / "plot.gp"
    write_gnuplot(path, "sigma", ["plot 'sigma.csv' using 1:2"])
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# sigma"
    assert lines[1] == "set datafile separator ','"
    assert lines[-1] == "plot 'sigma.csv' using 1:2"
