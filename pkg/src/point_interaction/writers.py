"""Deterministic result files: CSV tables, JSON reports and gnuplot scripts."""

import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

FLOAT_FORMAT = "%.12e"
JSON_DIGITS = 12


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Comma-separated table with a header row and LF line endings."""
    lines = [",".join(header)]
    lines.extend(",".join(_cell(value) for value in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def to_jsonable(value: Any) -> Any:
    """Plain JSON values; floats rounded to 12 significant digits, NaN and inf as null."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{JSON_DIGITS}g}")
    if isinstance(value, complex):
        return {"real": to_jsonable(value.real), "imag": to_jsonable(value.imag)}
    if hasattr(value, "value"):
        return to_jsonable(value.value)
    return value


def write_json(path: Path, data: Any) -> None:
    text = json.dumps(to_jsonable(data), sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text + "\n")


def write_gnuplot(path: Path, title: str, commands: Sequence[str]) -> None:
    """gnuplot script that reads the CSV files next to it."""
    lines = [f"# {title}", "set datafile separator ','", "set key autotitle columnhead"]
    lines.extend(commands)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
