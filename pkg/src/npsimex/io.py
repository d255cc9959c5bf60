"""CSV ingestion for user-supplied data.

Main data file: header row with columns `y`, then either `x1..xk`
(replicates) or `xstar` (single proxy), and optional `z1..zp`. Validation
file: columns `x_true`, `x_star`. UTF-8, decimal point, no thousands
separators. Schema violations raise DataFormatError with the line number.
"""

from __future__ import annotations

import csv
import re

import numpy as np

from .data import ObservedData, ValidationPairs
from .exceptions import DataFormatError


def _parse_float(text: str, line_no: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataFormatError(
            f"line {line_no}: column {column!r} is not a number: {text!r}"
        ) from None


def _sequential_columns(header: list[str], prefix: str) -> list[str]:
    """Columns prefix1..prefixm, required to be gap-free starting at 1."""
    pattern = re.compile(rf"^{prefix}(\d+)$")
    found = {int(m.group(1)): col for col in header if (m := pattern.match(col))}
    if not found:
        return []
    expected = list(range(1, max(found) + 1))
    if sorted(found) != expected:
        raise DataFormatError(
            f"line 1: {prefix}* columns must be numbered 1..{max(found)} "
            f"without gaps"
        )
    return [found[i] for i in expected]


def _open_csv(path):
    try:
        return open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc


def read_observed_csv(path, require_y: bool = True) -> ObservedData:
    """Read the main data file into an ObservedData container."""
    with _open_csv(path) as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise DataFormatError("line 1: missing header row")
        x_cols = _sequential_columns(header, "x")
        if not x_cols:
            if "xstar" not in header:
                raise DataFormatError(
                    "line 1: need either x1..xk replicate columns or an "
                    "xstar column"
                )
            x_cols = ["xstar"]
        z_cols = _sequential_columns(header, "z")
        has_y = "y" in header
        if require_y and not has_y:
            raise DataFormatError("line 1: missing required column 'y'")
        y_rows, x_rows, z_rows = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if any(row.get(c) in (None, "") for c in x_cols + z_cols):
                raise DataFormatError(f"line {line_no}: incomplete row")
            if has_y:
                if row.get("y") in (None, ""):
                    raise DataFormatError(f"line {line_no}: incomplete row")
                y_rows.append(_parse_float(row["y"], line_no, "y"))
            x_rows.append([_parse_float(row[c], line_no, c) for c in x_cols])
            z_rows.append([_parse_float(row[c], line_no, c) for c in z_cols])
    if not x_rows:
        raise DataFormatError("line 2: file contains no data rows")
    n = len(x_rows)
    try:
        return ObservedData(
            np.array(y_rows) if has_y else None,
            np.array(x_rows),
            np.array(z_rows).reshape(n, len(z_cols)),
        )
    except ValueError as exc:
        raise DataFormatError(str(exc)) from exc


def read_validation_csv(path, flavor: str = "internal") -> ValidationPairs:
    """Read a validation file with columns x_true, x_star."""
    with _open_csv(path) as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise DataFormatError("line 1: missing header row")
        for col in ("x_true", "x_star"):
            if col not in header:
                raise DataFormatError(f"line 1: missing required column {col!r}")
        true_rows, star_rows = [], []
        for line_no, row in enumerate(reader, start=2):
            if row.get("x_true") in (None, "") or row.get("x_star") in (None, ""):
                raise DataFormatError(f"line {line_no}: incomplete row")
            true_rows.append(_parse_float(row["x_true"], line_no, "x_true"))
            star_rows.append(_parse_float(row["x_star"], line_no, "x_star"))
    try:
        return ValidationPairs(np.array(true_rows), np.array(star_rows), flavor)
    except ValueError as exc:
        raise DataFormatError(str(exc)) from exc
