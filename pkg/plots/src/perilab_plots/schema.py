"""The sweep-result CSV schema this package consumes.

One header row, then one row per sweep point in a fixed column order; floats
carry 17 significant digits, booleans are "true"/"false", absent values are
empty.  A JSON-lines variant with the same fields is accepted wherever a CSV
is.  This mirrors the producing tool's documented external interface.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

COLUMNS = [
    "sweep_id", "scheme", "method", "h", "tol", "dx", "theta_deg", "beta",
    "ecc", "shift_rad", "abs_shift_rad", "predicted_advance_rad",
    "detectable", "status", "runtime_s",
]

_FLOAT_COLUMNS = {"h", "tol", "dx", "theta_deg", "beta", "ecc", "shift_rad",
                  "abs_shift_rad", "predicted_advance_rad", "runtime_s"}
_BOOL_COLUMNS = {"detectable"}


class SchemaError(ValueError):
    """Input file does not match the sweep CSV schema."""


@dataclass(frozen=True)
class Row:
    sweep_id: str
    scheme: str | None
    method: str | None
    h: float | None
    tol: float | None
    dx: float | None
    theta_deg: float | None
    beta: float | None
    ecc: float | None
    shift_rad: float | None
    abs_shift_rad: float | None
    predicted_advance_rad: float | None
    detectable: bool | None
    status: str
    runtime_s: float | None


def _convert(column: str, text: str):
    if text == "" or text is None:
        return None
    if column in _FLOAT_COLUMNS:
        try:
            value = float(text)
        except ValueError:
            raise SchemaError(f"column {column!r}: not a number: {text!r}") from None
        if not math.isfinite(value):
            raise SchemaError(f"column {column!r}: non-finite value {text!r}")
        return value
    if column in _BOOL_COLUMNS:
        if text not in ("true", "false"):
            raise SchemaError(f"column {column!r}: expected true/false, got {text!r}")
        return text == "true"
    return text


def _column_diff(found: list[str]) -> str:
    missing = [c for c in COLUMNS if c not in found]
    extra = [c for c in found if c not in COLUMNS]
    parts = []
    if missing:
        parts.append(f"missing: {missing}")
    if extra:
        parts.append(f"unexpected: {extra}")
    if not parts:
        parts.append(f"wrong order: {found}")
    return "; ".join(parts)


def load_rows(path: str) -> list[Row]:
    """Parse a sweep CSV (or .jsonl) file, validating the schema."""
    with open(path, encoding="utf-8") as f:
        text = f.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SchemaError(f"{path}: file is empty")

    if path.endswith(".jsonl") or lines[0].lstrip().startswith("{"):
        rows = []
        for ln in lines:
            obj = json.loads(ln)
            if set(obj) != set(COLUMNS):
                raise SchemaError(f"{path}: field mismatch — "
                                  f"{_column_diff(sorted(obj))}")
            rows.append(Row(**{c: obj[c] for c in COLUMNS}))
    else:
        header = lines[0].split(",")
        if header != COLUMNS:
            raise SchemaError(f"{path}: header mismatch — {_column_diff(header)}")
        rows = []
        for ln_no, ln in enumerate(lines[1:], start=2):
            cells = ln.split(",")
            if len(cells) != len(COLUMNS):
                raise SchemaError(f"{path}:{ln_no}: expected {len(COLUMNS)} cells, "
                                  f"got {len(cells)}")
            rows.append(Row(**{c: _convert(c, cell)
                               for c, cell in zip(COLUMNS, cells)}))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def load_trajectory(path: str):
    """Parse a trajectory CSV with header t,x,y,vx,vy."""
    import numpy as np

    with open(path, encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines or lines[0] != "t,x,y,vx,vy":
        raise SchemaError(f"{path}: expected a trajectory CSV with header "
                          f"'t,x,y,vx,vy'")
    if len(lines) < 2:
        raise SchemaError(f"{path}: no data rows")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if data.shape[1] != 5:
        raise SchemaError(f"{path}: expected 5 columns")
    return data
