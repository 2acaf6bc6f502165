"""Deterministic on-disk artifacts: JSON documents and node-value CSV tables.

Writers produce byte-identical output for identical inputs: JSON is dumped
with sorted keys and no timestamps, CSV values use 17 significant digits
(round-trip exact for doubles).  Loaders validate shape, coordinates, and
finiteness so downstream commands can trust what they read.
"""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .errors import InputError, InvalidFieldError
from .field import ComplexField, RealField
from .grid import GridSpec

_COORD_TOL = 1e-12


def jsonable(obj):
    """Recursively convert numpy scalars and non-finite floats for JSON.

    NaN and infinities become ``None`` so the emitted document is strict
    JSON; complex numbers become ``{"re": ..., "im": ...}``.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    return obj


def dump_json(path: str, payload: dict) -> None:
    """Write a JSON document deterministically (sorted keys, trailing newline)."""
    text = json.dumps(jsonable(payload), sort_keys=True, indent=2,
                      allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def load_json(path: str, what: str = "artifact") -> dict:
    """Read a JSON document, mapping missing/corrupt files to InputError."""
    if not os.path.exists(path):
        raise InputError(f"missing {what}: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {what} {path!r}: {exc}") from None


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_complex_csv(path: str, field: ComplexField) -> None:
    """Write defined nodes of a complex field as ``x,y,re,im`` rows.

    Rows run in row-major node order (y varying slowest), one row per
    defined node, so identical fields serialize to identical bytes.
    """
    grid = field.grid
    defined = grid.defined
    xs, ys = grid.xs, grid.ys
    vals = field.values
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,re,im\n")
        for i in range(grid.ny):
            row = defined[i]
            for j in np.flatnonzero(row):
                v = vals[i, j]
                fh.write(f"{_fmt(xs[j])},{_fmt(ys[i])},"
                         f"{_fmt(v.real)},{_fmt(v.imag)}\n")


def write_real_csv(path: str, field: RealField) -> None:
    """Write defined nodes of a real field as ``x,y,val`` rows.

    Values may be ``nan``/``inf`` for fields with partial support; those
    serialize literally and mark nodes where the quantity is undefined.
    """
    grid = field.grid
    defined = grid.defined
    xs, ys = grid.xs, grid.ys
    vals = field.values
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,val\n")
        for i in range(grid.ny):
            row = defined[i]
            for j in np.flatnonzero(row):
                fh.write(f"{_fmt(xs[j])},{_fmt(ys[i])},{_fmt(vals[i, j])}\n")


def _read_rows(path: str, header: list[str], what: str) -> np.ndarray:
    if not os.path.exists(path):
        raise InputError(f"missing {what}: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise InvalidFieldError(f"{what} {path!r} is empty") from None
        if [c.strip() for c in first] != header:
            raise InvalidFieldError(
                f"{what} {path!r} has header {first}, expected {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InvalidFieldError(
                    f"{what} {path!r}: line {lineno} has {len(row)} fields, "
                    f"expected {len(header)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise InvalidFieldError(
                    f"{what} {path!r}: line {lineno}: {exc}") from None
    if not rows:
        raise InvalidFieldError(f"{what} {path!r} has no data rows")
    return np.asarray(rows, dtype=np.float64)


def read_complex_csv(path: str, grid: GridSpec,
                     what: str = "field table") -> ComplexField:
    """Load an ``x,y,re,im`` table back onto ``grid``, validating everything.

    The table must contain exactly the defined nodes of the grid, in
    row-major order, with finite values; any NaN/inf entry (including one
    injected after the fact) raises InvalidFieldError.
    """
    data = _read_rows(path, ["x", "y", "re", "im"], what)
    defined = grid.defined
    n_def = int(defined.sum())
    if data.shape[0] != n_def:
        raise InvalidFieldError(
            f"{what} {path!r} has {data.shape[0]} rows, grid defines {n_def} nodes")
    ii, jj = np.nonzero(defined)
    want_x = grid.xs[jj]
    want_y = grid.ys[ii]
    scale = max(1.0, float(np.max(np.abs(want_x))), float(np.max(np.abs(want_y))))
    if (np.max(np.abs(data[:, 0] - want_x)) > _COORD_TOL * scale
            or np.max(np.abs(data[:, 1] - want_y)) > _COORD_TOL * scale):
        raise InvalidFieldError(
            f"{what} {path!r}: node coordinates do not match the grid")
    bad = ~(np.isfinite(data[:, 2]) & np.isfinite(data[:, 3]))
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise InvalidFieldError(
            f"{what} {path!r}: non-finite value at node "
            f"(x={data[k, 0]:.6g}, y={data[k, 1]:.6g})")
    values = np.full((grid.ny, grid.nx), np.nan + 0j, dtype=np.complex128)
    values[ii, jj] = data[:, 2] + 1j * data[:, 3]
    return ComplexField(grid, values, "full")
