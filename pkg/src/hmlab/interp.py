"""Bilinear interpolation of grid fields at arbitrary points."""

from __future__ import annotations

import numpy as np

from .errors import InvalidFieldError
from .field import ComplexField, RealField


def bilinear(f: ComplexField | RealField, pts: np.ndarray) -> np.ndarray:
    """Interpolate at complex points; every cell corner must be defined."""
    grid = f.grid
    pts = np.asarray(pts, dtype=complex).ravel()
    ux = (pts.real - grid.origin[0]) / grid.h
    uy = (pts.imag - grid.origin[1]) / grid.h
    i0 = np.floor(ux).astype(np.int64)
    j0 = np.floor(uy).astype(np.int64)
    # points sitting exactly on the last node line still use the last cell
    i0 = np.clip(i0, 0, grid.nx - 2)
    j0 = np.clip(j0, 0, grid.ny - 2)
    if (ux < 0).any() or (uy < 0).any() or (ux > grid.nx - 1).any() \
            or (uy > grid.ny - 1).any():
        raise InvalidFieldError("interpolation point outside the grid")
    tx = ux - i0
    ty = uy - j0
    flat = j0 * grid.nx + i0
    corners = np.stack([flat, flat + 1, flat + grid.nx, flat + grid.nx + 1])
    defined = f.defined_mask.ravel()
    if not defined[corners].all():
        bad = pts[~defined[corners].all(axis=0)][0]
        raise InvalidFieldError(
            f"interpolation cell touches undefined nodes near z = {bad:.6g}")
    v = f.values.ravel()
    v00 = v[corners[0]]
    v10 = v[corners[1]]
    v01 = v[corners[2]]
    v11 = v[corners[3]]
    return ((1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10
            + (1 - tx) * ty * v01 + tx * ty * v11)
