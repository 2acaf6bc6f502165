"""Grid functions and the discrete Wirtinger / Laplace operators.

Derivative conventions (h = grid spacing):

    f_z    = (f_x - i f_y) / 2        wirtinger_dz
    f_zbar = (f_x + i f_y) / 2        wirtinger_dzbar
    lap f  = 4 d/dz d/dzbar f         five-point stencil

First derivatives are centered where possible and one-sided second-order at
nodes where a centered stencil would touch the exterior; both are exact on
polynomials of degree <= 2. The Laplacian is defined at interior nodes only.
Exterior nodes hold a NaN sentinel and are rejected, never propagated.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from ._gridops import gridops
from .errors import ConformabilityError, InvalidFieldError
from .grid import GridSpec

Array = np.ndarray

# "full": finite on interior and boundary; "interior": finite on interior,
# NaN on boundary; "partial": NaN/inf mark individually undefined nodes
# (quotients near critical points, distortion blow-up sentinels).
_DOMAINS = ("full", "interior", "partial")


def _prepare(grid: GridSpec, values, dtype, domain: str) -> Array:
    if dtype == np.float64 and np.iscomplexobj(np.asarray(values)):
        raise InvalidFieldError(
            "real field cannot be built from complex values; take .real "
            "or np.abs explicitly")
    try:
        vals = np.array(values, dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise InvalidFieldError(f"cannot build field values: {exc}") from None
    if vals.shape != (grid.ny, grid.nx):
        raise InvalidFieldError(
            f"values shape {vals.shape} does not match grid "
            f"({grid.ny}, {grid.nx})")
    if domain not in _DOMAINS:
        raise InvalidFieldError(f"unknown field domain {domain!r}")
    if domain != "partial":
        required = grid.defined if domain == "full" else grid.interior
        bad = required & ~np.isfinite(vals.real)
        if np.iscomplexobj(vals):
            bad |= required & ~np.isfinite(vals.imag)
        if bad.any():
            j, i = np.argwhere(bad)[0]
            z = grid.nodes_z[j, i]
            raise InvalidFieldError(
                f"non-finite value at {int(np.count_nonzero(bad))} required "
                f"node(s), first at z = {z:.6g}")
    if domain == "interior":
        vals[~grid.interior] = np.nan
    else:
        vals[~grid.defined] = np.nan
    vals.setflags(write=False)
    return vals


@dataclass(frozen=True)
class ComplexField:
    """Complex-valued grid function, immutable after construction."""

    grid: GridSpec
    values: Array = dc_field(repr=False)
    domain: str = "full"

    def __post_init__(self):
        object.__setattr__(
            self, "values",
            _prepare(self.grid, self.values, np.complex128, self.domain))

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[[Array], Array],
                      domain: str = "full") -> "ComplexField":
        z = grid.nodes_z
        vals = np.full(z.shape, np.nan + 0j, dtype=np.complex128)
        where = grid.defined if domain == "full" else grid.interior
        vals[where] = np.asarray(fn(z[where]), dtype=np.complex128)
        return cls(grid, vals, domain)

    @classmethod
    def constant(cls, grid: GridSpec, value: complex) -> "ComplexField":
        return cls.from_function(grid, lambda z: np.full(z.shape, value))

    @property
    def defined_mask(self) -> Array:
        return _defined_mask(self)

    def defined_values(self) -> Array:
        return self.values[self.defined_mask]


@dataclass(frozen=True)
class RealField:
    """Real-valued grid function, immutable after construction."""

    grid: GridSpec
    values: Array = dc_field(repr=False)
    domain: str = "full"

    def __post_init__(self):
        object.__setattr__(
            self, "values",
            _prepare(self.grid, self.values, np.float64, self.domain))

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[[Array], Array],
                      domain: str = "full") -> "RealField":
        z = grid.nodes_z
        vals = np.full(z.shape, np.nan, dtype=np.float64)
        where = grid.defined if domain == "full" else grid.interior
        vals[where] = np.asarray(fn(z[where]), dtype=np.float64)
        return cls(grid, vals, domain)

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "RealField":
        return cls.from_function(grid, lambda z: np.full(z.shape, value))

    @property
    def defined_mask(self) -> Array:
        return _defined_mask(self)

    def defined_values(self) -> Array:
        return self.values[self.defined_mask]


Field = ComplexField | RealField


def _defined_mask(f) -> Array:
    if f.domain == "full":
        return f.grid.defined
    if f.domain == "interior":
        return f.grid.interior
    finite = np.isfinite(f.values.real)
    if np.iscomplexobj(f.values):
        finite &= np.isfinite(f.values.imag)
    return f.grid.defined & finite


def require_same_grid(*fields) -> GridSpec:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ConformabilityError("fields live on different grids")
    return grid


def _apply_first_derivative(f: Field):
    """Shared machinery: returns (fx, fy) as flat arrays on defined nodes.

    Stencils that touch an undefined node of a partial/interior field
    propagate NaN; callers restrict to the nodes they need.
    """
    ops = gridops(f.grid)
    v = np.where(f.grid.defined, f.values, 0).ravel()
    fx = ops.DX @ v
    fy = ops.DY @ v
    for out, (pairs, donors) in ((fx, ops._dx_copy), (fy, ops._dy_copy)):
        if len(pairs):
            out[pairs] = out[donors]
    return fx, fy


def _derivative_domain(f: Field) -> str:
    return "full" if f.domain == "full" else "partial"


def wirtinger_dz(f: Field) -> ComplexField:
    """(f_x - i f_y) / 2 on interior and boundary nodes."""
    fx, fy = _apply_first_derivative(f)
    out = 0.5 * (fx - 1j * fy)
    vals = np.full(f.grid.ny * f.grid.nx, np.nan + 0j, dtype=np.complex128)
    idx = f.grid.defined.ravel()
    vals[idx] = out[idx]
    return ComplexField(f.grid, vals.reshape(f.grid.ny, f.grid.nx),
                        _derivative_domain(f))


def wirtinger_dzbar(f: Field) -> ComplexField:
    """(f_x + i f_y) / 2 on interior and boundary nodes."""
    fx, fy = _apply_first_derivative(f)
    out = 0.5 * (fx + 1j * fy)
    vals = np.full(f.grid.ny * f.grid.nx, np.nan + 0j, dtype=np.complex128)
    idx = f.grid.defined.ravel()
    vals[idx] = out[idx]
    return ComplexField(f.grid, vals.reshape(f.grid.ny, f.grid.nx),
                        _derivative_domain(f))


def laplacian(f: Field):
    """Five-point Laplacian; defined at interior nodes, NaN elsewhere."""
    ops = gridops(f.grid)
    v = np.where(f.grid.defined, f.values, 0).ravel()
    out = ops.LAP @ v
    domain = "interior" if f.domain == "full" else "partial"
    if isinstance(f, RealField):
        vals = np.full(f.grid.ny * f.grid.nx, np.nan)
        vals[ops.int_idx] = out[ops.int_idx].real
        return RealField(f.grid, vals.reshape(f.grid.ny, f.grid.nx), domain)
    vals = np.full(f.grid.ny * f.grid.nx, np.nan + 0j, dtype=np.complex128)
    vals[ops.int_idx] = out[ops.int_idx]
    return ComplexField(f.grid, vals.reshape(f.grid.ny, f.grid.nx), domain)
