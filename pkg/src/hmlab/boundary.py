"""Boundary correspondences: prescribed target values along the domain rim.

A :class:`BoundaryMap` assigns a complex target point to every boundary node
of a grid, parameterized by the node's angular coordinate (polar angle on the
disk, scaled perimeter arc length on rectangles).  It also carries a smooth
2-pi-periodic sampler so quadrature and boundary transfer can evaluate the
datum between nodes.

Two invariants are enforced at construction:

* the sampled values at the nodes are pairwise distinct when the declared
  degree is 1 (a degree-1 correspondence must be injective), and
* the discrete winding of the node sample sequence about its centroid equals
  the declared degree.
"""

from __future__ import annotations

import dataclasses
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .errors import BoundaryDataError, ConfigError, UnsupportedDomainError
from .grid import GridSpec
from ._gridops import gridops

__all__ = [
    "BoundaryMap",
    "boundary_node_parameters",
    "boundary_from_function",
    "twist_map",
    "boundary_from_samples",
    "boundary_from_config",
    "sequence_winding",
]

_TWO_PI = 2.0 * np.pi


def boundary_node_parameters(grid: GridSpec) -> np.ndarray:
    """Angular parameter in [0, 2pi) of each boundary node, bnd_idx order."""
    ops = gridops(grid)
    zs = grid.nodes_z.ravel()[ops.bnd_idx]
    if grid.domain_kind == "disk":
        return np.mod(np.angle(zs), _TWO_PI)
    x0, y0 = grid.origin
    x1 = x0 + (grid.nx - 1) * grid.h
    y1 = y0 + (grid.ny - 1) * grid.h
    width, height = x1 - x0, y1 - y0
    perim = 2.0 * (width + height)
    x, y = zs.real, zs.imag
    s = np.empty(zs.shape, dtype=np.float64)
    tol = 1e-12 * max(width, height)
    on_bottom = np.abs(y - y0) <= tol
    on_right = np.abs(x - x1) <= tol
    on_top = np.abs(y - y1) <= tol
    s[:] = np.nan
    s[on_top] = width + height + (x1 - x[on_top])
    s[on_right] = width + (y[on_right] - y0)
    left_only = np.isnan(s)
    s[left_only] = 2.0 * width + height + (y1 - y[left_only])
    s[on_bottom] = x[on_bottom] - x0
    return np.mod(_TWO_PI * s / perim, _TWO_PI)


def sequence_winding(values: np.ndarray, center: complex | None = None) -> int:
    """Winding number of a closed sample sequence about ``center``.

    ``center`` defaults to the sequence centroid.  A sequence that collapses
    to (numerically) a single point winds zero times.  Raises when consecutive
    samples subtend angles too close to pi for the count to be trustworthy.
    """
    v = np.asarray(values, dtype=np.complex128).ravel()
    if v.size < 3:
        raise BoundaryDataError("winding needs at least 3 samples")
    c = np.mean(v) if center is None else complex(center)
    rel = v - c
    scale = float(np.max(np.abs(rel)))
    if scale < 1e-13 * max(1.0, abs(c)):
        return 0
    if np.min(np.abs(rel)) < 1e-9 * scale:
        raise BoundaryDataError(
            "sample sequence passes through its centroid; winding undefined")
    steps = np.angle(np.roll(rel, -1) / rel)
    if np.max(np.abs(steps)) > 0.9 * np.pi:
        raise BoundaryDataError(
            "consecutive boundary samples subtend nearly a half turn; "
            "winding count unreliable at this sampling density")
    total = float(np.sum(steps)) / _TWO_PI
    nearest = int(np.rint(total))
    if abs(total - nearest) > 0.1:
        raise BoundaryDataError(
            f"discrete winding {total:.4f} is not close to an integer")
    return nearest


@dataclasses.dataclass(frozen=True)
class BoundaryMap:
    """Complex target values at the boundary nodes of one grid."""

    grid: GridSpec
    thetas: np.ndarray
    values: np.ndarray
    declared_degree: int
    sample: Callable[[np.ndarray], np.ndarray]
    name: str = "boundary"
    meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        ops = gridops(self.grid)
        thetas = np.asarray(self.thetas, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.complex128)
        if thetas.shape != (len(ops.bnd_idx),) or values.shape != thetas.shape:
            raise BoundaryDataError(
                f"boundary data must carry one sample per boundary node "
                f"({len(ops.bnd_idx)}), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise BoundaryDataError("boundary values must be finite")
        thetas.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "values", values)
        self._validate()

    def _validate(self) -> None:
        values = self.values
        if self.declared_degree == 1 and len(values) >= 2:
            pts = np.column_stack([values.real, values.imag])
            dist, idx = cKDTree(pts).query(pts, k=2)
            gap = float(np.min(dist[:, 1]))
            scale = float(np.max(np.abs(values))) or 1.0
            if gap <= 1e-14 * scale:
                dup = int(np.argmin(dist[:, 1]))
                raise BoundaryDataError(
                    "degree-1 boundary data must be injective on its sample "
                    f"set; nodes {dup} and {int(idx[dup, 1])} coincide at "
                    f"{values[dup]}")
        order = np.argsort(self.thetas, kind="stable")
        w = sequence_winding(values[order])
        if w != self.declared_degree:
            raise BoundaryDataError(
                f"boundary samples wind {w} time(s) about their centroid "
                f"but the declared degree is {self.declared_degree}")

    def describe(self) -> dict:
        out = {"name": self.name, "degree": self.declared_degree,
               "n_samples": int(len(self.values))}
        out.update(self.meta)
        return out


def boundary_from_function(grid: GridSpec,
                           fn: Callable[[np.ndarray], np.ndarray],
                           degree: int = 1,
                           name: str = "function",
                           meta: dict | None = None) -> BoundaryMap:
    """Boundary map from a 2-pi-periodic callable theta -> complex."""
    thetas = boundary_node_parameters(grid)
    values = np.asarray(fn(thetas), dtype=np.complex128)

    def sampler(angles):
        return np.asarray(fn(np.mod(angles, _TWO_PI)), dtype=np.complex128)

    return BoundaryMap(grid=grid, thetas=thetas, values=values,
                       declared_degree=int(degree), sample=sampler,
                       name=name, meta=dict(meta or {}))


def twist_map(grid: GridSpec, amplitude: float) -> BoundaryMap:
    """Unit-circle correspondence theta -> exp(i(theta + a sin theta)).

    Monotone (hence injective, degree 1) exactly when |a| < 1.
    """
    if grid.domain_kind != "disk":
        raise UnsupportedDomainError("twist boundary data requires a disk grid")
    a = float(amplitude)
    if not np.isfinite(a) or abs(a) >= 1.0:
        raise ConfigError(
            f"twist amplitude must satisfy |a| < 1 for injectivity, got {a}")
    return boundary_from_function(
        grid, lambda t: np.exp(1j * (t + a * np.sin(t))), degree=1,
        name="twist", meta={"amplitude": a})


def boundary_from_samples(grid: GridSpec,
                          theta: np.ndarray,
                          values: np.ndarray,
                          degree: int = 1,
                          name: str = "samples") -> BoundaryMap:
    """Boundary map interpolated through user samples by a periodic spline."""
    theta = np.mod(np.asarray(theta, dtype=np.float64).ravel(), _TWO_PI)
    values = np.asarray(values, dtype=np.complex128).ravel()
    if theta.shape != values.shape:
        raise BoundaryDataError("theta and values must have equal lengths")
    if theta.size < 8:
        raise BoundaryDataError(
            f"need at least 8 boundary samples, got {theta.size}")
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(values))):
        raise BoundaryDataError("boundary samples must be finite")
    order = np.argsort(theta, kind="stable")
    theta, values = theta[order], values[order]
    if np.min(np.diff(theta)) <= 0.0:
        raise BoundaryDataError("boundary sample angles must be distinct")
    # Close the period for the spline.
    tper = np.concatenate([theta, [theta[0] + _TWO_PI]])
    vper = np.concatenate([values, [values[0]]])
    spl_re = CubicSpline(tper, vper.real, bc_type="periodic")
    spl_im = CubicSpline(tper, vper.imag, bc_type="periodic")

    def sampler(angles):
        t = np.mod(np.asarray(angles, dtype=np.float64) - theta[0], _TWO_PI) \
            + theta[0]
        return spl_re(t) + 1j * spl_im(t)

    thetas = boundary_node_parameters(grid)
    return BoundaryMap(grid=grid, thetas=thetas, values=sampler(thetas),
                       declared_degree=int(degree), sample=sampler,
                       name=name, meta={"n_input_samples": int(theta.size)})


def boundary_from_config(grid: GridSpec, cfg: dict) -> BoundaryMap:
    """Build a boundary map from a config mapping (see the JSON schema)."""
    if not isinstance(cfg, dict):
        raise ConfigError("boundary config must be a mapping")
    kind = cfg.get("type")
    if kind == "twist":
        if "amplitude" not in cfg:
            raise ConfigError("twist boundary config requires 'amplitude'")
        return twist_map(grid, float(cfg["amplitude"]))
    if kind == "samples":
        for key in ("theta", "values_re", "values_im"):
            if key not in cfg:
                raise ConfigError(f"samples boundary config requires {key!r}")
        values = np.asarray(cfg["values_re"], dtype=np.float64) \
            + 1j * np.asarray(cfg["values_im"], dtype=np.float64)
        return boundary_from_samples(
            grid, np.asarray(cfg["theta"], dtype=np.float64), values,
            degree=int(cfg.get("degree", 1)))
    raise ConfigError(
        f"boundary config has unknown type {kind!r}; expected twist or samples")
