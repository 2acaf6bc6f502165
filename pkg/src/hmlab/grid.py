"""Uniform Cartesian grids with interior/boundary/exterior masks.

Conventions used across the package:

* arrays are indexed ``[j, i]`` with node coordinates
  ``x = x0 + i*h``, ``y = y0 + j*h``;
* mask codes: 0 exterior, 1 interior, 2 boundary;
* for the unit-disk kind a node is interior iff ``|z| < 1 - h/2``; boundary
  nodes are the non-interior nodes with a 4-neighbor in the interior (the
  discrete Dirichlet curve); everything else is exterior;
* exterior nodes never carry data — field values there are the NaN sentinel
  and any operation that would read them raises instead of propagating.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError

MASK_EXTERIOR = 0
MASK_INTERIOR = 1
MASK_BOUNDARY = 2

_MIN_NODES = 9


@dataclass(frozen=True)
class GridSpec:
    """Immutable description of a masked uniform grid."""

    domain_kind: str          # "disk" | "rectangle"
    nx: int
    ny: int
    origin: tuple[float, float]
    h: float
    mask: np.ndarray = field(repr=False)
    key: str = field(repr=False, default="")

    def __post_init__(self):
        self.mask.setflags(write=False)
        if not self.key:
            digest = hashlib.sha1()
            digest.update(repr((self.domain_kind, self.nx, self.ny,
                                self.origin, self.h)).encode())
            digest.update(self.mask.tobytes())
            object.__setattr__(self, "key", digest.hexdigest())

    def __eq__(self, other):
        return isinstance(other, GridSpec) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    # -- geometry -----------------------------------------------------------

    @property
    def xs(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    @property
    def nodes_z(self) -> np.ndarray:
        """Complex node coordinates, shape (ny, nx)."""
        return self.xs[None, :] + 1j * self.ys[:, None]

    # -- mask views ---------------------------------------------------------

    @property
    def interior(self) -> np.ndarray:
        return self.mask == MASK_INTERIOR

    @property
    def boundary(self) -> np.ndarray:
        return self.mask == MASK_BOUNDARY

    @property
    def defined(self) -> np.ndarray:
        """Interior or boundary: the nodes that carry field values."""
        return self.mask != MASK_EXTERIOR

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.interior))

    @property
    def n_boundary(self) -> int:
        return int(np.count_nonzero(self.boundary))

    def describe(self) -> dict:
        return {
            "domain": self.domain_kind,
            "nx": self.nx,
            "ny": self.ny,
            "origin": [self.origin[0], self.origin[1]],
            "h": self.h,
            "n_interior": self.n_interior,
            "n_boundary": self.n_boundary,
        }


def _neighbor_shift(a: np.ndarray, di: int, dj: int) -> np.ndarray:
    """Boolean array shifted by (di, dj) node steps, False-padded."""
    out = np.zeros_like(a)
    src_j = slice(max(0, -dj), a.shape[0] - max(0, dj))
    dst_j = slice(max(0, dj), a.shape[0] - max(0, -dj))
    src_i = slice(max(0, -di), a.shape[1] - max(0, di))
    dst_i = slice(max(0, di), a.shape[1] - max(0, -di))
    out[dst_j, dst_i] = a[src_j, src_i]
    return out


def _validate_mask(mask: np.ndarray, kind: str) -> None:
    interior = mask == MASK_INTERIOR
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nbr_ext = _neighbor_shift(mask == MASK_EXTERIOR, di, dj)
        # exterior padding beyond the array also counts as exterior
        pad = np.ones_like(interior)
        pad_inner = _neighbor_shift(np.ones_like(interior), di, dj)
        outside = ~pad_inner & pad
        if np.any(interior & (nbr_ext | outside)):
            raise GridError(f"{kind} mask violates the interior-neighbor "
                            "invariant (interior node next to exterior)")


def unit_disk_grid(n: int) -> GridSpec:
    """n x n grid on [-1, 1]^2 masked to the closed unit disk."""
    if n < _MIN_NODES:
        raise GridError(f"grid needs at least {_MIN_NODES} nodes per side, got {n}")
    h = 2.0 / (n - 1)
    origin = (-1.0, -1.0)
    xs = origin[0] + h * np.arange(n)
    ys = origin[1] + h * np.arange(n)
    r = np.hypot(xs[None, :], ys[:, None])
    interior = r < 1.0 - h / 2.0
    if not interior.any():
        raise GridError("disk grid has no interior nodes")
    near = np.zeros_like(interior)
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        near |= _neighbor_shift(interior, di, dj)
    mask = np.zeros((n, n), dtype=np.int8)
    mask[interior] = MASK_INTERIOR
    mask[~interior & near] = MASK_BOUNDARY
    _validate_mask(mask, "disk")
    return GridSpec("disk", n, n, origin, h, mask)


def rectangle_grid(nx: int, ny: int, origin: tuple[float, float],
                   h: float) -> GridSpec:
    """Axis-aligned rectangle; edge nodes are the boundary."""
    if nx < _MIN_NODES or ny < _MIN_NODES:
        raise GridError(f"grid needs at least {_MIN_NODES} nodes per side, "
                        f"got {nx} x {ny}")
    if h <= 0:
        raise GridError(f"grid spacing must be positive, got {h}")
    mask = np.full((ny, nx), MASK_BOUNDARY, dtype=np.int8)
    mask[1:-1, 1:-1] = MASK_INTERIOR
    _validate_mask(mask, "rectangle")
    return GridSpec("rectangle", nx, ny, (float(origin[0]), float(origin[1])), float(h), mask)
