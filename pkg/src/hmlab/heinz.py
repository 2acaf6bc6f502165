"""Super-averaging certificates for nonnegative fields with Δu ≤ C·u.

Given a nonnegative grid field u, a center, a constant C bounding Δu/u, and
the distance d from the center to the domain rim, the certificate radius is

    alpha = min{ (1/4)·sqrt(e/C), d/2 }        (C = 0  →  d/2),

and the certificate records two readings of the averaging inequality over
D(center, alpha):

* the literal bound  u(center) ≥ disk_integral / (2 alpha²), and
* the normalized (mean-value) form  u(center) ≥ disk mean of u,

plus the qualitative conclusion actually used downstream: a positive disk
mean forces a positive center value.  The literal constant fails already for
u ≡ 1, so the normalized form is the load-bearing check; both are reported.

The main client applies this to u = -log|mu_f| of a solved map, certifying
|mu_f| < 1 at the point of worst conformal distortion.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ._gridops import gridops
from .analysis import DEFAULT_CORE_RADIUS, beltrami
from .errors import (DiskResolutionError, InputError,
                     InsufficientSupportError)
from .field import ComplexField, RealField, laplacian
from .geometry import disk_box_overlap
from .interp import bilinear
from .metric import MetricDensity

__all__ = [
    "HeinzCertificate",
    "alpha_radius",
    "estimate_C",
    "verify_super_average",
    "positivity_conclusion",
    "log_mu_field",
    "certify_solution",
]

_NEGATIVE_TOL = 1e-12
_MIN_ALPHA_CELLS = 3.0
_MEAN_POS_THRESHOLD = 1e-8
_CENTER_POS_THRESHOLD = 1e-12


@dataclasses.dataclass(frozen=True)
class HeinzCertificate:
    """Super-averaging check of one field at one center."""

    center: complex
    C: float
    d: float
    alpha: float
    u_center: float
    disk_integral: float
    disk_area: float
    disk_mean: float
    strict_bound: float
    strict_bound_pass: bool
    empirical_ratio: float
    mean_value_pass: bool

    def describe(self) -> dict:
        return {
            "center_re": float(self.center.real),
            "center_im": float(self.center.imag),
            "C": self.C,
            "d": self.d,
            "alpha": self.alpha,
            "u_center": self.u_center,
            "disk_integral": self.disk_integral,
            "disk_area": self.disk_area,
            "disk_mean": self.disk_mean,
            "strict_bound": self.strict_bound,
            "strict_bound_pass": self.strict_bound_pass,
            "empirical_ratio": self.empirical_ratio,
            "mean_value_pass": self.mean_value_pass,
        }


def alpha_radius(C: float, d: float) -> float:
    """min{(1/4)sqrt(e/C), d/2}, reading the first term as +inf when C = 0."""
    if d <= 0 or not np.isfinite(d):
        raise InputError(f"distance to the boundary must be > 0, got {d}")
    if C < 0 or not np.isfinite(C):
        raise InputError(f"inequality constant must be >= 0, got {C}")
    if C == 0.0:
        return d / 2.0
    return min(0.25 * np.sqrt(np.e / C), d / 2.0)


def _check_nonnegative(u: RealField, where: np.ndarray, what: str) -> None:
    """u must be >= 0 on the nodes actually entering the estimate."""
    vals = u.values[u.defined_mask & where]
    vals = vals[np.isfinite(vals)]
    if vals.size and float(np.min(vals)) < -_NEGATIVE_TOL:
        raise InputError(
            f"{what} must be nonnegative on the evaluation region; found "
            f"{float(np.min(vals)):.3e}")


def estimate_C(u: RealField, region=None, floor: float = 0.0,
               headroom: float = 1.1) -> float:
    """Bound max(0, Δu/u) over a region, with 10% headroom by default.

    ``region`` may be None (all interior nodes at least 2 cells from the
    rim), a radius (restrict further to |z| <= radius), or a boolean node
    mask.  Only nodes with u > floor enter the ratio.
    """
    grid = u.grid
    ops = gridops(grid)
    base = ops.core_mask(2.0)
    if region is None:
        sel = base
    elif isinstance(region, np.ndarray):
        if region.shape != base.shape or region.dtype != bool:
            raise InputError("region mask must be a boolean node mask")
        sel = base & region
    else:
        sel = base & (np.abs(grid.nodes_z) <= float(region))
    _check_nonnegative(u, sel, "estimate_C input")
    lap = laplacian(u).values
    uv = u.values
    ok = sel & np.isfinite(lap) & np.isfinite(uv) & (uv > floor)
    if not np.any(ok):
        raise InsufficientSupportError(
            "no node qualifies for the Δu/u estimate (region too small or "
            "field not above the floor)")
    ratio = np.max(np.maximum(lap[ok] / uv[ok], 0.0))
    return float(headroom * ratio)


def verify_super_average(u: RealField, center: complex, C: float,
                         d: float) -> HeinzCertificate:
    """Certificate for one center: integral, mean, and both inequality forms.

    The disk integral uses exact cell-overlap weights, so the measured area
    equals pi·alpha² to rounding and constants integrate exactly.
    """
    grid = u.grid
    center = complex(center)
    alpha = alpha_radius(C, d)
    if alpha < _MIN_ALPHA_CELLS * grid.h:
        raise DiskResolutionError(
            f"certificate radius alpha = {alpha:.4g} spans fewer than "
            f"{_MIN_ALPHA_CELLS:g} cells (h = {grid.h:.4g}); refine the grid "
            "or move the center")
    zs = grid.nodes_z.ravel()
    h = grid.h
    w = disk_box_overlap(center.real, center.imag, alpha,
                         zs.real - h / 2, zs.real + h / 2,
                         zs.imag - h / 2, zs.imag + h / 2)
    touched = w > 0.0
    _check_nonnegative(u, touched.reshape(grid.ny, grid.nx),
                       "verify_super_average input")
    uflat = u.values.ravel()
    usable = u.defined_mask.ravel() & np.isfinite(uflat)
    if not np.all(usable[touched]):
        n_bad = int(np.count_nonzero(touched & ~usable))
        raise InputError(
            f"D(center, alpha) touches {n_bad} node cell(s) where the field "
            "is undefined; move the center inward")
    integral = float(np.sum(w[touched] * uflat[touched]))
    area = float(np.sum(w[touched]))
    u_center = float(bilinear(u, np.asarray([center]))[0])
    mean = integral / area
    strict_bound = integral / (2.0 * alpha ** 2)
    exact_area = np.pi * alpha ** 2
    empirical_ratio = (u_center * exact_area / integral
                       if integral != 0.0 else float("inf"))
    return HeinzCertificate(
        center=center, C=float(C), d=float(d), alpha=float(alpha),
        u_center=u_center, disk_integral=integral, disk_area=area,
        disk_mean=mean, strict_bound=strict_bound,
        strict_bound_pass=bool(u_center >= strict_bound),
        empirical_ratio=empirical_ratio,
        mean_value_pass=bool(u_center >= mean * (1.0 - 1e-12)))


def positivity_conclusion(u: RealField, cert: HeinzCertificate) -> bool:
    """True unless a positive disk mean coexists with a vanishing center
    value — the numerical form of "u > 0 a.e. implies u(center) > 0"."""
    if cert.disk_mean <= _MEAN_POS_THRESHOLD:
        return True
    return cert.u_center > _CENTER_POS_THRESHOLD


# ---------------------------------------------------------------------------
# application to solved maps
# ---------------------------------------------------------------------------

def log_mu_field(f: ComplexField, eps_crit: float | None = None) -> RealField:
    """u = -log|mu_f| as a partial field (undefined at critical nodes)."""
    mu = beltrami(f, eps_crit)
    with np.errstate(all="ignore"):
        vals = -np.log(np.abs(mu.values))
    vals = np.where(np.isfinite(vals), vals, np.nan)
    return RealField(f.grid, vals, "partial")


def certify_solution(f: ComplexField, metric: MetricDensity | None = None,
                     center: complex | None = None,
                     C: float | None = None,
                     core_radius: float = DEFAULT_CORE_RADIUS,
                     floor: float = 0.0):
    """Applied chain on u = -log|mu_f|.

    Picks the max-|mu| node inside the measurement core as the center (unless
    given), estimates C there (unless given), and returns (certificate,
    positivity flag).  ``metric`` is accepted for signature symmetry with the
    other verification passes; u depends on f alone.
    """
    del metric
    grid = f.grid
    u = log_mu_field(f)
    if center is None:
        sel = grid.interior & (np.abs(grid.nodes_z) <= core_radius) \
            & np.isfinite(u.values)
        if not np.any(sel):
            raise InsufficientSupportError(
                "no usable node inside the measurement core")
        vals = u.values.copy()
        vals[~sel] = np.inf
        j, i = np.unravel_index(int(np.argmin(vals)), vals.shape)
        center = complex(grid.nodes_z[j, i])   # min u  <=>  max |mu|
    else:
        center = complex(center)
    if C is None:
        C = estimate_C(u, region=core_radius, floor=floor)
    d = 1.0 - abs(center) if grid.domain_kind == "disk" else float("nan")
    if not np.isfinite(d) or d <= 0:
        raise InputError("certificate centers must lie inside the unit disk")
    cert = verify_super_average(u, center, C, d)
    return cert, positivity_conclusion(u, cert)
