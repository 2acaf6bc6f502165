"""Diagnostics on solved maps: dilatation, Jacobian, Hopf quadratic
differential, the curvature identity for log|mu|, winding numbers, critical
points, and extremum localization.

Quantities and conventions:

    mu         = f_zbar / f_z                 (complex dilatation)
    J          = |f_z|^2 - |f_zbar|^2          (Jacobian determinant)
    distortion = (1 + |mu|^2) / (1 - |mu|^2)   (squared-|mu| convention)
    Phi        = rho^2(f) * f_z * conj(f_zbar) (Hopf differential)

The identity check verifies  lap(log|mu|) = K(f) * rho^2(f) * J  on nodes
where |mu| is bounded away from zero and the stencil stays clear of critical
points; both sides vanish identically for flat targets and harmonic f with
constant mu.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy import ndimage

from ._gridops import gridops
from .errors import (DegenerateCircleError, InsufficientSupportError,
                     InvalidFieldError, RangeViolationError,
                     UnresolvedWindingError)
from .field import (ComplexField, RealField, laplacian, require_same_grid,
                    wirtinger_dz, wirtinger_dzbar)
from .interp import bilinear
from .metric import MetricDensity

__all__ = [
    "DEFAULT_MU_FLOOR",
    "DEFAULT_CORE_RADIUS",
    "default_eps_crit",
    "beltrami",
    "jacobian",
    "distortion",
    "hopf",
    "holomorphy_residual",
    "identity_residual",
    "winding_number",
    "CriticalPoint",
    "critical_points",
    "containment_violations",
    "ExtremumDiagnostic",
    "extremum_localization",
    "AnalysisReport",
    "assemble_report",
]

DEFAULT_MU_FLOOR = 0.01
DEFAULT_CORE_RADIUS = 0.8
_EPS_CRIT_REL = 1e-10
_CRITICAL_EXCLUSION_UNITS = 3.0
_NEWTON_PROXIMITY_UNITS = 3.0
_MIN_QUALIFYING_NODES = 10
_WINDING_MIN_SAMPLES = 64
_WINDING_MAX_SAMPLES = 4096
_WINDING_ROUND_TOL = 0.1


def default_eps_crit(fz: ComplexField) -> float:
    """Near-zero threshold for f_z: a small fraction of its sup."""
    sup = float(np.nanmax(np.abs(fz.values)))
    return _EPS_CRIT_REL * sup if np.isfinite(sup) else 0.0


def beltrami(f: ComplexField, eps_crit: float | None = None) -> ComplexField:
    """Complex dilatation f_zbar / f_z; undefined where |f_z| < eps_crit."""
    fz = wirtinger_dz(f)
    fzb = wirtinger_dzbar(f)
    if eps_crit is None:
        eps_crit = default_eps_crit(fz)
    with np.errstate(all="ignore"):
        vals = np.where(np.abs(fz.values) >= eps_crit,
                        fzb.values / fz.values, np.nan + 0j)
    return ComplexField(f.grid, vals, "partial")


def jacobian(f: ComplexField) -> RealField:
    """|f_z|^2 - |f_zbar|^2 (negative where orientation reverses)."""
    fz = wirtinger_dz(f)
    fzb = wirtinger_dzbar(f)
    vals = np.abs(fz.values) ** 2 - np.abs(fzb.values) ** 2
    return RealField(f.grid, vals, "full" if f.domain == "full" else "partial")


def distortion(f: ComplexField, eps_crit: float | None = None) -> RealField:
    """(1 + |mu|^2) / (1 - |mu|^2); +inf sentinel where |mu| >= 1."""
    mu = beltrami(f, eps_crit)
    m2 = np.abs(mu.values) ** 2
    with np.errstate(all="ignore"):
        vals = np.where(m2 < 1.0, (1.0 + m2) / (1.0 - m2), np.inf)
    vals = np.where(np.isnan(m2), np.nan, vals)
    return RealField(f.grid, vals, "partial")


def hopf(f: ComplexField, metric: MetricDensity) -> ComplexField:
    """Quadratic differential rho(f) * f_z * conj(f_zbar) at interior nodes.

    The density enters to the first power: that is the combination whose
    dzbar-derivative cancels exactly for solutions of the tension equation
    written with coefficient (log rho)_w, so it is the discretely
    holomorphic object for maps this package produces.

    Boundary values of f feed the derivative stencils but the product itself
    is only formed at interior nodes, where the solver guarantees f stays in
    the metric's admissible region; an interior value outside it raises.
    """
    grid = f.grid
    fz = wirtinger_dz(f)
    fzb = wirtinger_dzbar(f)
    interior = grid.interior
    w = f.values[interior]
    finite = np.isfinite(w.real) & np.isfinite(w.imag)
    ok = np.ones(w.shape, dtype=bool)
    ok[finite] = metric.valid_region(w[finite])
    if not np.all(ok):
        bad = int(np.argmin(ok))
        zbad = grid.nodes_z[interior][bad]
        raise RangeViolationError(
            f"field value {w[bad]} at z = {zbad:.6g} is outside the "
            f"admissible region of metric {metric.name!r}",
            node=None, value=w[bad])
    vals = np.full(f.values.shape, np.nan + 0j, dtype=np.complex128)
    with np.errstate(all="ignore"):
        vals[interior] = (metric.eval(w)
                          * fz.values[interior]
                          * np.conj(fzb.values[interior]))
    domain = "interior" if f.domain == "full" else "partial"
    return ComplexField(grid, vals, domain)


def holomorphy_residual(phi: ComplexField, core_units: float = 2.0,
                        core_radius: float | None = DEFAULT_CORE_RADIUS
                        ) -> float:
    """sup |d(phi)/dzbar| over the measurement core, normalized by sup |phi|
    over the same nodes (plus a tiny guard for phi = 0).

    The core keeps nodes at least ``core_units`` cells from the rim and,
    when ``core_radius`` is given, inside that disk.  The radius cut
    matters for densities that blow up toward the rim: at a fixed cell
    depth their derivatives are never resolved, so a rim-hugging sup
    would stagnate under refinement even though the field is fine.
    """
    ops = gridops(phi.grid)
    core = ops.core_mask(core_units)
    if core_radius is not None:
        core = core & (np.abs(phi.grid.nodes_z) <= core_radius)
    dphib = wirtinger_dzbar(phi).values[core]
    pvals = phi.values[core]
    finite = np.isfinite(dphib.real) & np.isfinite(dphib.imag) \
        & np.isfinite(pvals.real) & np.isfinite(pvals.imag)
    if not np.any(finite):
        raise InsufficientSupportError(
            "no node in the measurement core carries a finite Hopf value")
    num = float(np.max(np.abs(dphib[finite])))
    den = float(np.max(np.abs(pvals[finite])))
    return num / (den + 1e-300)


def identity_residual(f: ComplexField, metric: MetricDensity,
                      mu_floor: float = DEFAULT_MU_FLOOR,
                      eps_crit: float | None = None,
                      core_units: float = 2.0,
                      core_radius: float | None = DEFAULT_CORE_RADIUS):
    """Pointwise defect |lap(log|mu|) - K(f) rho^2(f) J| and its sup.

    Evaluated at interior nodes of the measurement core (>= core_units
    cells from the rim and, when ``core_radius`` is given, inside that
    disk) where |mu| >= mu_floor, the log|mu| stencil is clean, f lies in
    the metric's admissible region, and the node is at least 3h from any
    detected critical point.  Fewer than 10 qualifying nodes is an error.

    The radius cut exists because log|mu| of a solved map develops steep
    gradients in the last few cells before the rim; a sup taken there is
    dominated by unresolved boundary-layer truncation error and stops
    shrinking under refinement, while the core sup decays at O(h^2).
    """
    grid = f.grid
    ops = gridops(grid)
    mu = beltrami(f, eps_crit)
    absmu = np.abs(mu.values)
    with np.errstate(all="ignore"):
        logmu = RealField(grid, np.log(absmu), "partial")
    lap_logmu = laplacian(logmu).values

    w = np.where(grid.defined, f.values, 0.0 + 0.0j)
    valid = np.zeros(f.values.shape, dtype=bool)
    valid[grid.defined] = metric.valid_region(w[grid.defined])
    rhs = np.full(f.values.shape, np.nan)
    with np.errstate(all="ignore"):
        rhs[valid] = (np.real(metric.curvature(w[valid]))
                      * metric.eval(w[valid]) ** 2)
    rhs = rhs * jacobian(f).values

    qualifying = (ops.core_mask(core_units)
                  & np.isfinite(lap_logmu)
                  & np.isfinite(rhs)
                  & valid
                  & (absmu >= mu_floor))
    if core_radius is not None:
        qualifying &= np.abs(grid.nodes_z) <= core_radius
    for cp in critical_points(f, eps_crit=eps_crit):
        dist = np.abs(grid.nodes_z - cp.location)
        qualifying &= dist >= _CRITICAL_EXCLUSION_UNITS * grid.h
    count = int(np.count_nonzero(qualifying))
    if count < _MIN_QUALIFYING_NODES:
        raise InsufficientSupportError(
            f"only {count} node(s) qualify for the curvature identity "
            f"(need {_MIN_QUALIFYING_NODES}); |mu| may be too close to zero "
            "on this map")
    defect = np.full(f.values.shape, np.nan)
    defect[qualifying] = np.abs(lap_logmu[qualifying] - rhs[qualifying])
    field = RealField(grid, defect, "partial")
    return field, float(np.max(defect[qualifying]))


# ---------------------------------------------------------------------------
# winding numbers and critical points
# ---------------------------------------------------------------------------

def winding_number(f: ComplexField, center: complex, radius: float,
                   samples: int = _WINDING_MIN_SAMPLES) -> int:
    """Degree of f around the circle |z - center| = radius.

    Counts argument increments of f(z_j) - f(center) over bilinear samples;
    sampling is refined (doubled, up to 4096) until the total rounds cleanly
    to an integer.
    """
    if radius <= 0:
        raise DegenerateCircleError(f"circle radius must be > 0, got {radius}")
    samples = max(int(samples), _WINDING_MIN_SAMPLES)
    f_center = complex(bilinear(f, np.asarray([center]))[0])
    m = samples
    while True:
        t = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
        pts = center + radius * np.exp(1j * t)
        vals = bilinear(f, pts) - f_center
        mods = np.abs(vals)
        scale = float(np.max(mods))
        if scale <= 0 or float(np.min(mods)) < 1e-9 * scale:
            raise DegenerateCircleError(
                f"|f - f(center)| nearly vanishes on the sample circle "
                f"(min {float(np.min(mods)):.3e}); winding undefined")
        steps = np.angle(np.roll(vals, -1) / vals)
        total = float(np.sum(steps)) / (2.0 * np.pi)
        nearest = int(np.rint(total))
        clean = (np.max(np.abs(steps)) < 0.9 * np.pi
                 and abs(total - nearest) <= _WINDING_ROUND_TOL)
        if clean:
            return nearest
        if m >= _WINDING_MAX_SAMPLES:
            raise UnresolvedWindingError(
                f"winding estimate {total:.4f} does not round cleanly even "
                f"with {m} samples")
        m *= 2


@dataclasses.dataclass(frozen=True)
class CriticalPoint:
    """One cluster of near-critical nodes of f_z."""

    location: complex
    order: int | None
    node_count: int
    min_abs_fz: float

    def describe(self) -> dict:
        return {
            "location_re": float(self.location.real),
            "location_im": float(self.location.imag),
            "order": self.order,
            "node_count": self.node_count,
            "min_abs_fz": self.min_abs_fz,
        }


def critical_points(f: ComplexField,
                    eps_crit: float | None = None) -> list[CriticalPoint]:
    """Clusters where f_z (numerically) vanishes, with estimated orders.

    Nodes are flagged either by the near-zero threshold |f_z| < eps_crit or
    by Newton proximity: |f_z| / |grad f_z| below 3h, which catches zeros
    that fall between grid nodes.  Flagged nodes are clustered by
    8-connectivity; each cluster gets a 1/|f_z|^2-weighted centroid and an
    order from the winding of f_z on a 5h circle around it.
    """
    grid = f.grid
    fz = wirtinger_dz(f)
    absfz = np.abs(fz.values)
    sup = float(np.nanmax(absfz))
    if not np.isfinite(sup) or sup == 0.0:
        raise InsufficientSupportError(
            "f_z vanishes identically at grid precision; the critical set "
            "is not discrete")
    if eps_crit is None:
        eps_crit = _EPS_CRIT_REL * sup

    dzfz = wirtinger_dz(fz).values
    dzbfz = wirtinger_dzbar(fz).values
    with np.errstate(all="ignore"):
        grad = np.abs(dzfz) + np.abs(dzbfz)
        # distance-to-zero estimate: infinite where f_z is locally constant
        newton = absfz / grad
    flagged = grid.defined & (
        (absfz < eps_crit)
        | (np.isfinite(newton) & (newton < _NEWTON_PROXIMITY_UNITS * grid.h)))

    n_flagged = int(np.count_nonzero(flagged))
    if n_flagged == 0:
        return []
    if n_flagged > 0.1 * int(np.count_nonzero(grid.defined)):
        raise InsufficientSupportError(
            f"{n_flagged} nodes look critical; the critical set is not "
            "discrete at this resolution")

    labels, n_clusters = ndimage.label(flagged, structure=np.ones((3, 3)))
    out = []
    for lab in range(1, n_clusters + 1):
        sel = labels == lab
        zs = grid.nodes_z[sel]
        azs = absfz[sel]
        wts = 1.0 / (azs ** 2 + (1e-12 * sup) ** 2)
        centroid = complex(np.sum(wts * zs) / np.sum(wts))
        try:
            order = winding_number(fz, centroid, 5.0 * grid.h)
        except (DegenerateCircleError, UnresolvedWindingError,
                InvalidFieldError):
            order = None
        out.append(CriticalPoint(location=centroid, order=order,
                                 node_count=int(np.count_nonzero(sel)),
                                 min_abs_fz=float(np.min(azs))))
    out.sort(key=lambda c: (c.location.real, c.location.imag))
    return out


def containment_violations(f: ComplexField,
                           eps_crit: float | None = None) -> list[complex]:
    """Nodes where f_zbar vanishes but f_z does not.

    For harmonic maps the zero set of f_zbar sits inside that of f_z; nodes
    breaking this are returned for diagnostic reporting.
    """
    grid = f.grid
    fz = wirtinger_dz(f)
    fzb = wirtinger_dzbar(f)
    if eps_crit is None:
        eps_crit = default_eps_crit(fz)
    bad = grid.defined & (np.abs(fzb.values) < eps_crit) \
        & (np.abs(fz.values) >= eps_crit)
    return [complex(z) for z in grid.nodes_z[bad]]


# ---------------------------------------------------------------------------
# extremum localization
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class ExtremumDiagnostic:
    """Where a real field attains its extrema on a closed core subdisk."""

    field_name: str
    core_radius: float
    degenerate: bool
    max_location: complex | None = None
    max_value: float | None = None
    max_classification: str | None = None
    min_location: complex | None = None
    min_value: float | None = None
    min_classification: str | None = None

    def describe(self) -> dict:
        out = {"field": self.field_name, "core_radius": self.core_radius,
               "degenerate": self.degenerate}
        if not self.degenerate:
            out.update({
                "max_location_re": float(self.max_location.real),
                "max_location_im": float(self.max_location.imag),
                "max_value": self.max_value,
                "max_classification": self.max_classification,
                "min_location_re": float(self.min_location.real),
                "min_location_im": float(self.min_location.imag),
                "min_value": self.min_value,
                "min_classification": self.min_classification,
            })
        return out


def extremum_localization(field: RealField, core_radius: float,
                          name: str = "field") -> ExtremumDiagnostic:
    """Argmax/argmin of a field over {|z| <= core_radius}, classified as
    interior (more than 2h inside the subdisk rim) or boundary."""
    grid = field.grid
    sel = field.defined_mask & (np.abs(grid.nodes_z) <= core_radius) \
        & np.isfinite(field.values)
    if not np.any(sel):
        raise InsufficientSupportError(
            f"no defined node inside |z| <= {core_radius}")
    zs = grid.nodes_z[sel]
    vals = field.values[sel]
    vmax, vmin = float(np.max(vals)), float(np.min(vals))
    if vmax - vmin < 1e-14:
        return ExtremumDiagnostic(field_name=name, core_radius=core_radius,
                                  degenerate=True)

    def classify(z):
        return "interior" if core_radius - abs(z) > 2.0 * grid.h else "boundary"

    zmax = complex(zs[int(np.argmax(vals))])
    zmin = complex(zs[int(np.argmin(vals))])
    return ExtremumDiagnostic(
        field_name=name, core_radius=core_radius, degenerate=False,
        max_location=zmax, max_value=vmax, max_classification=classify(zmax),
        min_location=zmin, min_value=vmin, min_classification=classify(zmin))


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class AnalysisReport:
    """Derived fields plus scalar diagnostics for one solved map."""

    mu: ComplexField
    jacobian: RealField
    distortion: RealField
    hopf: ComplexField
    hopf_residual: float
    identity_residual: float
    identity_note: str
    min_jacobian_core: float
    k_core: float
    distortion_core: float
    critical_points: list
    containment_violations: list
    extremum_diagnostics: list
    conventions: dict

    def summary(self) -> dict:
        return {
            "hopf_residual": self.hopf_residual,
            "identity_residual": self.identity_residual,
            "identity_note": self.identity_note,
            "min_jacobian_core": self.min_jacobian_core,
            "k_core": self.k_core,
            "distortion_core": self.distortion_core,
            "critical_points": [c.describe() for c in self.critical_points],
            "containment_violations": [
                {"re": z.real, "im": z.imag}
                for z in self.containment_violations],
            "extrema": [e.describe() for e in self.extremum_diagnostics],
            "conventions": dict(self.conventions),
        }


def assemble_report(f: ComplexField, metric: MetricDensity,
                    core_radius: float = DEFAULT_CORE_RADIUS,
                    mu_floor: float = DEFAULT_MU_FLOOR,
                    eps_crit: float | None = None,
                    subdisk_radii: tuple = (0.5, 0.7, 0.8)) -> AnalysisReport:
    """Run every diagnostic on one map and collect the results."""
    grid = f.grid
    eps_used = default_eps_crit(wirtinger_dz(f)) if eps_crit is None else eps_crit
    mu = beltrami(f, eps_crit)
    jac = jacobian(f)
    dist = distortion(f, eps_crit)
    phi = hopf(f, metric)
    hres = holomorphy_residual(phi)
    try:
        _, ires = identity_residual(f, metric, mu_floor=mu_floor,
                                    eps_crit=eps_crit)
        inote = "ok"
    except InsufficientSupportError as exc:
        ires = float("nan")
        inote = f"insufficient-support: {exc}"

    core = grid.defined & (np.abs(grid.nodes_z) <= core_radius)
    jc = jac.values[core & grid.interior]
    min_jac = float(np.min(jc[np.isfinite(jc)]))
    absmu = np.abs(mu.values)[core]
    absmu = absmu[np.isfinite(absmu)]
    k_core = float(np.max(absmu)) if absmu.size else float("nan")
    if np.isfinite(k_core) and k_core < 1.0:
        dist_core = (1.0 + k_core ** 2) / (1.0 - k_core ** 2)
    else:
        dist_core = float("inf")

    absmu_field = RealField(grid, np.abs(mu.values), "partial")
    extrema = [extremum_localization(absmu_field, r, name="abs_mu")
               for r in subdisk_radii]
    cps = critical_points(f, eps_crit=eps_crit)
    viols = containment_violations(f, eps_crit=eps_crit)

    conventions = {
        "mu": "f_zbar / f_z",
        "jacobian": "|f_z|^2 - |f_zbar|^2",
        "distortion": "(1 + |mu|^2) / (1 - |mu|^2)  [squared-|mu| form]",
        "hopf": "rho(f) * f_z * conj(f_zbar)",
        "grad_norm": "2*(|f_z|^2 + |f_zbar|^2)",
        "eps_crit": float(eps_used),
        "core_radius": core_radius,
        "mu_floor": mu_floor,
        "identity_core_units": 2,
        "critical_exclusion_units": _CRITICAL_EXCLUSION_UNITS,
    }
    return AnalysisReport(
        mu=mu, jacobian=jac, distortion=dist, hopf=phi,
        hopf_residual=hres, identity_residual=ires, identity_note=inote,
        min_jacobian_core=min_jac, k_core=k_core, distortion_core=dist_core,
        critical_points=cps, containment_violations=viols,
        extremum_diagnostics=extrema, conventions=conventions)
