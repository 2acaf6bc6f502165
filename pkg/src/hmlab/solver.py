"""Harmonic-map solver: Poisson extension and damped Picard iteration.

The map equation solved here is

    f_zz̄ + (d log rho / dw)(f) · f_z · f_z̄ = 0,

with prescribed boundary values.  Each Picard sweep freezes the coefficient
at the current iterate, solves the linear Dirichlet problem

    Δ f_new = -4 · dlog(f) · f_z · f_z̄,

and damps:  f ← (1-λ) f + λ f_new.  Boundary values for the discrete system
are produced by the radial transfer in :mod:`hmlab._gridops`, re-evaluated
against the current iterate each sweep, so the staircase rim carries
fourth-order-consistent data.

Also provided: the tension residual (sup norm of the defect, measured two
cells away from the rim to stay clear of one-sided stencils) and the Dirichlet
energy with density weight, integrated with exact cell-overlap weights.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np

from . import _backend
from ._gridops import gridops
from .boundary import BoundaryMap
from .errors import (BoundaryDataError, ConfigError, ConformabilityError,
                     InsufficientSupportError, InvalidFieldError,
                     RangeViolationError, UnsupportedDomainError)
from .field import ComplexField
from .grid import GridSpec
from .metric import MetricDensity
from .poisson import solve_dirichlet_arrays

__all__ = [
    "SolverConfig",
    "HarmonicProblem",
    "SolveResult",
    "poisson_extension",
    "transfinite_extension",
    "initial_iterate",
    "picard_step",
    "solve_tension",
    "tension_residual",
    "tension_residual_field",
    "energy",
]

_STAGNATION_WINDOW = 50
_STAGNATION_DROP = 1e-3
GRAD_NORM_CONVENTION = "2*(|f_z|^2 + |f_zbar|^2)"


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    """Outer-iteration controls for the damped Picard scheme."""

    tol_residual: float = 1e-8
    max_outer: int = 500
    damping: float = 0.7
    inner_tol: float = 1e-10
    inner_method: str = "direct"
    max_inner_sweeps: int = 200000

    def __post_init__(self):
        if not (np.isfinite(self.tol_residual) and self.tol_residual > 0):
            raise ConfigError(f"tol_residual must be > 0, got {self.tol_residual}")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigError(f"damping must lie in (0, 1], got {self.damping}")
        if self.max_outer < 1:
            raise ConfigError(f"max_outer must be >= 1, got {self.max_outer}")
        if not (np.isfinite(self.inner_tol) and self.inner_tol > 0):
            raise ConfigError(f"inner_tol must be > 0, got {self.inner_tol}")
        if self.inner_method not in ("direct", "sor"):
            raise ConfigError(
                f"inner_method must be 'direct' or 'sor', got {self.inner_method}")


@dataclasses.dataclass(frozen=True)
class HarmonicProblem:
    """Domain grid, target metric, boundary correspondence, solver knobs."""

    grid: GridSpec
    metric: MetricDensity
    boundary: BoundaryMap
    config: SolverConfig = dataclasses.field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.boundary.grid != self.grid:
            raise ConformabilityError(
                "boundary data was sampled on a different grid")


@dataclasses.dataclass(frozen=True)
class SolveResult:
    """Converged (or final) iterate plus convergence diagnostics."""

    field: ComplexField
    converged: bool
    iterations: int
    residual_history: tuple
    energy_history: tuple
    meta: dict = dataclasses.field(default_factory=dict)


# ---------------------------------------------------------------------------
# initial iterates
# ---------------------------------------------------------------------------

def poisson_extension(boundary: BoundaryMap,
                      grid: GridSpec | None = None) -> ComplexField:
    """Harmonic extension of disk boundary data by the Poisson integral.

    Interior nodes are filled by trapezoidal quadrature of the Poisson kernel
    over at least ``max(256, 4 * n_boundary)`` uniform circle samples;
    boundary nodes get the radial-transfer values consistent with that
    interior.
    """
    grid = boundary.grid if grid is None else grid
    if grid.domain_kind != "disk":
        raise UnsupportedDomainError(
            "the Poisson-integral extension is defined on the unit disk only")
    if boundary.grid != grid:
        raise ConformabilityError("boundary data belongs to a different grid")
    ops = gridops(grid)
    m = max(256, 4 * len(ops.bnd_idx))
    etas = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
    g = np.ascontiguousarray(boundary.sample(etas), dtype=np.complex128)
    zs = grid.nodes_z.ravel()[ops.int_idx]
    out = np.empty(zs.shape, dtype=np.complex128)
    _backend.poisson_disk(np.ascontiguousarray(zs.real),
                          np.ascontiguousarray(zs.imag),
                          np.ascontiguousarray(np.cos(etas)),
                          np.ascontiguousarray(np.sin(etas)),
                          g, 1.0 / m, out)
    flat = np.full(grid.nx * grid.ny, np.nan + 0j, dtype=np.complex128)
    flat[ops.int_idx] = out
    flat[ops.bnd_idx] = ops.boundary_values(boundary.values, flat)
    return ComplexField(grid, flat.reshape(grid.ny, grid.nx))


def transfinite_extension(boundary: BoundaryMap,
                          grid: GridSpec | None = None) -> ComplexField:
    """Blend rectangle boundary data into the interior (Coons patch)."""
    grid = boundary.grid if grid is None else grid
    if grid.domain_kind != "rectangle":
        raise UnsupportedDomainError(
            "transfinite blending is defined on rectangle grids only")
    if boundary.grid != grid:
        raise ConformabilityError("boundary data belongs to a different grid")
    ops = gridops(grid)
    vals = np.full(grid.nx * grid.ny, np.nan + 0j, dtype=np.complex128)
    vals[ops.bnd_idx] = boundary.values
    v2 = vals.reshape(grid.ny, grid.nx)
    bottom, top = v2[0, :], v2[-1, :]
    left, right = v2[:, 0], v2[:, -1]
    u = np.linspace(0.0, 1.0, grid.nx)[None, :]
    v = np.linspace(0.0, 1.0, grid.ny)[:, None]
    blend = ((1 - v) * bottom[None, :] + v * top[None, :]
             + (1 - u) * left[:, None] + u * right[:, None]
             - ((1 - u) * (1 - v) * v2[0, 0] + u * (1 - v) * v2[0, -1]
                + (1 - u) * v * v2[-1, 0] + u * v * v2[-1, -1]))
    flat = np.where(ops.defined_flat, blend.ravel(), np.nan + 0j)
    flat[ops.bnd_idx] = boundary.values
    return ComplexField(grid, flat.reshape(grid.ny, grid.nx))


def initial_iterate(boundary: BoundaryMap, grid: GridSpec) -> ComplexField:
    if grid.domain_kind == "disk":
        return poisson_extension(boundary, grid)
    return transfinite_extension(boundary, grid)


# ---------------------------------------------------------------------------
# pointwise pieces
# ---------------------------------------------------------------------------

def _first_derivatives(ops, flat: np.ndarray):
    """f_z and f_zbar on defined nodes of a zero-filled flat array."""
    buf = np.where(ops.defined_flat, flat, 0.0 + 0.0j)
    fx = ops.DX @ buf
    fy = ops.DY @ buf
    dst, src = ops._dx_copy
    fx[dst] = fx[src]
    dst, src = ops._dy_copy
    fy[dst] = fy[src]
    fz = 0.5 * (fx - 1j * fy)
    fzb = 0.5 * (fx + 1j * fy)
    return fz, fzb


def _check_interior_range(grid, ops, flat, metric, context: str) -> None:
    w = flat[ops.int_idx]
    ok = metric.valid_region(w)
    if not np.all(ok):
        bad = int(np.argmin(ok))
        node = int(ops.int_idx[bad])
        j, i = divmod(node, grid.nx)
        raise RangeViolationError(
            f"{context}: iterate value {w[bad]} at node (i={i}, j={j}), "
            f"z = {grid.nodes_z[j, i]}, left the admissible region of metric "
            f"{metric.name!r}", node=(i, j), value=w[bad])


def _rhs_interior(ops, metric, flat, fz, fzb) -> np.ndarray:
    w = flat[ops.int_idx]
    return -4.0 * metric.dlog(w) * fz[ops.int_idx] * fzb[ops.int_idx]


def _picard_arrays(grid, ops, metric, boundary, flat, config):
    """One lagged-coefficient sweep on flat arrays; returns the new iterate."""
    fz, fzb = _first_derivatives(ops, flat)
    rhs_int = _rhs_interior(ops, metric, flat, fz, fzb)
    rhs = np.zeros(ops.n, dtype=np.complex128)
    rhs[ops.int_idx] = rhs_int
    bc = np.zeros(ops.n, dtype=np.complex128)
    bc[ops.bnd_idx] = ops.boundary_values(boundary.values, flat)
    update, _info = solve_dirichlet_arrays(
        grid, rhs, bc, method=config.inner_method, tol=config.inner_tol,
        max_sweeps=config.max_inner_sweeps,
        warm_flat=flat if config.inner_method == "sor" else None)
    # With a vanishing right-hand side the problem is linear; skipping the
    # damping lets the flat-metric case land in one sweep.
    lam = 1.0 if float(np.max(np.abs(rhs_int), initial=0.0)) == 0.0 \
        else config.damping
    new = np.where(ops.defined_flat, (1.0 - lam) * flat + lam * update,
                   np.nan + 0.0j)
    return new, lam


def picard_step(f: ComplexField, problem: HarmonicProblem) -> ComplexField:
    """One damped lagged-coefficient sweep starting from ``f``."""
    if f.grid != problem.grid:
        raise ConformabilityError("iterate lives on a different grid")
    ops = gridops(problem.grid)
    flat = f.values.ravel().copy()
    _check_interior_range(problem.grid, ops, flat, problem.metric,
                          "picard step input")
    new, _lam = _picard_arrays(problem.grid, ops, problem.metric,
                               problem.boundary, flat, problem.config)
    return ComplexField(problem.grid, new.reshape(problem.grid.ny,
                                                  problem.grid.nx))


# ---------------------------------------------------------------------------
# residual and energy
# ---------------------------------------------------------------------------

def _residual_arrays(grid, ops, metric, flat, core_units, valid_policy,
                     context):
    core = ops.core_mask(core_units).ravel()
    core_idx = np.flatnonzero(core)
    if core_idx.size == 0:
        raise InsufficientSupportError(
            f"no interior node lies {core_units} cells from the rim; grid too "
            "coarse for a residual measurement")
    w = flat[core_idx]
    ok = metric.valid_region(w)
    if valid_policy == "error":
        if not np.all(ok):
            bad = int(np.argmin(ok))
            node = int(core_idx[bad])
            j, i = divmod(node, grid.nx)
            raise RangeViolationError(
                f"{context}: field value {w[bad]} at node (i={i}, j={j}) is "
                f"outside the admissible region of metric {metric.name!r}",
                node=(i, j), value=w[bad])
    elif valid_policy == "exclude":
        core_idx = core_idx[ok]
        if core_idx.size == 0:
            raise InsufficientSupportError(
                "every candidate node maps outside the admissible region")
        w = w[ok]
    else:
        raise ConfigError(
            f"valid_policy must be 'error' or 'exclude', got {valid_policy!r}")
    buf = np.where(ops.defined_flat, flat, 0.0 + 0.0j)
    lap = ops.LAP @ buf
    fz, fzb = _first_derivatives(ops, flat)
    defect = 0.25 * lap[core_idx] + metric.dlog(w) * fz[core_idx] * fzb[core_idx]
    return core_idx, np.abs(defect)


def tension_residual(f: ComplexField, metric: MetricDensity,
                     core_units: int = 2,
                     valid_policy: str = "error") -> float:
    """Sup of |(1/4)Δf + dlog(f)·f_z·f_z̄| over nodes >= core_units from the rim.

    ``valid_policy="error"`` (default) raises if any evaluated node maps
    outside the metric's admissible region; ``"exclude"`` takes the sup over
    the in-region nodes only.
    """
    ops = gridops(f.grid)
    _, defect = _residual_arrays(f.grid, ops, metric, f.values.ravel(),
                                 core_units, valid_policy, "tension residual")
    return float(np.max(defect))


def tension_residual_field(f: ComplexField, metric: MetricDensity,
                           core_units: int = 2,
                           valid_policy: str = "error"):
    """Residual magnitudes as a real field (NaN off the measured set)."""
    from .field import RealField
    ops = gridops(f.grid)
    idx, defect = _residual_arrays(f.grid, ops, metric, f.values.ravel(),
                                   core_units, valid_policy,
                                   "tension residual")
    vals = np.full(ops.n, np.nan)
    vals[idx] = defect
    return RealField(f.grid, vals.reshape(f.grid.ny, f.grid.nx),
                     domain="partial")


def energy(f: ComplexField, metric: MetricDensity,
           return_details: bool = False):
    """Weighted Dirichlet energy  ∫ 2(|f_z|² + |f_z̄|²) ρ²(f)  over the domain.

    Quadrature uses the exact overlap area of each node cell with the domain.
    Nodes whose value falls outside the metric's admissible region (where rho
    may blow up) are excluded and counted in the details.
    """
    ops = gridops(f.grid)
    flat = f.values.ravel()
    fz, fzb = _first_derivatives(ops, flat)
    wts = ops.cell_weights
    idx = np.flatnonzero(ops.defined_flat & (wts > 0.0))
    w = flat[idx]
    ok = metric.valid_region(w)
    idx, w = idx[ok], w[ok]
    grad2 = 2.0 * (np.abs(fz[idx]) ** 2 + np.abs(fzb[idx]) ** 2)
    total = float(np.sum(wts[idx] * grad2 * metric.eval(w) ** 2))
    if not return_details:
        return total
    return total, {
        "excluded_nodes": int(np.count_nonzero(~ok)),
        "grad_norm_convention": GRAD_NORM_CONVENTION,
        "quadrature": "exact-cell-overlap",
    }


# ---------------------------------------------------------------------------
# outer iteration
# ---------------------------------------------------------------------------

def solve_tension(problem: HarmonicProblem) -> SolveResult:
    """Damped Picard iteration on the tension equation.

    Starts from the harmonic extension of the boundary data, iterates until
    the tension residual drops below ``config.tol_residual``, and raises on
    iterates that leave the metric's admissible region or on residual
    stagnation (relative drop below 1e-3 across 50 consecutive sweeps).
    """
    grid, metric, boundary = problem.grid, problem.metric, problem.boundary
    config = problem.config
    ops = gridops(grid)

    ok = metric.closure_contains(boundary.values)
    if not np.all(ok):
        bad = int(np.argmin(ok))
        raise BoundaryDataError(
            f"boundary value {boundary.values[bad]} (node {bad}, theta = "
            f"{boundary.thetas[bad]:.6f}) lies outside the closed admissible "
            f"region of metric {metric.name!r}")

    f0 = initial_iterate(boundary, grid)
    flat = f0.values.ravel().copy()
    _check_interior_range(grid, ops, flat, metric, "initial iterate")

    def measure(arr):
        _, defect = _residual_arrays(grid, ops, metric, arr, 2, "error",
                                     "tension residual")
        fld = ComplexField(grid, arr.reshape(grid.ny, grid.nx))
        return float(np.max(defect)), energy(fld, metric)

    r0, e0 = measure(flat)
    residual_history = [r0]
    energy_history = [e0]
    converged = r0 <= config.tol_residual
    iterations = 0
    lam_last = config.damping
    monotone_warned = False

    while not converged and iterations < config.max_outer:
        new, lam_last = _picard_arrays(grid, ops, metric, boundary, flat,
                                       config)
        if not np.all(np.isfinite(new[ops.int_idx])):
            raise InvalidFieldError(
                f"iterate became non-finite at outer iteration {iterations + 1}")
        _check_interior_range(grid, ops, new, metric,
                              f"outer iteration {iterations + 1}")
        flat = new
        iterations += 1
        r, e = measure(flat)
        residual_history.append(r)
        energy_history.append(e)
        if r <= config.tol_residual:
            converged = True
            break
        if iterations > 5 and e > energy_history[-2] * (1.0 + 1e-7) \
                and not monotone_warned:
            warnings.warn(
                f"energy increased at outer iteration {iterations} "
                f"({energy_history[-2]:.6e} -> {e:.6e})", RuntimeWarning,
                stacklevel=2)
            monotone_warned = True
        if len(residual_history) > _STAGNATION_WINDOW:
            past = residual_history[-1 - _STAGNATION_WINDOW]
            if past > 0 and (past - r) / past < _STAGNATION_DROP:
                from .errors import StagnationError
                raise StagnationError(
                    f"tension residual stalled at {r:.3e} (relative drop "
                    f"{(past - r) / past:.2e} over the last "
                    f"{_STAGNATION_WINDOW} outer iterations)",
                    residual_history=tuple(residual_history))

    field = ComplexField(grid, flat.reshape(grid.ny, grid.nx))
    meta = {
        "backend": _backend.BACKEND,
        "inner_method": config.inner_method,
        "damping": config.damping,
        "damping_last_effective": lam_last,
        "boundary_transfer": ops.transfer[2],
        "grad_norm_convention": GRAD_NORM_CONVENTION,
        "metric": metric.describe(),
        "boundary": boundary.describe(),
    }
    return SolveResult(field=field, converged=converged, iterations=iterations,
                       residual_history=tuple(residual_history),
                       energy_history=tuple(energy_history), meta=meta)
