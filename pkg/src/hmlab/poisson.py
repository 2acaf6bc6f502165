"""Masked-lattice Dirichlet solves for the five-point Laplacian.

Two inner solvers with the same residual contract (relative algebraic
residual <= tol, default 1e-10):

* ``direct`` — sparse LU of the interior system, factored once per grid and
  cached; right-hand sides change per call.
* ``sor``    — red-black successive over-relaxation via the kernel backend,
  relaxation factor from a power-iteration estimate of the Jacobi radius.
"""

from __future__ import annotations

import numpy as np

from . import _backend
from ._gridops import GridOps, gridops
from .errors import InvalidFieldError, LinearSolveError
from .field import ComplexField, RealField, require_same_grid
from .grid import GridSpec

DEFAULT_TOL = 1e-10
DEFAULT_MAX_SWEEPS = 200_000
_RESID_EVERY = 32


def _relative_residual(ops: GridOps, x: np.ndarray, b: np.ndarray) -> float:
    r = ops.A @ x - b
    scale = max(float(np.abs(b).max(initial=0.0)), 1e-300)
    return float(np.abs(r).max(initial=0.0)) / scale


def solve_dirichlet_arrays(grid: GridSpec, rhs_flat: np.ndarray,
                           bc_flat: np.ndarray, *, method: str = "direct",
                           tol: float = DEFAULT_TOL,
                           max_sweeps: int = DEFAULT_MAX_SWEEPS,
                           warm_flat: np.ndarray | None = None):
    """Solve lap u = rhs (interior) with u = bc (boundary), flat complex in/out.

    Returns (u_flat, info). Exterior entries of the result are NaN.
    """
    ops = gridops(grid)
    rhs_int = rhs_flat[ops.int_idx]
    bc0 = np.zeros(ops.n, dtype=complex)
    bc0[ops.bnd_idx] = bc_flat[ops.bnd_idx]
    if not np.isfinite(bc0[ops.bnd_idx]).all():
        raise InvalidFieldError("non-finite boundary data in Dirichlet solve")
    if not np.isfinite(rhs_int).all():
        raise InvalidFieldError("non-finite right-hand side in Dirichlet solve")
    b = rhs_int - ops.B @ bc0

    if method == "direct":
        lu = ops.lu
        x = lu.solve(b.real) + 1j * lu.solve(b.imag)
        resid = _relative_residual(ops, x, b)
        if resid > tol:
            raise LinearSolveError(
                f"direct solve residual {resid:.3e} exceeds {tol:.3e}", resid)
        info = {"method": "direct", "residual": resid, "sweeps": 0}
    elif method == "sor":
        u = np.zeros(ops.n, dtype=complex)
        u[ops.bnd_idx] = bc0[ops.bnd_idx]
        if warm_flat is not None:
            u[ops.int_idx] = warm_flat[ops.int_idx]
        rhs_full = np.zeros(ops.n, dtype=complex)
        rhs_full[ops.int_idx] = rhs_int
        omega = ops.omega
        h2 = grid.h * grid.h
        resid = np.inf
        sweeps = 0
        while sweeps < max_sweeps:
            _backend.sor_sweep(u, rhs_full, ops.red_idx, ops.red_nbr, omega, h2)
            _backend.sor_sweep(u, rhs_full, ops.black_idx, ops.black_nbr, omega, h2)
            sweeps += 1
            if sweeps % _RESID_EVERY == 0 or sweeps == max_sweeps:
                resid = _relative_residual(ops, u[ops.int_idx], b)
                if resid <= tol:
                    break
        if resid > tol:
            raise LinearSolveError(
                f"SOR did not reach {tol:.3e} in {max_sweeps} sweeps "
                f"(residual {resid:.3e})", resid)
        x = u[ops.int_idx]
        info = {"method": "sor", "residual": resid, "sweeps": sweeps,
                "omega": omega, "backend": _backend.BACKEND}
    else:
        raise InvalidFieldError(f"unknown inner solver {method!r}")

    out = np.full(ops.n, np.nan + 0j, dtype=complex)
    out[ops.int_idx] = x
    out[ops.bnd_idx] = bc0[ops.bnd_idx]
    return out, info


def poisson_solve(rhs: ComplexField | RealField, bc: ComplexField | RealField,
                  *, method: str = "direct", tol: float = DEFAULT_TOL,
                  max_sweeps: int = DEFAULT_MAX_SWEEPS):
    """Field-level Dirichlet solve; output dtype follows the inputs."""
    grid = require_same_grid(rhs, bc)
    if bc.domain != "full":
        raise InvalidFieldError("boundary data must carry boundary-node values")
    rhs_flat = np.where(rhs.defined_mask, rhs.values, 0).ravel().astype(complex)
    bc_flat = np.where(bc.grid.boundary, bc.values, 0).ravel().astype(complex)
    out, _info = solve_dirichlet_arrays(grid, rhs_flat, bc_flat, method=method,
                                        tol=tol, max_sweeps=max_sweeps)
    real_in = isinstance(rhs, RealField) and isinstance(bc, RealField)
    if real_in:
        vals = np.full(grid.ny * grid.nx, np.nan)
        vals[grid.defined.ravel()] = out[grid.defined.ravel()].real
        return RealField(grid, vals.reshape(grid.ny, grid.nx))
    return ComplexField(grid, out.reshape(grid.ny, grid.nx))
