"""Per-grid discrete operators, built once and cached by grid key.

Holds the Wirtinger/Laplacian stencil matrices, the interior Dirichlet
system (direct factorization and red-black SOR structure), distance-to-rim
masks, exact cell-overlap quadrature weights, and — for disk grids — the
radial transfer that assigns Dirichlet values on the staircase boundary.

Transfer scheme (disk): the value at a boundary node z_b = r_b e^{i theta}
is the cubic Lagrange extrapolation in r through the exact circle datum
g(theta) at r = 1 and bicubic samples of the current field at
r = 1 - {3h, 5h, 7h} along the same ray. Data enters a smooth function of
position, so the staircase offsets |r_b - 1| <= h/2 contribute only an
O(h^4) consistency error and no rough boundary layer; the lagged update is
a contraction (worst-mode factor ~0.5).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import distance_transform_edt
from scipy.sparse.linalg import splu

from .errors import GridError
from .geometry import box_box_overlap, disk_box_overlap
from .grid import GridSpec

_CACHE: dict[str, "GridOps"] = {}

# transfer sample depths, in units of h inward from the unit circle
_TRANSFER_DEPTHS = (4.0, 6.0, 8.0)
# below this remaining radius the cubic transfer degenerates; assign g directly
_TRANSFER_MIN_RADIUS = 0.3


def gridops(grid: GridSpec) -> "GridOps":
    ops = _CACHE.get(grid.key)
    if ops is None:
        ops = GridOps(grid)
        _CACHE[grid.key] = ops
    return ops


def _lagrange_weights(nodes: np.ndarray, xi) -> np.ndarray:
    """Lagrange basis values at xi for the given 1-D nodes.

    Shapes: nodes (k,), xi (...,) -> (..., k).
    """
    xi = np.asarray(xi, dtype=float)[..., None]
    k = len(nodes)
    w = np.ones(xi.shape[:-1] + (k,))
    for a in range(k):
        for b in range(k):
            if a != b:
                w[..., a] *= (xi[..., 0] - nodes[b]) / (nodes[a] - nodes[b])
    return w


class GridOps:
    def __init__(self, grid: GridSpec):
        self.grid = grid
        nx, ny, h = grid.nx, grid.ny, grid.h
        self.n = nx * ny
        mask_flat = grid.mask.ravel()
        self.defined_flat = mask_flat != 0
        self.interior_flat = mask_flat == 1
        self.boundary_flat = mask_flat == 2
        self.int_idx = np.flatnonzero(self.interior_flat).astype(np.int64)
        self.bnd_idx = np.flatnonzero(self.boundary_flat).astype(np.int64)

        self._build_first_derivatives()
        self._build_laplacian()
        self._build_dirichlet_system()
        self._build_sor_structure()

        # node-unit distance from each node to the nearest non-interior node
        self.rim_distance = distance_transform_edt(grid.interior)

        self._lu = None
        self._omega = None
        self._cell_weights = None
        self._transfer = None

    # ------------------------------------------------------------------ #
    # stencil assembly

    def _build_first_derivatives(self):
        grid = self.grid
        self.DX, self._dx_copy = self._axis_derivative(axis=1)
        self.DY, self._dy_copy = self._axis_derivative(axis=0)
        defined = grid.defined
        # rows exist for every defined node (possibly via the copy fallback)
        self.deriv_defined = defined

    def _axis_derivative(self, axis: int):
        """CSR matrix for d/dx (axis=1) or d/dy (axis=0) on defined nodes.

        Centered where both axis neighbors are defined, one-sided
        second-order where two same-side nodes exist, one-sided first-order
        where only one, and a copy-from-transverse-neighbor fallback for
        nodes with no axis information at all.
        """
        grid = self.grid
        nx, ny, h = grid.nx, grid.ny, grid.h
        defined = grid.defined
        step = 1 if axis == 1 else nx

        def shifted(arr, k):
            out = np.zeros_like(arr)
            if axis == 1:
                if k > 0:
                    out[:, :-k] = arr[:, k:]
                else:
                    out[:, -k:] = arr[:, :k]
            else:
                if k > 0:
                    out[:-k, :] = arr[k:, :]
                else:
                    out[-k:, :] = arr[:k, :]
            return out

        av_p1 = shifted(defined, 1) & defined
        av_m1 = shifted(defined, -1) & defined
        av_p2 = av_p1 & shifted(defined, 2)
        av_m2 = av_m1 & shifted(defined, -2)

        centered = av_p1 & av_m1
        fwd2 = defined & ~av_m1 & av_p2
        bwd2 = defined & ~av_p1 & av_m2
        fwd1 = defined & ~av_m1 & av_p1 & ~av_p2
        bwd1 = defined & ~av_p1 & av_m1 & ~av_m2
        none = defined & ~av_p1 & ~av_m1

        rows, cols, vals = [], [], []

        def add(mask2d, offsets, coeffs):
            idx = np.flatnonzero(mask2d.ravel())
            for off, c in zip(offsets, coeffs):
                rows.append(idx)
                cols.append(idx + off * step)
                vals.append(np.full(idx.shape, c / h))

        add(centered, (1, -1), (0.5, -0.5))
        add(fwd2, (0, 1, 2), (-1.5, 2.0, -0.5))
        add(bwd2, (0, -1, -2), (1.5, -2.0, 0.5))
        add(fwd1, (0, 1), (-1.0, 1.0))
        add(bwd1, (0, -1), (1.0, -1.0))

        mat = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n, self.n))

        # copy fallback: transverse neighbors ordered interior-first
        copy_pairs = []
        if none.any():
            tstep = nx if axis == 1 else 1
            for p in np.flatnonzero(none.ravel()):
                donor = -1
                for cand in (p + tstep, p - tstep):
                    if 0 <= cand < self.n and self.interior_flat[cand]:
                        donor = cand
                        break
                if donor < 0:
                    for cand in (p + tstep, p - tstep):
                        if 0 <= cand < self.n and self.defined_flat[cand] \
                                and not none.ravel()[cand]:
                            donor = cand
                            break
                if donor < 0:
                    raise GridError("isolated boundary node: no usable "
                                    "derivative stencil or donor")
                copy_pairs.append((p, donor))
        pairs = (np.array([p for p, _ in copy_pairs], dtype=np.int64),
                 np.array([d for _, d in copy_pairs], dtype=np.int64))
        return mat, pairs

    def _build_laplacian(self):
        grid = self.grid
        nx, h = grid.nx, grid.h
        idx = self.int_idx
        rows = np.concatenate([idx] * 5)
        cols = np.concatenate([idx, idx + 1, idx - 1, idx + nx, idx - nx])
        inv_h2 = 1.0 / (h * h)
        vals = np.concatenate([
            np.full(idx.shape, -4.0 * inv_h2),
            np.full(idx.shape, inv_h2),
            np.full(idx.shape, inv_h2),
            np.full(idx.shape, inv_h2),
            np.full(idx.shape, inv_h2),
        ])
        self.LAP = sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def _build_dirichlet_system(self):
        """A u_int = rhs_int - B u_bnd for the 5-point Laplacian."""
        grid = self.grid
        nx, h = grid.nx, grid.h
        inv_h2 = 1.0 / (h * h)
        idx = self.int_idx
        m = len(idx)
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[idx] = np.arange(m)

        a_rows = [np.arange(m)]
        a_cols = [np.arange(m)]
        a_vals = [np.full(m, -4.0 * inv_h2)]
        b_rows, b_cols, b_vals = [], [], []
        for off in (1, -1, nx, -nx):
            q = idx + off
            is_int = self.interior_flat[q]
            is_bnd = self.boundary_flat[q]
            a_rows.append(pos[idx[is_int]])
            a_cols.append(pos[q[is_int]])
            a_vals.append(np.full(int(is_int.sum()), inv_h2))
            b_rows.append(pos[idx[is_bnd]])
            b_cols.append(q[is_bnd])
            b_vals.append(np.full(int(is_bnd.sum()), inv_h2))

        self.A = sp.csc_matrix(
            (np.concatenate(a_vals), (np.concatenate(a_rows), np.concatenate(a_cols))),
            shape=(m, m))
        self.B = sp.csr_matrix(
            (np.concatenate(b_vals), (np.concatenate(b_rows), np.concatenate(b_cols))),
            shape=(m, self.n))

    def _build_sor_structure(self):
        grid = self.grid
        nx = grid.nx
        idx = self.int_idx
        jj, ii = np.divmod(idx, nx)
        color = (ii + jj) % 2

        def pack(which):
            sub = idx[color == which]
            nbr = np.stack([sub + 1, sub - 1, sub + nx, sub - nx], axis=1)
            return sub.astype(np.int64), nbr.astype(np.int64)

        self.red_idx, self.red_nbr = pack(0)
        self.black_idx, self.black_nbr = pack(1)

        # compact-index neighbors for the Jacobi spectral-radius estimate
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[idx] = np.arange(len(idx))
        nbr_full = np.stack([idx + 1, idx - 1, idx + nx, idx - nx], axis=1)
        self._jacobi_nbr = np.where(self.interior_flat[nbr_full], pos[nbr_full], -1)

    # ------------------------------------------------------------------ #
    # lazy pieces

    @property
    def lu(self):
        if self._lu is None:
            self._lu = splu(self.A)
        return self._lu

    @property
    def omega(self) -> float:
        """SOR relaxation factor from a power-iteration Jacobi radius estimate."""
        if self._omega is None:
            rng = np.random.default_rng(12345)
            v = rng.standard_normal(len(self.int_idx))
            v /= np.linalg.norm(v)
            nbr = self._jacobi_nbr
            valid = nbr >= 0
            safe = np.where(valid, nbr, 0)
            rho = 0.0
            for _ in range(120):
                w = 0.25 * np.where(valid, v[safe], 0.0).sum(axis=1)
                nrm = np.linalg.norm(w)
                if nrm == 0.0:
                    break
                rho = nrm
                v = w / nrm
            rho = min(rho, 1.0 - 1e-12)
            self._omega = float(min(2.0 / (1.0 + np.sqrt(1.0 - rho * rho)), 1.98))
        return self._omega

    @property
    def cell_weights(self) -> np.ndarray:
        """Exact area of each defined node's h-cell inside the domain (flat).

        Exterior cells can still clip the disk near the rim; their slivers are
        reassigned to the nearest defined 8-neighbor so the weights sum to the
        exact domain area.
        """
        if self._cell_weights is None:
            grid = self.grid
            h = grid.h
            zs = grid.nodes_z.ravel()
            x = zs.real
            y = zs.imag
            if grid.domain_kind == "disk":
                w = disk_box_overlap(0.0, 0.0, 1.0,
                                     x - h / 2, x + h / 2, y - h / 2, y + h / 2)
            else:
                x0, y0 = grid.origin
                x1 = x0 + (grid.nx - 1) * h
                y1 = y0 + (grid.ny - 1) * h
                w = box_box_overlap(x - h / 2, x + h / 2, y - h / 2, y + h / 2,
                                    x0, x1, y0, y1)
            stray = np.flatnonzero(~self.defined_flat & (w > 0.0))
            nx = grid.nx
            for p in stray:
                pj, pi = divmod(p, nx)
                dist_best, donor = np.inf, -1
                for dj in (-1, 0, 1):
                    for di in (-1, 0, 1):
                        qi, qj = pi + di, pj + dj
                        if not (0 <= qi < nx and 0 <= qj < grid.ny):
                            continue
                        q = qj * nx + qi
                        if self.defined_flat[q]:
                            d = abs(zs[q] - zs[p])
                            if d < dist_best:
                                dist_best, donor = d, q
                if donor >= 0:
                    w[donor] += w[p]
                w[p] = 0.0
            w = np.where(self.defined_flat, w, 0.0)
            w.setflags(write=False)
            self._cell_weights = w
        return self._cell_weights

    def core_mask(self, units: float) -> np.ndarray:
        """Interior nodes at least ``units`` node-spacings from the rim (2D)."""
        return self.grid.interior & (self.rim_distance >= units)

    # ------------------------------------------------------------------ #
    # disk boundary transfer

    @property
    def transfer(self):
        if self._transfer is None:
            if self.grid.domain_kind != "disk":
                self._transfer = (np.ones(len(self.bnd_idx)),
                                  sp.csr_matrix((len(self.bnd_idx), self.n)),
                                  "direct")
            else:
                self._transfer = self._build_disk_transfer()
        return self._transfer

    def _build_disk_transfer(self):
        grid = self.grid
        h = grid.h
        zb = grid.nodes_z.ravel()[self.bnd_idx]
        theta = np.angle(zb)
        rb = np.abs(zb)
        k = len(self.bnd_idx)

        # deepest sample plus its bicubic footprint must stay well inside
        if 1.0 - (_TRANSFER_DEPTHS[-1] + 2.0) * h < _TRANSFER_MIN_RADIUS:
            return np.ones(k), sp.csr_matrix((k, self.n)), "direct"

        xi = (1.0 - rb) / h  # inward offset of the boundary node, in h units
        nodes = np.concatenate([[0.0], np.asarray(_TRANSFER_DEPTHS)])
        wl = _lagrange_weights(nodes, xi)          # (k, 4)
        w_g = wl[:, 0]

        rows, cols, vals = [], [], []
        for s, depth in enumerate(_TRANSFER_DEPTHS):
            radius = 1.0 - depth * h
            px = radius * np.cos(theta)
            py = radius * np.sin(theta)
            idx16, w16 = self._bicubic_rows(px, py)
            rows.append(np.repeat(np.arange(k), 16))
            cols.append(idx16.ravel())
            vals.append((w16 * wl[:, s + 1][:, None]).ravel())
        S = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(k, self.n))
        return w_g, S, "cubic"

    def _bicubic_rows(self, px: np.ndarray, py: np.ndarray):
        """Bicubic interpolation stencils at arbitrary points.

        Returns (indices (k,16), weights (k,16)). All footprint nodes must be
        interior, so these stencils read current-iterate values that the
        inner solve actually produced; the sample radii are chosen deep
        enough that this holds.
        """
        grid = self.grid
        h, nx = grid.h, grid.nx
        ux = (px - grid.origin[0]) / h
        uy = (py - grid.origin[1]) / h
        i1 = np.floor(ux).astype(np.int64)
        j1 = np.floor(uy).astype(np.int64)
        tx = ux - i1
        ty = uy - j1
        offs = np.array([-1.0, 0.0, 1.0, 2.0])
        wx = _lagrange_weights(offs, tx)  # (k, 4)
        wy = _lagrange_weights(offs, ty)
        ii = i1[:, None] + np.array([-1, 0, 1, 2], dtype=np.int64)[None, :]
        jj = j1[:, None] + np.array([-1, 0, 1, 2], dtype=np.int64)[None, :]
        if ii.min() < 0 or ii.max() >= nx or jj.min() < 0 or jj.max() >= grid.ny:
            raise GridError("bicubic footprint leaves the grid")
        idx16 = (jj[:, :, None] * nx + ii[:, None, :]).reshape(len(px), 16)
        if not self.interior_flat[idx16].all():
            raise GridError("bicubic footprint touches non-interior nodes")
        w16 = (wy[:, :, None] * wx[:, None, :]).reshape(len(px), 16)
        return idx16, w16

    def boundary_values(self, g_node: np.ndarray, f_flat: np.ndarray) -> np.ndarray:
        """Dirichlet values on the boundary nodes from circle data + field.

        ``g_node``: exact boundary data at each boundary node's parameter,
        ordered like ``bnd_idx``. ``f_flat``: current field (flat, defined
        nodes finite; exterior entries are ignored).
        """
        w_g, S, kind = self.transfer
        if kind == "direct":
            return np.asarray(g_node, dtype=complex).copy()
        fz = np.where(self.defined_flat, f_flat, 0.0)
        return w_g * np.asarray(g_node, dtype=complex) + S @ fz
