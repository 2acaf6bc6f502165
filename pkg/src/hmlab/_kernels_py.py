"""Pure-numpy kernels; semantics identical to the compiled extension.

Chunk sizes are fixed constants so summation order (and hence output bytes)
is reproducible for a given backend.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_CHUNK_ELEMS = 1 << 22  # ~32 MB of float64 temporaries per chunked product


def sor_sweep(u: np.ndarray, rhs: np.ndarray, idx: np.ndarray,
              nbr: np.ndarray, omega: float, h2: float) -> None:
    """One red-black half-sweep, in place on the full flat vector ``u``.

    ``idx`` holds one color's flat node ids; ``nbr`` their 4-neighbor ids.
    Nodes of one color only read the other color, so the update vectorizes.
    """
    s = u[nbr[:, 0]] + u[nbr[:, 1]] + u[nbr[:, 2]] + u[nbr[:, 3]]
    gs = 0.25 * (s - h2 * rhs[idx])
    u[idx] += omega * (gs - u[idx])


def poisson_disk(px: np.ndarray, py: np.ndarray, cosa: np.ndarray,
                 sina: np.ndarray, g: np.ndarray, prefactor: float,
                 out: np.ndarray) -> None:
    """Trapezoid Poisson integral of boundary data ``g`` at interior points.

    out[p] = prefactor * (1 - |z_p|^2) * sum_m g[m] / |e^{i a_m} - z_p|^2
    """
    m = len(cosa)
    chunk = max(1, _CHUNK_ELEMS // max(m, 1))
    for start in range(0, len(px), chunk):
        sl = slice(start, min(start + chunk, len(px)))
        dx = cosa[None, :] - px[sl, None]
        dy = sina[None, :] - py[sl, None]
        ker = 1.0 / (dx * dx + dy * dy)
        out[sl] = ker @ g
    out *= prefactor * (1.0 - px * px - py * py)
