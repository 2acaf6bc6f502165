"""Kernel backend selection.

``HMLAB_BACKEND`` picks the implementation: ``auto`` (default) prefers the
compiled extension and falls back to numpy, ``compiled`` requires the
extension, ``python`` forces the fallback.
"""

from __future__ import annotations

import os
import warnings

_choice = os.environ.get("HMLAB_BACKEND", "auto").strip().lower()
if _choice not in {"auto", "compiled", "python"}:
    warnings.warn(f"HMLAB_BACKEND={_choice!r} not recognized; using 'auto'",
                  RuntimeWarning, stacklevel=1)
    _choice = "auto"

if _choice == "python":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise ImportError(
                "HMLAB_BACKEND=compiled but the hmlab._kernels extension is "
                "not built; reinstall with a C compiler or use HMLAB_BACKEND=python"
            ) from None
        from . import _kernels_py as _impl  # type: ignore[no-redef]

BACKEND = _impl.BACKEND_NAME
sor_sweep = _impl.sor_sweep
poisson_disk = _impl.poisson_disk


def get_kernels(name: str):
    """Return (sor_sweep, poisson_disk) for an explicit backend name."""
    if name == "python":
        from . import _kernels_py as mod
    elif name == "compiled":
        from . import _kernels as mod  # raises ImportError if not built
    else:
        raise ValueError(f"unknown backend {name!r}")
    return mod.sor_sweep, mod.poisson_disk
