"""Parity between the compiled kernels and the numpy fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from hmlab import _backend

try:
    from hmlab import _kernels  # noqa: F401
    HAS_COMPILED = True
except ImportError:
    HAS_COMPILED = False

needs_compiled = pytest.mark.skipif(
    not HAS_COMPILED, reason="compiled kernel extension not built")


def test_active_backend_is_valid():
    assert _backend.BACKEND in ("compiled", "python")
    assert callable(_backend.sor_sweep)
    assert callable(_backend.poisson_disk)
    with pytest.raises(ValueError):
        _backend.get_kernels("fortran")


@needs_compiled
def test_poisson_disk_parity():
    rng = np.random.default_rng(5)
    m = 310
    etas = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
    g = np.ascontiguousarray(np.exp(3j * etas) + 0.2 * rng.random(m))
    r = 0.95 * np.sqrt(rng.random(400))
    t = 2.0 * np.pi * rng.random(400)
    px = np.ascontiguousarray(r * np.cos(t))
    py = np.ascontiguousarray(r * np.sin(t))
    cosa, sina = np.ascontiguousarray(np.cos(etas)), np.ascontiguousarray(np.sin(etas))

    outs = {}
    for name in ("python", "compiled"):
        _, poisson = _backend.get_kernels(name)
        out = np.empty(px.shape, dtype=np.complex128)
        poisson(px, py, cosa, sina, g, 1.0 / m, out)
        outs[name] = out
    scale = np.max(np.abs(outs["python"]))
    assert np.max(np.abs(outs["python"] - outs["compiled"])) < 1e-12 * scale


@needs_compiled
def test_sor_sweep_parity():
    rng = np.random.default_rng(9)
    n = 500
    u0 = np.ascontiguousarray(rng.random(n) + 1j * rng.random(n))
    rhs = np.ascontiguousarray(rng.random(n) + 1j * rng.random(n))
    # one color only: even nodes update, all their neighbors are odd, as in
    # a genuine red-black coloring (updated nodes never read each other)
    evens = np.arange(2, n - 2, 2)
    idx = np.ascontiguousarray(rng.choice(evens, size=120,
                                          replace=False).astype(np.int64))
    idx.sort()
    nbr = np.ascontiguousarray(
        np.column_stack([idx - 1, idx + 1,
                         (idx + 7) % n, (idx + 13) % n]).astype(np.int64))

    results = {}
    for name in ("python", "compiled"):
        sor, _ = _backend.get_kernels(name)
        u = u0.copy()
        for _ in range(3):
            sor(u, rhs, idx, nbr, 1.7, 0.01)
        results[name] = u
    assert np.max(np.abs(results["python"] - results["compiled"])) < 1e-13


@needs_compiled
def test_cross_backend_solve_agreement(tmp_path):
    """The two backends must produce the same converged map."""
    script = (
        "import json, sys, numpy as np\n"
        "from hmlab.grid import unit_disk_grid\n"
        "from hmlab.metric import hyperbolic_metric\n"
        "from hmlab.boundary import twist_map\n"
        "from hmlab.solver import HarmonicProblem, solve_tension\n"
        "import warnings; warnings.simplefilter('ignore')\n"
        "g = unit_disk_grid(33)\n"
        "r = solve_tension(HarmonicProblem(g, hyperbolic_metric(), twist_map(g, 0.3)))\n"
        "np.save(sys.argv[1], r.field.values)\n"
    )
    outs = {}
    for name in ("python", "compiled"):
        env = dict(os.environ, HMLAB_BACKEND=name)
        path = tmp_path / f"{name}.npy"
        subprocess.run([sys.executable, "-c", script, str(path)], env=env,
                       check=True, cwd=str(tmp_path))
        outs[name] = np.load(path)
    diff = np.abs(outs["python"] - outs["compiled"])
    assert np.nanmax(diff) < 1e-9


def test_backend_env_override_subprocess():
    script = "from hmlab import _backend; print(_backend.BACKEND)"
    for name in ("python",) + (("compiled",) if HAS_COMPILED else ()):
        env = dict(os.environ, HMLAB_BACKEND=name)
        proc = subprocess.run([sys.executable, "-c", script], env=env,
                              capture_output=True, text=True, check=True)
        assert proc.stdout.strip() == name
