"""Compare the compiled kernel extension against the pure-numpy fallback.

Three measurements, each repeated and reported as best-of-N wall time:

  1. the Poisson-kernel boundary integral (dense M x P product),
  2. red-black SOR half-sweeps on the disk Laplacian,
  3. an end-to-end hyperbolic solve, run in a subprocess per backend so the
     import-time backend choice (HMLAB_BACKEND) applies cleanly.

Usage: python3 benchmarks/bench_backends.py [--n 129] [--repeats 5]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

_SOLVE_SNIPPET = """
import time
import warnings
warnings.filterwarnings("ignore")
from hmlab.grid import unit_disk_grid
from hmlab.metric import builtin_metric
from hmlab.boundary import twist_map
from hmlab.solver import HarmonicProblem, SolverConfig, solve_tension
import hmlab._backend as backend

grid = unit_disk_grid({n})
problem = HarmonicProblem(grid, builtin_metric("hyperbolic"),
                          twist_map(grid, 0.3), SolverConfig())
solve_tension(problem)           # warm caches (grid ops, factorization)
t0 = time.perf_counter()
result = solve_tension(problem)
elapsed = time.perf_counter() - t0
print(f"{{backend.BACKEND}} {{elapsed:.6f}} {{result.iterations}}")
"""


def best_of(repeats: int, fn) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernels(n: int, repeats: int) -> None:
    from hmlab._backend import get_kernels
    from hmlab._gridops import gridops
    from hmlab.grid import unit_disk_grid

    grid = unit_disk_grid(n)
    ops = gridops(grid)

    # Poisson boundary integral: interior points x boundary samples
    zs = grid.nodes_z[grid.interior]
    px, py = np.ascontiguousarray(zs.real), np.ascontiguousarray(zs.imag)
    m = max(256, 4 * grid.n_boundary)
    ang = 2.0 * np.pi * np.arange(m) / m
    cosa, sina = np.cos(ang), np.sin(ang)
    g = np.exp(3j * ang)
    out = np.empty(len(px), dtype=np.complex128)

    # SOR: red-black sweeps on a smooth right-hand side
    rhs = np.zeros(grid.nx * grid.ny, dtype=np.complex128)
    rhs[ops.int_idx] = np.sin(px) * np.cos(py) + 1j * np.cos(px)
    u0 = np.zeros(grid.nx * grid.ny, dtype=np.complex128)

    rows = []
    for name in ("python", "compiled"):
        try:
            sor, pdisk = get_kernels(name)
        except ImportError:
            print(f"{name:>9}: extension not built, skipped")
            continue
        t_p = best_of(repeats, lambda: pdisk(px, py, cosa, sina, g, 1.0 / m, out))

        def sweeps():
            u = u0.copy()
            for _ in range(50):
                sor(u, rhs, ops.red_idx, ops.red_nbr, ops.omega, grid.h ** 2)
                sor(u, rhs, ops.black_idx, ops.black_nbr, ops.omega, grid.h ** 2)

        t_s = best_of(repeats, sweeps)
        rows.append((name, t_p, t_s))
        print(f"{name:>9}: poisson_disk {t_p * 1e3:8.2f} ms   "
              f"100 SOR half-sweeps {t_s * 1e3:8.2f} ms")
    if len(rows) == 2:
        print(f"{'speedup':>9}: poisson_disk {rows[0][1] / rows[1][1]:8.2f} x    "
              f"SOR sweeps          {rows[0][2] / rows[1][2]:8.2f} x")


def bench_solve(n: int, repeats: int) -> None:
    env_base = {k: v for k, v in os.environ.items()}
    results = {}
    for name in ("python", "compiled"):
        env = dict(env_base, HMLAB_BACKEND=name,
                   PYTHONPATH=os.pathsep.join(
                       [os.path.join(os.path.dirname(__file__), "..", "src")]
                       + ([env_base["PYTHONPATH"]] if "PYTHONPATH" in env_base else [])))
        best = None
        for _ in range(repeats):
            proc = subprocess.run([sys.executable, "-c",
                                   _SOLVE_SNIPPET.format(n=n)],
                                  capture_output=True, text=True, env=env)
            if proc.returncode != 0:
                print(f"{name:>9}: solve failed\n{proc.stderr.strip()}")
                break
            backend, elapsed, iters = proc.stdout.split()
            if backend != name:
                print(f"{name:>9}: backend unavailable (got {backend}), skipped")
                break
            t = float(elapsed)
            best = t if best is None else min(best, t)
        else:
            results[name] = best
            print(f"{name:>9}: end-to-end solve  {best * 1e3:8.2f} ms "
                  f"({iters} outer iterations)")
    if len(results) == 2:
        print(f"{'speedup':>9}: end-to-end solve  "
              f"{results['python'] / results['compiled']:8.2f} x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=129,
                        help="grid nodes per side (default 129)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="repetitions, best time kept (default 5)")
    args = parser.parse_args()
    print(f"grid {args.n} x {args.n}, best of {args.repeats}")
    bench_kernels(args.n, args.repeats)
    bench_solve(args.n, args.repeats)


if __name__ == "__main__":
    main()
