"""Numerical laboratory for harmonic maps into conformally weighted planes.

Submodules are imported lazily so that the command-line front end can
configure threading environment variables before numpy is loaded.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    # module: public names re-exported at package level
    "grid": ["GridSpec", "unit_disk_grid", "rectangle_grid"],
    "field": ["ComplexField", "RealField", "wirtinger_dz", "wirtinger_dzbar",
              "laplacian"],
    "metric": ["MetricDensity", "euclidean_metric", "hyperbolic_metric",
               "spherical_metric", "builtin_metric", "make_custom",
               "metric_from_config"],
    "boundary": ["BoundaryMap", "twist_map", "boundary_from_function",
                 "boundary_from_samples", "boundary_from_config"],
    "solver": ["SolverConfig", "HarmonicProblem", "SolveResult",
               "solve_tension", "picard_step", "poisson_extension",
               "initial_iterate", "tension_residual", "energy"],
    "analysis": ["beltrami", "jacobian", "distortion", "hopf",
                 "holomorphy_residual", "identity_residual", "winding_number",
                 "critical_points", "assemble_report", "AnalysisReport"],
    "heinz": ["HeinzCertificate", "alpha_radius", "estimate_C",
              "verify_super_average", "positivity_conclusion",
              "log_mu_field", "certify_solution"],
    "config": ["load_config", "build_problem", "problem_from_file"],
    "errors": ["HmlabError", "InputError", "ConfigError", "GridError",
               "NumericalError", "RangeViolationError", "StagnationError",
               "InvalidFieldError", "InsufficientSupportError",
               "BoundaryDataError"],
}

_NAME_TO_MODULE = {name: mod for mod, names in _EXPORTS.items()
                   for name in names}

__all__ = sorted(_NAME_TO_MODULE) + ["__version__"]


def __getattr__(name: str):
    mod = _NAME_TO_MODULE.get(name)
    if mod is None:
        raise AttributeError(f"module 'hmlab' has no attribute {name!r}")
    value = getattr(importlib.import_module(f"hmlab.{mod}"), name)
    globals()[name] = value
    return value


def __dir__():
    return __all__
