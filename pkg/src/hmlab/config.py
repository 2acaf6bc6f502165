"""Problem configuration: JSON loading, schema validation, object assembly.

A problem config is a JSON object with four sections::

    {
      "grid":     {"domain": "disk", "n": 129},
      "metric":   {"kind": "hyperbolic"},
      "boundary": {"type": "twist", "amplitude": 0.3},
      "solver":   {"tol_residual": 1e-8}          # optional
    }

``load_config`` reads and validates a file against the bundled schema;
``build_problem`` turns a validated dict into a ready-to-solve
:class:`~hmlab.solver.HarmonicProblem`.
"""

from __future__ import annotations

import importlib.resources
import json

import jsonschema

from .boundary import boundary_from_config
from .errors import ConfigError
from .grid import GridSpec, rectangle_grid, unit_disk_grid
from .metric import metric_from_config
from .solver import HarmonicProblem, SolverConfig

_SCHEMA_CACHE: dict[str, dict] = {}


def load_schema(name: str) -> dict:
    """Return the bundled JSON schema ``<name>.schema.json``."""
    if name not in _SCHEMA_CACHE:
        ref = importlib.resources.files("hmlab") / "schemas" / f"{name}.schema.json"
        try:
            text = ref.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigError(f"no bundled schema named {name!r}") from None
        _SCHEMA_CACHE[name] = json.loads(text)
    return _SCHEMA_CACHE[name]


def validate_against(name: str, payload: dict) -> None:
    """Validate ``payload`` against the bundled schema, raising ConfigError."""
    schema = load_schema(name)
    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(payload), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise ConfigError(
            f"{name} document fails schema validation at {where}: {first.message}")


def load_config(path: str) -> dict:
    """Read a problem-config JSON file and validate its shape."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config document must be a JSON object")
    validate_against("config", cfg)
    return cfg


def grid_from_config(cfg: dict) -> GridSpec:
    """Build the grid named by the ``grid`` section."""
    domain = cfg.get("domain")
    if domain == "disk":
        if "n" not in cfg:
            raise ConfigError("disk grid config needs 'n' (nodes per side)")
        return unit_disk_grid(int(cfg["n"]))
    if domain == "rectangle":
        missing = [k for k in ("nx", "ny", "origin", "h") if k not in cfg]
        if missing:
            raise ConfigError(f"rectangle grid config needs {missing}")
        ox, oy = cfg["origin"]
        return rectangle_grid(int(cfg["nx"]), int(cfg["ny"]),
                              (float(ox), float(oy)), float(cfg["h"]))
    raise ConfigError(f"unknown grid domain {domain!r}")


def solver_from_config(cfg: dict | None) -> SolverConfig:
    """Build a SolverConfig from the optional ``solver`` section."""
    cfg = cfg or {}
    known = {"tol_residual", "max_outer", "damping", "inner_tol",
             "inner_method", "max_inner_sweeps"}
    extra = set(cfg) - known
    if extra:
        raise ConfigError(f"unknown solver config keys: {sorted(extra)}")
    return SolverConfig(**cfg)


def build_problem(cfg: dict) -> HarmonicProblem:
    """Assemble grid, metric, boundary data, and solver settings."""
    if not isinstance(cfg, dict):
        raise ConfigError("config document must be a JSON object")
    for section in ("grid", "metric", "boundary"):
        if section not in cfg:
            raise ConfigError(f"config is missing the {section!r} section")
    grid = grid_from_config(cfg["grid"])
    metric = metric_from_config(cfg["metric"])
    boundary = boundary_from_config(grid, cfg["boundary"])
    solver = solver_from_config(cfg.get("solver"))
    return HarmonicProblem(grid=grid, metric=metric, boundary=boundary,
                           config=solver)


def problem_from_file(path: str) -> tuple[dict, HarmonicProblem]:
    """Load, validate, and assemble in one call."""
    cfg = load_config(path)
    return cfg, build_problem(cfg)
