"""Conformal metric densities on the target plane.

A metric density is a positive weight ``rho(w)`` on a region of the complex
``w``-plane.  The solver and the diagnostic passes only ever consume four
scalar fields derived from it, all vectorized over complex arrays:

``eval(w)``
    the density ``rho`` itself,
``dlog(w)``
    the Wirtinger derivative ``d(log rho)/dw``,
``lap_log(w)``
    the flat Laplacian of ``log rho``,
``curvature(w)``
    the Gauss curvature ``-lap_log / rho**2`` of ``rho**2 |dw|**2``.

Built-in densities (euclidean, hyperbolic, spherical) use closed forms and
return their constant curvatures exactly.  Custom densities are defined by a
whitelisted arithmetic expression in ``w`` and get their derivatives from
centered finite differences with relative step sizes.
"""

from __future__ import annotations

import ast
import dataclasses
from typing import Callable

import numpy as np

from .errors import ConfigError, RangeViolationError

__all__ = [
    "MetricDensity",
    "euclidean_metric",
    "hyperbolic_metric",
    "spherical_metric",
    "make_custom",
    "builtin_metric",
    "metric_from_config",
    "dlog_w",
    "curvature",
    "BUILTIN_METRICS",
    "DEFAULT_HYPERBOLIC_MARGIN",
    "DEFAULT_FD_STEP",
]

DEFAULT_HYPERBOLIC_MARGIN = 1e-3
DEFAULT_FD_STEP = 1e-5
# Second-derivative stencils lose ~eps**0.5 / step**2 to roundoff; a larger
# relative step keeps that below the truncation error for smooth densities.
_LAP_MIN_STEP = 1.2e-4
_CLOSURE_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class MetricDensity:
    """Bundle of density callables plus admissible-region predicates.

    ``valid_region`` is where interior iterates must live (an open safety
    region for singular densities); ``closure_contains`` is the closed region
    that prescribed boundary values may touch.
    """

    name: str
    kind: str
    eval: Callable[[np.ndarray], np.ndarray]
    dlog: Callable[[np.ndarray], np.ndarray]
    lap_log: Callable[[np.ndarray], np.ndarray]
    curvature: Callable[[np.ndarray], np.ndarray]
    valid_region: Callable[[np.ndarray], np.ndarray]
    closure_contains: Callable[[np.ndarray], np.ndarray]
    meta: dict = dataclasses.field(default_factory=dict)

    def describe(self) -> dict:
        out = {"name": self.name, "kind": self.kind}
        out.update(self.meta)
        return out


def _as_complex(w) -> np.ndarray:
    return np.asarray(w, dtype=np.complex128)


def _full_like_real(w, value: float) -> np.ndarray:
    return np.full(np.shape(_as_complex(w)), value, dtype=np.float64)


def euclidean_metric() -> MetricDensity:
    """Flat density rho = 1 on the whole plane."""
    return MetricDensity(
        name="euclidean",
        kind="euclidean",
        eval=lambda w: _full_like_real(w, 1.0),
        dlog=lambda w: np.zeros(np.shape(_as_complex(w)), dtype=np.complex128),
        lap_log=lambda w: _full_like_real(w, 0.0),
        curvature=lambda w: _full_like_real(w, 0.0),
        valid_region=lambda w: np.ones(np.shape(_as_complex(w)), dtype=bool),
        closure_contains=lambda w: np.ones(np.shape(_as_complex(w)), dtype=bool),
    )


def hyperbolic_metric(margin: float = DEFAULT_HYPERBOLIC_MARGIN) -> MetricDensity:
    """Poincare density rho = 2 / (1 - |w|^2) on the unit disk.

    Curvature is exactly -1.  Interior iterates must stay inside
    ``|w| <= 1 - margin`` so the density stays finite; boundary data may lie
    on the closed disk ``|w| <= 1`` since the density is never evaluated at
    boundary nodes.
    """
    if not 0.0 < margin < 1.0:
        raise ConfigError(f"hyperbolic margin must lie in (0, 1), got {margin}")

    def _eval(w):
        w = _as_complex(w)
        return 2.0 / (1.0 - np.abs(w) ** 2)

    def _dlog(w):
        w = _as_complex(w)
        return np.conj(w) / (1.0 - np.abs(w) ** 2)

    def _lap_log(w):
        w = _as_complex(w)
        return 4.0 / (1.0 - np.abs(w) ** 2) ** 2

    return MetricDensity(
        name="hyperbolic",
        kind="hyperbolic",
        eval=_eval,
        dlog=_dlog,
        lap_log=_lap_log,
        curvature=lambda w: _full_like_real(w, -1.0),
        valid_region=lambda w: np.abs(_as_complex(w)) <= 1.0 - margin,
        closure_contains=lambda w: np.abs(_as_complex(w)) <= 1.0 + _CLOSURE_TOL,
        meta={"margin": margin},
    )


def spherical_metric() -> MetricDensity:
    """Round-sphere density rho = 2 / (1 + |w|^2); curvature exactly +1."""

    def _eval(w):
        w = _as_complex(w)
        return 2.0 / (1.0 + np.abs(w) ** 2)

    def _dlog(w):
        w = _as_complex(w)
        return -np.conj(w) / (1.0 + np.abs(w) ** 2)

    def _lap_log(w):
        w = _as_complex(w)
        return -4.0 / (1.0 + np.abs(w) ** 2) ** 2

    return MetricDensity(
        name="spherical",
        kind="spherical",
        eval=_eval,
        dlog=_dlog,
        lap_log=_lap_log,
        curvature=lambda w: _full_like_real(w, 1.0),
        valid_region=lambda w: np.ones(np.shape(_as_complex(w)), dtype=bool),
        closure_contains=lambda w: np.ones(np.shape(_as_complex(w)), dtype=bool),
    )


BUILTIN_METRICS = ("euclidean", "hyperbolic", "spherical")


def builtin_metric(name: str, margin: float = DEFAULT_HYPERBOLIC_MARGIN) -> MetricDensity:
    if name == "euclidean":
        return euclidean_metric()
    if name == "hyperbolic":
        return hyperbolic_metric(margin=margin)
    if name == "spherical":
        return spherical_metric()
    raise ConfigError(
        f"unknown metric {name!r}; builtins are {', '.join(BUILTIN_METRICS)}")


# ---------------------------------------------------------------------------
# custom densities from expressions
# ---------------------------------------------------------------------------

_EXPR_FUNCS = {
    "abs": np.abs,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "arctan": np.arctan,
    "atan": np.arctan,
    "real": np.real,
    "imag": np.imag,
    "conj": np.conj,
}
_EXPR_CONSTS = {"pi": np.pi, "e": np.e}

_VALUE_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.UAdd, ast.USub,
    ast.Load,
)
_BOOL_NODES = _VALUE_NODES + (
    ast.Compare, ast.BoolOp, ast.And, ast.Or, ast.Not,
    ast.Lt, ast.LtE, ast.Gt, ast.GtE,
)


def _compile_expression(expr: str, what: str, allow_compare: bool):
    """Parse and validate an arithmetic expression in the variable ``w``."""
    if not isinstance(expr, str) or not expr.strip():
        raise ConfigError(f"{what} must be a non-empty expression string")
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"{what} {expr!r} is not valid syntax: {exc}") from exc

    allowed = _BOOL_NODES if allow_compare else _VALUE_NODES
    for node in ast.walk(tree):
        if not isinstance(node, allowed):
            raise ConfigError(
                f"{what} {expr!r} uses unsupported construct "
                f"{type(node).__name__}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _EXPR_FUNCS:
                raise ConfigError(
                    f"{what} {expr!r} calls an unknown function")
            if node.keywords:
                raise ConfigError(
                    f"{what} {expr!r} must not use keyword arguments")
        if isinstance(node, ast.Name):
            if node.id not in _EXPR_FUNCS and node.id not in _EXPR_CONSTS \
                    and node.id != "w":
                raise ConfigError(
                    f"{what} {expr!r} references unknown name {node.id!r}")
        if isinstance(node, ast.Constant) and not isinstance(
                node.value, (int, float, complex)):
            raise ConfigError(f"{what} {expr!r} uses a non-numeric constant")

    code = compile(tree, f"<{what}>", "eval")
    namespace = {"__builtins__": {}}
    namespace.update(_EXPR_FUNCS)
    namespace.update(_EXPR_CONSTS)

    def run(w: np.ndarray) -> np.ndarray:
        try:
            with np.errstate(all="ignore"):
                out = eval(code, namespace, {"w": w})  # noqa: S307 - whitelisted AST
        except Exception as exc:
            raise ConfigError(
                f"failed to evaluate {what} {expr!r}: {exc}") from exc
        return np.asarray(out)

    return run


def _real_positive(raw: np.ndarray, expr: str) -> np.ndarray:
    """Check an evaluated density for positivity and strip a ~0 imag part."""
    arr = np.asarray(raw)
    if np.iscomplexobj(arr):
        scale = float(np.max(np.abs(arr))) if arr.size else 0.0
        if arr.size and float(np.max(np.abs(arr.imag))) > 1e-10 * max(scale, 1.0):
            raise ConfigError(
                f"density {expr!r} evaluates to complex values")
        arr = arr.real
    arr = arr.astype(np.float64, copy=False)
    if arr.size and not np.all(np.isfinite(arr) & (arr > 0.0)):
        raise ConfigError(
            f"density {expr!r} must be finite and positive on the "
            "admissible region")
    return arr


def make_custom(expression: str,
                region: str | None = None,
                fd_step: float = DEFAULT_FD_STEP,
                name: str = "custom") -> MetricDensity:
    """Build a density from an expression in ``w``.

    ``region`` is an optional boolean expression in ``w`` (for example
    ``"abs(w) < 0.95"``) declaring the admissible region; by default the
    density is taken to be admissible on the whole plane.  ``fd_step`` is the
    relative step for the first-derivative finite differences.
    """
    if not np.isfinite(fd_step) or fd_step <= 0 or fd_step > 1e-2:
        raise ConfigError(f"fd_step must lie in (0, 1e-2], got {fd_step}")
    rho_raw = _compile_expression(expression, "density expression", False)

    def _eval(w):
        w = _as_complex(w)
        vals = rho_raw(w)
        vals = np.broadcast_to(np.asarray(vals), w.shape)
        return _real_positive(vals, expression)

    def _log_rho(w):
        return np.log(_eval(w))

    def _dlog(w):
        w = _as_complex(w)
        s = fd_step * (1.0 + np.abs(w))
        lx = (_log_rho(w + s) - _log_rho(w - s)) / (2.0 * s)
        ly = (_log_rho(w + 1j * s) - _log_rho(w - 1j * s)) / (2.0 * s)
        return 0.5 * (lx - 1j * ly)

    def _lap_log(w):
        w = _as_complex(w)
        s = max(fd_step, _LAP_MIN_STEP) * (1.0 + np.abs(w))
        acc = (_log_rho(w + s) + _log_rho(w - s)
               + _log_rho(w + 1j * s) + _log_rho(w - 1j * s)
               - 4.0 * _log_rho(w))
        return acc / s ** 2

    def _curvature(w):
        w = _as_complex(w)
        return -_lap_log(w) / _eval(w) ** 2

    if region is not None:
        region_raw = _compile_expression(region, "region expression", True)

        def _valid(w):
            w = _as_complex(w)
            out = np.broadcast_to(np.asarray(region_raw(w)), w.shape)
            return out.astype(bool)
        _closure = _valid
    else:
        def _valid(w):
            return np.ones(np.shape(_as_complex(w)), dtype=bool)
        _closure = _valid

    metric = MetricDensity(
        name=name,
        kind="custom",
        eval=_eval,
        dlog=_dlog,
        lap_log=_lap_log,
        curvature=_curvature,
        valid_region=_valid,
        closure_contains=_closure,
        meta={"expression": expression, "region": region, "fd_step": fd_step},
    )

    # Probe now so malformed expressions fail at build time, not mid-solve.
    probe = np.array([0.05 + 0.02j, -0.3 + 0.1j, 0.2 - 0.4j, 0.0 + 0.0j])
    probe = probe[metric.valid_region(probe)]
    if probe.size == 0:
        raise ConfigError(
            f"region expression {region!r} excludes every probe point near 0")
    metric.eval(probe)
    metric.dlog(probe)
    metric.lap_log(probe)
    return metric


def _require_valid(m: MetricDensity, w: np.ndarray) -> np.ndarray:
    w = _as_complex(w)
    ok = m.valid_region(w)
    if not np.all(ok):
        flat = np.argwhere(~np.atleast_1d(ok))
        idx = tuple(flat[0]) if flat.size else ()
        val = np.atleast_1d(w)[idx] if flat.size else None
        raise RangeViolationError(
            f"point {val} lies outside the admissible region of metric "
            f"{m.name!r}", node=idx, value=val)
    return w


def dlog_w(m: MetricDensity, w) -> np.ndarray:
    """d(log rho)/dw at points ``w``, which must lie in the valid region."""
    return m.dlog(_require_valid(m, w))


def curvature(m: MetricDensity, w) -> np.ndarray:
    """Gauss curvature of rho^2 |dw|^2 at points ``w`` in the valid region."""
    return m.curvature(_require_valid(m, w))


def metric_from_config(cfg: dict) -> MetricDensity:
    """Build a density from a config mapping (see the JSON schema)."""
    if not isinstance(cfg, dict):
        raise ConfigError("metric config must be a mapping")
    kind = cfg.get("kind")
    if kind in ("euclidean", "spherical"):
        return builtin_metric(kind)
    if kind == "hyperbolic":
        return hyperbolic_metric(
            margin=float(cfg.get("margin", DEFAULT_HYPERBOLIC_MARGIN)))
    if kind == "custom":
        if "expression" not in cfg:
            raise ConfigError("custom metric config requires 'expression'")
        return make_custom(
            cfg["expression"],
            region=cfg.get("region"),
            fd_step=float(cfg.get("fd_step", DEFAULT_FD_STEP)),
            name=cfg.get("name", "custom"),
        )
    raise ConfigError(
        f"metric config has unknown kind {kind!r}; "
        "expected euclidean, hyperbolic, spherical, or custom")
