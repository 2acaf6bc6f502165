"""Exception taxonomy.

Exit-code contract for the CLI: 0 success, 1 input/config, 2 numerical,
3 metric-range violation. Every exception carries its exit code so the CLI
needs no per-type tables.
"""

from __future__ import annotations


class HmlabError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class InputError(HmlabError):
    """Bad configuration, file, or argument (CLI exit 1)."""

    exit_code = 1


class ConfigError(InputError):
    pass


class GridError(InputError):
    pass


class ConformabilityError(InputError):
    """Fields on different grids were mixed."""


class UnsupportedDomainError(InputError):
    pass


class BoundaryDataError(InputError):
    """Boundary samples are invalid (non-injective, wrong degree, out of metric range)."""


class NumericalError(HmlabError):
    """Numerical failure (CLI exit 2)."""

    exit_code = 2


class InvalidFieldError(NumericalError):
    """Non-finite values where the field must be defined."""


class LinearSolveError(NumericalError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class StagnationError(NumericalError):
    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class InsufficientSupportError(NumericalError):
    """Too few qualifying nodes for a statistic to mean anything."""


class DegenerateCircleError(NumericalError):
    """Winding circle passes through (numerically) zero modulus."""


class UnresolvedWindingError(NumericalError):
    """Argument-increment sum does not settle near an integer."""


class DiskResolutionError(NumericalError):
    """Averaging disk is too small for the grid (alpha < 3h)."""


class RangeViolationError(HmlabError):
    """Iterate or field value left the metric's valid region (CLI exit 3)."""

    exit_code = 3

    def __init__(self, message: str, node: complex | None = None,
                 value: complex | None = None):
        super().__init__(message)
        self.node = node
        self.value = value
