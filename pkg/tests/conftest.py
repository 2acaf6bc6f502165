"""Shared fixtures: memoized solves so expensive runs happen once per session."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

from hmlab.boundary import twist_map
from hmlab.grid import unit_disk_grid
from hmlab.metric import builtin_metric
from hmlab.solver import HarmonicProblem, SolverConfig, solve_tension

_SOLVE_CACHE: dict = {}


def solved_twist(kind: str, n: int, amplitude: float = 0.3):
    """(problem, result) for a twist boundary under a builtin metric."""
    key = (kind, n, amplitude)
    if key not in _SOLVE_CACHE:
        grid = unit_disk_grid(n)
        problem = HarmonicProblem(grid, builtin_metric(kind),
                                  twist_map(grid, amplitude), SolverConfig())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            _SOLVE_CACHE[key] = (problem, solve_tension(problem))
    return _SOLVE_CACHE[key]


@pytest.fixture(scope="session")
def twist_solver():
    return solved_twist


def field_from(grid, fn, domain="full"):
    """ComplexField built by evaluating a callable on the grid nodes."""
    from hmlab.field import ComplexField

    vals = np.asarray(fn(grid.nodes_z), dtype=complex)
    return ComplexField(grid, vals, domain)


@pytest.fixture()
def disk65():
    return unit_disk_grid(65)


@pytest.fixture()
def disk129():
    return unit_disk_grid(129)
