import numpy as np
import pytest

from hmlab.errors import GridError
from hmlab.grid import rectangle_grid, unit_disk_grid


def test_disk_grid_geometry():
    g = unit_disk_grid(65)
    assert g.nx == g.ny == 65
    assert g.h == pytest.approx(2.0 / 64)
    assert g.origin == (-1.0, -1.0)
    assert abs(g.nodes_z[32, 32]) == 0.0


def test_disk_masks_partition_and_nest():
    g = unit_disk_grid(65)
    interior, boundary, defined = g.interior, g.boundary, g.defined
    assert not np.any(interior & boundary)
    assert np.array_equal(defined, interior | boundary)
    # every interior node keeps its 4-neighbor stencil inside the defined set
    for di, dj in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        shifted = np.roll(defined, (di, dj), axis=(0, 1))
        assert np.all(shifted[interior])
    # all interior nodes are strictly inside the unit circle
    assert np.all(np.abs(g.nodes_z[interior]) < 1.0)


def test_disk_counts_scale_like_area_and_perimeter():
    g1, g2 = unit_disk_grid(65), unit_disk_grid(129)
    assert 3.6 < g1.n_interior * g1.h ** 2 / np.pi * 4 < 4.2
    assert g2.n_interior / g1.n_interior == pytest.approx(4.0, rel=0.05)
    assert g2.n_boundary / g1.n_boundary == pytest.approx(2.0, rel=0.1)


def test_rectangle_grid_edges_are_boundary():
    g = rectangle_grid(11, 9, (0.0, 0.0), 0.1)
    assert g.nx == 11 and g.ny == 9
    assert np.all(g.boundary[0]) and np.all(g.boundary[-1])
    assert np.all(g.boundary[:, 0]) and np.all(g.boundary[:, -1])
    assert np.all(g.interior[1:-1, 1:-1])
    assert g.n_interior == 9 * 7


def test_too_small_grids_rejected():
    with pytest.raises(GridError):
        unit_disk_grid(7)
    with pytest.raises(GridError):
        rectangle_grid(5, 20, (0.0, 0.0), 0.1)
    with pytest.raises(GridError):
        rectangle_grid(11, 11, (0.0, 0.0), -0.1)


def test_grid_equality_is_structural():
    a, b, c = unit_disk_grid(65), unit_disk_grid(65), unit_disk_grid(129)
    assert a == b and hash(a) == hash(b)
    assert a != c
    assert a != rectangle_grid(65, 65, (-1.0, -1.0), a.h)


def test_describe_names_the_domain():
    d = unit_disk_grid(65).describe()
    assert d["domain"] == "disk"
    assert d["nx"] == 65 and d["h"] == pytest.approx(2.0 / 64)
    assert d["n_interior"] > 0 and d["n_boundary"] > 0


def test_mask_is_read_only():
    g = unit_disk_grid(65)
    with pytest.raises(ValueError):
        g.mask[0, 0] = 0
