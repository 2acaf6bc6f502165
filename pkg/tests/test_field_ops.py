import numpy as np
import pytest

from hmlab.errors import ConformabilityError, InvalidFieldError
from hmlab.field import (ComplexField, RealField, laplacian,
                         require_same_grid, wirtinger_dz, wirtinger_dzbar)
from hmlab.grid import unit_disk_grid

from conftest import field_from


def test_field_shape_validation(disk65):
    with pytest.raises(InvalidFieldError):
        ComplexField(disk65, np.zeros((10, 10), dtype=complex), "full")
    with pytest.raises(InvalidFieldError):
        ComplexField(disk65, "not an array", "full")


def test_full_domain_rejects_nan_on_defined_nodes(disk65):
    vals = np.zeros((65, 65), dtype=complex)
    vals[32, 32] = np.nan
    with pytest.raises(InvalidFieldError):
        ComplexField(disk65, vals, "full")
    # same values are fine when declared partial
    f = ComplexField(disk65, vals, "partial")
    assert np.isnan(f.values[32, 32].real)


def test_unknown_domain_tag_rejected(disk65):
    with pytest.raises(InvalidFieldError):
        RealField(disk65, np.zeros((65, 65)), "everywhere")


def test_wirtinger_exact_on_quadratics(disk65):
    # centered differences are exact for polynomials of degree <= 2
    z = disk65.nodes_z
    f = field_from(disk65, lambda z: z * z)
    fz, fzb = wirtinger_dz(f), wirtinger_dzbar(f)
    interior = disk65.interior
    assert np.max(np.abs(fz.values[interior] - 2 * z[interior])) < 1e-12
    assert np.max(np.abs(fzb.values[interior])) < 1e-12


def test_wirtinger_separates_conjugate_directions(disk65):
    z = disk65.nodes_z
    f = field_from(disk65, lambda z: z * np.conj(z))
    fz, fzb = wirtinger_dz(f), wirtinger_dzbar(f)
    interior = disk65.interior
    assert np.max(np.abs(fz.values[interior] - np.conj(z[interior]))) < 1e-12
    assert np.max(np.abs(fzb.values[interior] - z[interior])) < 1e-12


def test_wirtinger_antiholomorphic(disk65):
    f = field_from(disk65, np.conj)
    interior = disk65.interior
    assert np.max(np.abs(wirtinger_dz(f).values[interior])) < 1e-12
    assert np.max(np.abs(wirtinger_dzbar(f).values[interior] - 1)) < 1e-12


def test_first_derivative_order_two():
    # measured away from the rim, where centered stencils apply; a
    # non-holomorphic target is needed because the x/y truncation terms
    # cancel on holomorphic data and the stencil looks fourth order there
    errs = []
    for n in (65, 129):
        g = unit_disk_grid(n)
        f = field_from(g, lambda z: np.exp(np.conj(z)))
        fz = wirtinger_dz(f)
        sel = g.interior & (np.abs(g.nodes_z) <= 0.9)
        errs.append(np.max(np.abs(fz.values[sel])))  # exact dz is zero
    order = np.log2(errs[0] / errs[1])
    assert 1.7 <= order <= 2.3


def test_laplacian_exact_on_cubics(disk65):
    f = field_from(disk65, lambda z: z ** 3)
    lap = laplacian(f)
    interior = disk65.interior
    assert lap.domain == "interior"
    assert np.max(np.abs(lap.values[interior])) < 1e-10
    # and matches 4 d2/dz dzbar on a non-harmonic field: |z|^2 -> 4
    f2 = field_from(disk65, lambda z: z * np.conj(z))
    lap2 = laplacian(f2)
    assert np.max(np.abs(lap2.values[interior] - 4.0)) < 1e-10


def test_derivatives_of_partial_fields_propagate_gaps(disk65):
    vals = disk65.nodes_z.astype(complex).copy()
    vals[30:35, 30:35] = np.nan
    f = ComplexField(disk65, vals, "partial")
    fz = wirtinger_dz(f)
    assert fz.domain == "partial"
    # the hole grows by one stencil width and stays NaN
    assert np.all(np.isnan(fz.values[31:34, 31:34].real))
    # far from the hole the derivative is still exact
    assert abs(fz.values[10, 32] - 1.0) < 1e-12


def test_interior_domain_input_gives_partial_derivative(disk65):
    vals = disk65.nodes_z.astype(complex)
    f = ComplexField(disk65, vals, "interior")
    fz = wirtinger_dz(f)
    assert fz.domain == "partial"
    assert np.isfinite(fz.values[32, 32].real)


def test_require_same_grid(disk65):
    g2 = unit_disk_grid(129)
    a = field_from(disk65, lambda z: z)
    b = field_from(g2, lambda z: z)
    with pytest.raises(ConformabilityError):
        require_same_grid(a, b)
    assert require_same_grid(a, a) == disk65


def test_real_field_rejects_complex_values(disk65):
    with pytest.raises((InvalidFieldError, TypeError)):
        RealField(disk65, disk65.nodes_z, "full")
