"""Super-averaging certificates and the applied dilatation-positivity chain."""

import numpy as np
import pytest

from hmlab.errors import (DiskResolutionError, InputError,
                          InsufficientSupportError)
from hmlab.field import RealField
from hmlab.grid import unit_disk_grid
from hmlab.heinz import (alpha_radius, certify_solution, estimate_C,
                         log_mu_field, positivity_conclusion,
                         verify_super_average)

from conftest import field_from


def real_field(grid, fn):
    vals = np.where(grid.defined, fn(grid.nodes_z), np.nan)
    return RealField(grid, vals, "full")


def test_alpha_radius_values():
    assert alpha_radius(np.e, 1.0) == 0.25  # the sqrt term exactly
    assert alpha_radius(0.0, 1.0) == 0.5    # distance term when C = 0
    assert alpha_radius(1e-12, 3.0) == 1.5  # tiny C still capped by d/2
    for C, d in ((-1.0, 1.0), (np.inf, 1.0), (1.0, 0.0), (1.0, -2.0),
                 (1.0, np.inf)):
        with pytest.raises(InputError):
            alpha_radius(C, d)


def test_estimate_C_harmonic_like(disk65):
    u = real_field(disk65, lambda z: 1.0 - np.abs(z) ** 2)
    assert estimate_C(u) == 0.0  # lap is -4 < 0 everywhere


def test_estimate_C_cosh(disk65):
    u = real_field(disk65, lambda z: np.cosh(z.real))
    # lap u = u, so the max ratio is 1 and the default headroom makes 1.1
    assert estimate_C(u, region=0.8) == pytest.approx(1.1, abs=1e-2)


def test_estimate_C_validation(disk65):
    u = real_field(disk65, lambda z: 1.0 - np.abs(z) ** 2)
    with pytest.raises(InsufficientSupportError):
        estimate_C(u, floor=2.0)  # u never exceeds the floor
    with pytest.raises(InputError):
        estimate_C(u, region=np.ones((3, 3), dtype=bool))  # wrong mask shape
    neg = real_field(disk65, lambda z: np.abs(z) ** 2 - 0.5)
    with pytest.raises(InputError):
        estimate_C(neg)
    # an explicit mask region works
    mask = np.abs(disk65.nodes_z) <= 0.5
    assert estimate_C(u, region=mask) == 0.0


def test_certificate_on_constant_field(disk129):
    u = real_field(disk129, lambda z: np.ones_like(z.real))
    cert = verify_super_average(u, 0.0, C=0.0, d=1.0)
    assert cert.alpha == 0.5
    assert cert.disk_area == pytest.approx(np.pi * 0.25, rel=1e-12)
    assert cert.disk_integral == pytest.approx(np.pi * 0.25, rel=1e-12)
    assert cert.disk_mean == pytest.approx(1.0, rel=1e-12)
    assert cert.u_center == pytest.approx(1.0, rel=1e-12)
    assert cert.empirical_ratio == pytest.approx(1.0, rel=1e-12)
    # the literal constant asks u(center) >= pi/2 here: reported, not passed
    assert cert.strict_bound == pytest.approx(np.pi / 2, rel=1e-12)
    assert not cert.strict_bound_pass
    assert cert.mean_value_pass
    assert positivity_conclusion(u, cert)
    d = cert.describe()
    assert d["strict_bound_pass"] is False and d["mean_value_pass"] is True


def test_certificate_mean_of_paraboloid(disk129):
    u = real_field(disk129, lambda z: 1.0 - np.abs(z) ** 2)
    cert = verify_super_average(u, 0.0, C=0.0, d=1.0)
    # mean of 1 - r^2 over D(0, 1/2) is 1 - alpha^2/2 = 0.875
    assert cert.disk_mean == pytest.approx(0.875, abs=1e-4)
    assert cert.mean_value_pass
    assert positivity_conclusion(u, cert)


def test_certificate_resolution_guard(disk65):
    u = real_field(disk65, lambda z: np.ones_like(z.real))
    with pytest.raises(DiskResolutionError):
        verify_super_average(u, 0.0, C=1e6, d=1.0)  # alpha ~ 4e-4 << 3h


def test_certificate_rejects_undefined_cells(disk65):
    vals = np.where(disk65.defined, 1.0, np.nan)
    j, i = np.argwhere(np.abs(disk65.nodes_z - 0.25) < disk65.h / 2)[0]
    vals[j, i] = np.nan  # poke a hole inside the certificate disk
    u = RealField(disk65, vals, "partial")
    with pytest.raises(InputError):
        verify_super_average(u, 0.25, C=0.0, d=0.5)


def test_certificate_rejects_negative_field(disk65):
    u = real_field(disk65, lambda z: z.real)
    with pytest.raises(InputError):
        verify_super_average(u, 0.0, C=0.0, d=1.0)


def test_positivity_detects_vanishing_center(disk129):
    u = real_field(disk129, lambda z: np.abs(z) ** 2)
    cert = verify_super_average(u, 0.0, C=0.0, d=1.0)
    # positive mean but u(0) = 0: the conclusion must fail
    assert cert.disk_mean > 1e-3
    assert not positivity_conclusion(u, cert)


def test_log_mu_field(disk65):
    f = field_from(disk65, lambda z: z + 0.3 * np.conj(z))
    u = log_mu_field(f)
    finite = np.isfinite(u.values)
    assert np.allclose(u.values[finite], -np.log(0.3), atol=1e-10)
    # conformal map: |mu| = 0, u undefined everywhere
    u = log_mu_field(field_from(disk65, lambda z: z))
    assert not np.any(np.isfinite(u.values))


@pytest.mark.parametrize("kind", ["euclidean", "hyperbolic", "spherical"])
def test_applied_chain_positivity(twist_solver, kind):
    _, result = twist_solver(kind, 65)
    cert, positive = certify_solution(result.field)
    assert positive
    assert cert.alpha >= 3.0 * result.field.grid.h
    assert cert.d == pytest.approx(1.0 - abs(cert.center))
    assert cert.u_center > 0.0


def test_certify_overrides(twist_solver):
    _, result = twist_solver("euclidean", 65)
    cert, positive = certify_solution(result.field, center=0.1 + 0.0j, C=2.0)
    assert cert.C == 2.0
    assert cert.center == 0.1 + 0.0j
    assert positive
    with pytest.raises(InputError):
        certify_solution(result.field, center=1.5 + 0.0j)
