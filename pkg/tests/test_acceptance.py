"""Acceptance criteria: one test and one printed verdict line per criterion.

Each test prints ``acceptance criterion N (...): PASS|FAIL`` directly to the
terminal (bypassing capture) and then asserts the same condition, so a plain
verbose pytest run shows the verdict of every criterion.
"""

import json

import numpy as np
import pytest

from hmlab.analysis import (beltrami, default_eps_crit, extremum_localization,
                            holomorphy_residual, hopf, identity_residual,
                            jacobian, winding_number, wirtinger_dz)
from hmlab.artifacts import load_json
from hmlab.cli import main
from hmlab.config import validate_against
from hmlab.field import RealField
from hmlab.grid import unit_disk_grid
from hmlab.heinz import alpha_radius, certify_solution, verify_super_average
from hmlab.metric import builtin_metric
from hmlab.solver import poisson_extension

from conftest import field_from, solved_twist

KINDS = ("euclidean", "hyperbolic", "spherical")
CORE_RADIUS = 0.8
RESOLUTIONS = (65, 129, 257)


def _report(capsys, number: int, name: str, ok: bool) -> None:
    with capsys.disabled():
        print(f"\nacceptance criterion {number} ({name}): "
              f"{'PASS' if ok else 'FAIL'}")


def _core_sel(grid, extra=None):
    sel = grid.defined & (np.abs(grid.nodes_z) <= CORE_RADIUS)
    return sel if extra is None else sel & extra


def _sup_abs_mu_core(f):
    vals = np.abs(beltrami(f).values)[_core_sel(f.grid)]
    vals = vals[np.isfinite(vals)]
    return float(np.max(vals))


def test_criterion_1_flat_metric_reproduction(capsys):
    """The flat solve must reproduce the integral-kernel harmonic extension
    to O(h^2) on the measurement core, with second-order decay."""
    diffs = {}
    for n in RESOLUTIONS:
        problem, result = solved_twist("euclidean", n)
        assert result.converged
        ext = poisson_extension(problem.boundary)
        sel = _core_sel(problem.grid)
        diffs[n] = float(np.max(np.abs(result.field.values[sel]
                                       - ext.values[sel])))
    bounds = {n: 5.0 * (2.0 / (n - 1)) ** 2 for n in RESOLUTIONS}
    orders = [float(np.log2(diffs[65] / diffs[129])),
              float(np.log2(diffs[129] / diffs[257]))]
    ok = (all(diffs[n] <= bounds[n] for n in RESOLUTIONS)
          and all(1.7 <= o <= 2.3 for o in orders))
    _report(capsys, 1, "flat-metric reproduction", ok)
    for n in RESOLUTIONS:
        assert diffs[n] <= bounds[n], (n, diffs[n], bounds[n])
    for o in orders:
        assert 1.7 <= o <= 2.3, orders


def test_criterion_2_hopf_holomorphy(capsys):
    """Normalized |dzbar(Hopf)| small at 129^2 and shrinking ~4x per
    refinement for all three builtin densities."""
    results = {}
    for kind in KINDS:
        res = {}
        for n in (129, 257):
            problem, result = solved_twist(kind, n)
            assert result.converged
            res[n] = holomorphy_residual(hopf(result.field, problem.metric))
        results[kind] = (res[129], res[129] / res[257])
    ok = all(r129 <= 1e-2 and 3.0 <= ratio <= 5.0
             for r129, ratio in results.values())
    _report(capsys, 2, "hopf holomorphy under refinement", ok)
    for kind, (r129, ratio) in results.items():
        assert r129 <= 1e-2, (kind, r129)
        assert 3.0 <= ratio <= 5.0, (kind, ratio)


def test_criterion_3_curvature_identity(capsys):
    """lap log|mu| = K rho^2 J: sup defect shrinks ~4x per refinement for
    every builtin density, and vanishes for a flat affine map."""
    ratios = {}
    for kind in KINDS:
        sups = {}
        for n in (129, 257):
            problem, result = solved_twist(kind, n)
            _, sups[n] = identity_residual(result.field, problem.metric)
        ratios[kind] = sups[129] / sups[257]
    grid = unit_disk_grid(129)
    affine = field_from(grid, lambda z: z + 0.3 * np.conj(z))
    _, affine_sup = identity_residual(affine, builtin_metric("euclidean"))
    ok = (all(3.0 <= r <= 5.0 for r in ratios.values())
          and affine_sup <= 1e-10)
    _report(capsys, 3, "curvature identity", ok)
    for kind, r in ratios.items():
        assert 3.0 <= r <= 5.0, (kind, r)
    assert affine_sup <= 1e-10, affine_sup


def test_criterion_4_jacobian_positivity_and_degree(capsys):
    """Degree-1 flat solves keep J > 0 on the core at every resolution and
    wind exactly once about the image of the center region."""
    min_jacs = {}
    for amp in (0.1, 0.3, 0.5):
        for n in RESOLUTIONS:
            problem, result = solved_twist("euclidean", n, amplitude=amp)
            assert result.converged
            jac = jacobian(result.field).values
            sel = _core_sel(problem.grid, problem.grid.interior
                            & np.isfinite(jac))
            min_jacs[(amp, n)] = float(np.min(jac[sel]))
    windings = {}
    for amp in (0.1, 0.3, 0.5):
        _, result = solved_twist("euclidean", 129, amplitude=amp)
        windings[amp] = [winding_number(result.field, 0.0, r)
                         for r in (0.3, 0.5, 0.7)]
    ok = (all(v > 0.0 for v in min_jacs.values())
          and all(w == [1, 1, 1] for w in windings.values()))
    _report(capsys, 4, "jacobian positivity and degree", ok)
    for key, v in min_jacs.items():
        assert v > 0.0, (key, v)
    for amp, w in windings.items():
        assert w == [1, 1, 1], (amp, w)


def test_criterion_5_dilatation_bound(capsys):
    """sup |mu| < 1 on the core for every converged solve in the regression
    set; k_U and the distortion constant K are reported per solve."""
    regression = ([("euclidean", n, a) for a in (0.1, 0.3, 0.5)
                   for n in RESOLUTIONS]
                  + [(k, n, 0.3) for k in ("hyperbolic", "spherical")
                     for n in (65, 129, 257)])
    rows = []
    for kind, n, amp in regression:
        _, result = solved_twist(kind, n, amplitude=amp)
        assert result.converged, (kind, n, amp)
        k_u = _sup_abs_mu_core(result.field)
        big_k = ((1.0 + k_u ** 2) / (1.0 - k_u ** 2)
                 if k_u < 1.0 else float("inf"))
        rows.append((kind, n, amp, k_u, big_k))
    ok = all(k_u < 1.0 for *_x, k_u, _K in rows)
    _report(capsys, 5, "dilatation bound", ok)
    with capsys.disabled():
        for kind, n, amp, k_u, big_k in rows:
            print(f"  {kind:>10} n={n:<3} amplitude={amp}: "
                  f"k_U={k_u:.6f}  K={big_k:.6f}")
    for kind, n, amp, k_u, _K in rows:
        assert k_u < 1.0, (kind, n, amp, k_u)


def test_criterion_6_extremum_localization(capsys):
    """|mu| attains its max on the rim of every measurement subdisk for the
    positively curved target, its min on the rim (or at noise level) for
    the negatively curved one."""
    radii = (0.5, 0.7, 0.8)
    _, sph = solved_twist("spherical", 129)
    mu_sph = RealField(sph.field.grid, np.abs(beltrami(sph.field).values),
                       "partial")
    sph_ok, sph_detail = True, []
    for r in radii:
        diag = extremum_localization(mu_sph, r, name="abs_mu")
        good = (not diag.degenerate
                and diag.max_classification == "boundary")
        sph_ok &= good
        sph_detail.append((r, diag.max_classification))

    _, hyp = solved_twist("hyperbolic", 129)
    mu_hyp = RealField(hyp.field.grid, np.abs(beltrami(hyp.field).values),
                       "partial")
    eps = default_eps_crit(wirtinger_dz(hyp.field))
    hyp_ok, hyp_detail = True, []
    for r in radii:
        diag = extremum_localization(mu_hyp, r, name="abs_mu")
        good = (not diag.degenerate
                and (diag.min_classification == "boundary"
                     or diag.min_value <= 10.0 * eps))
        hyp_ok &= good
        hyp_detail.append((r, diag.min_classification, diag.min_value))

    ok = sph_ok and hyp_ok
    _report(capsys, 6, "extremum localization", ok)
    assert sph_ok, sph_detail
    assert hyp_ok, (hyp_detail, eps)


def test_criterion_7_super_averaging(capsys):
    """Certificate radius formula, the two calibration fields, and the
    applied chain on all three solved metrics."""
    alpha_ok = alpha_radius(np.e, 1.0) == 0.25

    grid = unit_disk_grid(129)
    ones = RealField(grid, np.where(grid.defined, 1.0, np.nan), "full")
    cert1 = verify_super_average(ones, 0.0, C=0.0, d=1.0)
    const_ok = (cert1.mean_value_pass
                and cert1.u_center == pytest.approx(1.0, rel=1e-12)
                and cert1.disk_mean == pytest.approx(1.0, rel=1e-12))

    parab = RealField(grid, np.where(grid.defined,
                                     1.0 - np.abs(grid.nodes_z) ** 2, np.nan),
                      "full")
    cert2 = verify_super_average(parab, 0.0, C=0.0, d=1.0)
    parab_ok = (abs(cert2.disk_mean - 0.875) <= 1e-4
                and cert2.mean_value_pass)

    chain = {}
    for kind in KINDS:
        _, result = solved_twist(kind, 129)
        _cert, positive = certify_solution(result.field)
        chain[kind] = positive
    chain_ok = all(chain.values())

    ok = alpha_ok and const_ok and parab_ok and chain_ok
    _report(capsys, 7, "super-averaging certificates", ok)
    assert alpha_ok
    assert const_ok, cert1
    assert parab_ok, cert2.disk_mean
    assert chain_ok, chain


def test_criterion_8_winding_numbers(capsys):
    grid = unit_disk_grid(129)
    cases = [(lambda z: z, 1),
             (lambda z: z ** 3, 3),
             (lambda z: z ** 2 + 0.4 * np.conj(z) ** 2, 2)]
    results = []
    for fn, expected in cases:
        f = field_from(grid, fn)
        got = [winding_number(f, 0.0, r) for r in (0.3, 0.5, 0.7)]
        results.append((expected, got))
    ok = all(got == [exp] * 3 for exp, got in results)
    _report(capsys, 8, "winding numbers", ok)
    for exp, got in results:
        assert got == [exp] * 3, (exp, got)


JSON_SCHEMAS = {
    "summary.json": "summary",
    "analysis.json": "analysis",
    "identity.json": "identity",
    "heinz.json": "heinz",
    "report.json": "report",
    "convergence.json": "convergence",
}

CHAIN_ARTIFACTS = ("summary.json", "field.csv", "analysis.json", "mu.csv",
                   "jacobian.csv", "distortion.csv", "hopf.csv",
                   "identity.json", "heinz.json", "report.json")


def _run_chain(cfg_path, out):
    assert main(["solve", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert main(["analyze", "--out", str(out)]) == 0
    assert main(["verify-identity", "--config", str(cfg_path),
                 "--out", str(out)]) == 0
    assert main(["verify-heinz", "--config", str(cfg_path),
                 "--out", str(out)]) == 0
    assert main(["report", "--out", str(out)]) == 0


def test_criterion_9_artifact_determinism(tmp_path, capsys):
    """Identical runs write byte-identical artifacts, all schema-valid."""
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({
        "grid": {"domain": "disk", "n": 65},
        "metric": {"kind": "hyperbolic"},
        "boundary": {"type": "twist", "amplitude": 0.3},
    }))
    study_cfg = tmp_path / "study.json"
    study_cfg.write_text(json.dumps({
        "grid": {"domain": "disk", "n": 33},
        "metric": {"kind": "euclidean"},
        "boundary": {"type": "twist", "amplitude": 0.3},
    }))

    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        _run_chain(cfg_path, out)
        assert main(["convergence-study", "--config", str(study_cfg),
                     "--out", str(out / "study")]) == 0

    identical, schema_valid = True, True
    detail = []
    for name in CHAIN_ARTIFACTS + ("study/convergence.json",
                                   "study/convergence.csv"):
        ba = (out_a / name).read_bytes()
        bb = (out_b / name).read_bytes()
        if ba != bb:
            identical = False
            detail.append(name)
    for name, schema in JSON_SCHEMAS.items():
        path = out_a / name if name != "convergence.json" \
            else out_a / "study" / name
        try:
            validate_against(schema, load_json(str(path)))
        except Exception as exc:   # noqa: BLE001 - verdict accounting
            schema_valid = False
            detail.append(f"{name}: {exc}")

    ok = identical and schema_valid
    _report(capsys, 9, "artifact determinism and schemas", ok)
    assert identical, detail
    assert schema_valid, detail
