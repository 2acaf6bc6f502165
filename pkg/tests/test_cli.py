"""End-to-end command-line runs: artifacts, exit codes, determinism."""

import json
import os
import shutil

import numpy as np
import pytest

from hmlab.artifacts import load_json
from hmlab.cli import build_parser, main
from hmlab.config import validate_against

HYP_CFG = {
    "grid": {"domain": "disk", "n": 65},
    "metric": {"kind": "hyperbolic"},
    "boundary": {"type": "twist", "amplitude": 0.3},
}


@pytest.fixture(scope="module")
def chain(tmp_path_factory):
    """One full artifact chain: solve, analyze, identity, certificate."""
    root = tmp_path_factory.mktemp("cli_chain")
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(HYP_CFG))
    out = root / "run"
    assert main(["solve", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert main(["analyze", "--out", str(out)]) == 0
    assert main(["verify-identity", "--config", str(cfg_path),
                 "--out", str(out)]) == 0
    assert main(["verify-heinz", "--config", str(cfg_path),
                 "--out", str(out)]) == 0
    return {"root": root, "cfg_path": cfg_path, "out": out}


def test_solve_artifacts(chain):
    out = chain["out"]
    summary = load_json(str(out / "summary.json"))
    validate_against("summary", summary)
    assert summary["converged"] is True
    assert summary["final_residual"] <= 1e-8
    assert summary["meta"]["metric"]["kind"] == "hyperbolic"
    assert (out / "field.csv").exists()


def test_analyze_artifacts(chain):
    out = chain["out"]
    analysis = load_json(str(out / "analysis.json"))
    validate_against("analysis", analysis)
    assert analysis["invariants"]["mu_bound_ok"] is True
    assert analysis["invariants"]["lewy_applicable"] is False
    assert analysis["invariants"]["lewy_ok"] is None
    assert analysis["hard_failures"] == []
    assert analysis["report"]["hopf_residual"] < 1e-2
    for name in ("mu.csv", "jacobian.csv", "distortion.csv", "hopf.csv"):
        assert (out / name).exists()


def test_identity_artifact(chain):
    doc = load_json(str(chain["out"] / "identity.json"))
    validate_against("identity", doc)
    assert doc["note"] == "ok"
    assert doc["sup_residual"] is not None
    assert doc["qualifying_nodes"] >= 10


def test_heinz_artifact(chain):
    doc = load_json(str(chain["out"] / "heinz.json"))
    validate_against("heinz", doc)
    assert doc["c_source"] == "estimated"
    assert doc["positivity"] is True
    assert doc["certificate"]["alpha"] > 0


def test_report_all_pass(chain, capfd):
    out = chain["out"]
    assert main(["report", "--out", str(out)]) == 0
    captured = capfd.readouterr().out
    assert "converged=pass" in captured
    report = load_json(str(out / "report.json"))
    validate_against("report", report)
    checks = report["checks"]
    assert checks["converged"] == "pass"
    assert checks["mu_bound"] == "pass"
    assert checks["lewy_positivity"] == "not-applicable"
    assert checks["hopf_holomorphy"] == "pass"
    assert checks["curvature_identity"] == "pass"
    assert checks["extremum_localization"] == "pass"
    assert checks["super_averaging"] == "pass"
    assert report["sections"]["heinz"] is not None
    assert report["sections"]["convergence"] is None


def test_rerun_is_byte_identical(chain, tmp_path):
    out2 = tmp_path / "rerun"
    assert main(["solve", "--config", str(chain["cfg_path"]),
                 "--out", str(out2)]) == 0
    assert main(["analyze", "--out", str(out2)]) == 0
    for name in ("summary.json", "field.csv", "analysis.json", "mu.csv",
                 "hopf.csv"):
        a = (chain["out"] / name).read_bytes()
        b = (out2 / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"


def test_analyze_metric_override(chain, tmp_path):
    work = tmp_path / "override"
    work.mkdir()
    for name in ("summary.json", "field.csv"):
        shutil.copy(chain["out"] / name, work / name)
    alt = tmp_path / "euclid.json"
    alt.write_text(json.dumps({**HYP_CFG, "metric": {"kind": "euclidean"}}))
    assert main(["analyze", "--out", str(work), "--config", str(alt),
                 "--core-radius", "0.5"]) == 0
    doc = load_json(str(work / "analysis.json"))
    assert doc["report"]["conventions"]["core_radius"] == 0.5


def test_heinz_override_flags(chain, tmp_path):
    out = tmp_path / "heinz"
    assert main(["verify-heinz", "--config", str(chain["cfg_path"]),
                 "--out", str(out), "--center", "0.1,0.0",
                 "--heinz-c", "2.0"]) == 0
    doc = load_json(str(out / "heinz.json"))
    assert doc["c_source"] == "override"
    assert doc["certificate"]["C"] == 2.0
    assert doc["certificate"]["center_re"] == pytest.approx(0.1)


def test_convergence_study(tmp_path, capfd):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "grid": {"domain": "disk", "n": 33},
        "metric": {"kind": "euclidean"},
        "boundary": {"type": "twist", "amplitude": 0.3},
    }))
    out = tmp_path / "study"
    assert main(["convergence-study", "--config", str(cfg),
                 "--out", str(out)]) == 0
    doc = load_json(str(out / "convergence.json"))
    validate_against("convergence", doc)
    assert doc["status"] == "ok"
    assert [r["n"] for r in doc["rows"]] == [33, 65, 129]
    assert all(r["status"] == "ok" for r in doc["rows"])
    assert 1.5 <= doc["orders"]["solution"] <= 2.5
    csv_lines = (out / "convergence.csv").read_text().splitlines()
    assert csv_lines[0].startswith("level,n,h,status")
    assert len(csv_lines) == 4


def test_convergence_argument_validation(tmp_path, capfd):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "grid": {"domain": "disk", "n": 33},
        "metric": {"kind": "euclidean"},
        "boundary": {"type": "twist", "amplitude": 0.3},
    }))
    rc = main(["convergence-study", "--config", str(cfg),
               "--out", str(tmp_path / "x"), "--levels", "2"])
    assert rc == 1
    err = json.loads(capfd.readouterr().out.strip().splitlines()[-1])
    assert err["error"] == "InputError"


def test_solve_not_converged(tmp_path, capfd):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        **HYP_CFG,
        "solver": {"tol_residual": 1e-14, "max_outer": 1},
    }))
    rc = main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert rc == 2
    lines = capfd.readouterr().out.strip().splitlines()
    err = json.loads(lines[-1])
    assert err["error"] == "NotConverged"
    # the summary is still written for post-mortems
    summary = load_json(str(tmp_path / "o" / "summary.json"))
    assert summary["converged"] is False


def test_solve_range_violation_exit_3(tmp_path, capfd):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "grid": {"domain": "disk", "n": 65},
        "metric": {"kind": "custom", "expression": "1 + 0*abs(w)",
                   "region": "abs(w) > 0.05"},
        "boundary": {"type": "twist", "amplitude": 0.3},
    }))
    rc = main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert rc == 3
    err = json.loads(capfd.readouterr().out.strip().splitlines()[-1])
    assert err["error"] == "RangeViolationError"
    assert err["exit_code"] == 3


def test_analyze_invariant_failure_exit_2(tmp_path, capfd):
    # boundary data whose flat harmonic extension is z + 1.5 conj(z):
    # orientation reversed, |mu| = 1.5 >= 1 on the whole core
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    vals = np.exp(1j * t) + 1.5 * np.exp(-1j * t)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "grid": {"domain": "disk", "n": 33},
        "metric": {"kind": "euclidean"},
        "boundary": {"type": "samples", "theta": t.tolist(),
                     "values_re": vals.real.tolist(),
                     "values_im": vals.imag.tolist(), "degree": -1},
    }))
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    rc = main(["analyze", "--out", str(out)])
    assert rc == 2
    err = json.loads(capfd.readouterr().out.strip().splitlines()[-1])
    assert err["error"] == "InvariantFailure"
    doc = load_json(str(out / "analysis.json"))
    assert doc["invariants"]["mu_bound_ok"] is False
    assert doc["hard_failures"]
    # the consolidated report flags the same failure
    rc = main(["report", "--out", str(out)])
    assert rc == 2
    report = load_json(str(out / "report.json"))
    assert report["checks"]["mu_bound"] == "fail"


def test_report_detects_tampering(chain, tmp_path, capfd):
    work = tmp_path / "tampered"
    work.mkdir()
    for name in ("summary.json", "analysis.json", "field.csv"):
        shutil.copy(chain["out"] / name, work / name)
    lines = (work / "field.csv").read_text().splitlines()
    parts = lines[500].split(",")
    parts[2] = "nan"
    lines[500] = ",".join(parts)
    (work / "field.csv").write_text("\n".join(lines) + "\n")

    rc = main(["report", "--out", str(work)])
    assert rc == 2
    report = load_json(str(work / "report.json"))
    assert report["checks"]["mu_bound"] == "invalid-input"
    assert report["checks"]["hopf_holomorphy"] == "invalid-input"
    assert any("solution table" in note for note in report["notes"])
    capfd.readouterr()

    # analyze refuses the tampered table outright
    rc = main(["analyze", "--out", str(work)])
    assert rc == 2
    err = json.loads(capfd.readouterr().out.strip().splitlines()[-1])
    assert err["error"] == "InvalidFieldError"


def test_report_missing_artifacts(tmp_path, capfd):
    rc = main(["report", "--out", str(tmp_path)])
    assert rc == 1
    err = json.loads(capfd.readouterr().out.strip().splitlines()[-1])
    assert err["error"] == "InputError"
    assert "missing artifacts" in err["message"]


def test_invalid_config_exits_1(tmp_path, capfd):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({**HYP_CFG, "metric": {"kind": "fancy"}}))
    rc = main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert rc == 1
    err = json.loads(capfd.readouterr().out.strip().splitlines()[-1])
    assert err["error"] == "ConfigError"
    assert "metric" in err["message"]


def test_thread_cap(monkeypatch, tmp_path, capfd):
    monkeypatch.setenv("HMLAB_THREADS", "abc")
    with pytest.raises(SystemExit):
        main(["report", "--out", str(tmp_path)])
    monkeypatch.setenv("HMLAB_THREADS", "0")
    with pytest.raises(SystemExit):
        main(["report", "--out", str(tmp_path)])
    monkeypatch.setenv("HMLAB_THREADS", "2")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        monkeypatch.delenv(var, raising=False)
    main(["report", "--out", str(tmp_path)])  # exits 1 (missing artifacts)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        assert os.environ[var] == "2"
    capfd.readouterr()


def test_center_argument_parsing():
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["verify-heinz", "--config", "c", "--out", "o",
                           "--center", "nope"])
    args = parser.parse_args(["verify-heinz", "--config", "c", "--out", "o",
                              "--center", "0.3,-0.25"])
    assert args.center == complex(0.3, -0.25)
