"""Command-line front end.

Subcommands::

    hmlab solve             --config C --out DIR
    hmlab analyze           --out DIR [--config C] [--core-radius R] [--mu-floor X]
    hmlab verify-identity   --config C --out DIR [--mu-floor X]
    hmlab verify-heinz      --config C --out DIR [--center RE,IM]
                            [--heinz-c C] [--floor F] [--core-radius R]
    hmlab convergence-study --config C --out DIR [--levels N]
    hmlab report            --out DIR

Exit codes: 0 success, 1 invalid input (bad config, schema violation,
missing artifacts), 2 numerical failure (stagnation, tampered data,
failed invariant), 3 out-of-range metric evaluation.  Failures print a
one-object JSON error report to stdout.

``HMLAB_THREADS`` caps BLAS/OpenMP worker threads; it is applied before
any numerical module is imported, which is why imports here are local.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS")

HOPF_RESIDUAL_THRESHOLD = 1e-2
MIN_PRINCIPLE_EPS_FACTOR = 10.0


def _apply_thread_cap() -> None:
    cap = os.environ.get("HMLAB_THREADS")
    if not cap:
        return
    try:
        value = int(cap)
    except ValueError:
        raise SystemExit(f"HMLAB_THREADS must be an integer, got {cap!r}")
    if value < 1:
        raise SystemExit(f"HMLAB_THREADS must be >= 1, got {value}")
    for var in _THREAD_VARS:
        os.environ[var] = str(value)


def _parse_center(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"expected RE,IM (two comma-separated numbers), got {text!r}")
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected RE,IM (two comma-separated numbers), got {text!r}")


def _grid_from_describe(g: dict):
    """Rebuild the grid recorded in a summary document."""
    from .errors import InputError
    from .grid import rectangle_grid, unit_disk_grid

    try:
        if g["domain"] == "disk":
            grid = unit_disk_grid(int(g["nx"]))
        elif g["domain"] == "rectangle":
            ox, oy = g["origin"]
            grid = rectangle_grid(int(g["nx"]), int(g["ny"]),
                                  (float(ox), float(oy)), float(g["h"]))
        else:
            raise InputError(f"summary names unknown domain {g['domain']!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"summary grid section is malformed: {exc}") from None
    if abs(grid.h - float(g["h"])) > 1e-12 * max(1.0, grid.h):
        raise InputError("summary grid spacing does not match its node counts")
    return grid


def _boundary_degree(bcfg: dict) -> int:
    if bcfg.get("type") == "twist":
        return 1
    return int(bcfg.get("degree", 1))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    from .artifacts import dump_json, jsonable, write_complex_csv
    from .config import problem_from_file, validate_against

    cfg, problem = problem_from_file(args.config)
    from .solver import solve_tension
    result = solve_tension(problem)

    os.makedirs(args.out, exist_ok=True)
    summary = {
        "format": "hmlab/summary/1",
        "config": cfg,
        "grid": problem.grid.describe(),
        "converged": result.converged,
        "iterations": result.iterations,
        "final_residual": result.residual_history[-1],
        "energy": result.energy_history[-1],
        "residual_history": list(result.residual_history),
        "energy_history": list(result.energy_history),
        "meta": result.meta,
    }
    payload = jsonable(summary)
    validate_against("summary", payload)
    dump_json(os.path.join(args.out, "summary.json"), payload)
    write_complex_csv(os.path.join(args.out, "field.csv"), result.field)
    print(f"solve: converged={result.converged} iterations={result.iterations} "
          f"final_residual={result.residual_history[-1]:.3e}")
    if not result.converged:
        print(json.dumps({"error": "NotConverged",
                          "message": "outer iteration budget exhausted",
                          "exit_code": 2}, sort_keys=True))
        return 2
    return 0


def _load_solve_artifacts(out_dir: str):
    from .artifacts import load_json, read_complex_csv
    from .config import validate_against

    summary = load_json(os.path.join(out_dir, "summary.json"), "solve summary")
    validate_against("summary", summary)
    grid = _grid_from_describe(summary["grid"])
    field = read_complex_csv(os.path.join(out_dir, "field.csv"), grid,
                             "solution table")
    return summary, grid, field


def cmd_analyze(args) -> int:
    from .analysis import assemble_report
    from .artifacts import dump_json, jsonable, write_complex_csv, write_real_csv
    from .config import load_config, validate_against
    from .metric import metric_from_config

    summary, _, field = _load_solve_artifacts(args.out)
    cfg = load_config(args.config) if args.config else summary["config"]
    metric = metric_from_config(cfg["metric"])

    rep = assemble_report(field, metric, core_radius=args.core_radius,
                          mu_floor=args.mu_floor)
    lewy_applicable = (cfg["metric"]["kind"] == "euclidean"
                       and _boundary_degree(cfg["boundary"]) == 1)
    invariants = {
        "mu_bound_ok": bool(rep.k_core < 1.0),
        "lewy_applicable": lewy_applicable,
        "lewy_ok": bool(rep.min_jacobian_core > 0.0) if lewy_applicable else None,
    }
    hard_failures = []
    if not invariants["mu_bound_ok"]:
        hard_failures.append(
            f"sup |mu| on the core reached {rep.k_core:.6g} >= 1")
    if invariants["lewy_ok"] is False:
        hard_failures.append(
            f"jacobian fails positivity on the core: min {rep.min_jacobian_core:.6g}")

    payload = jsonable({
        "format": "hmlab/analysis/1",
        "grid": field.grid.describe(),
        "report": rep.summary(),
        "invariants": invariants,
        "hard_failures": hard_failures,
    })
    validate_against("analysis", payload)
    dump_json(os.path.join(args.out, "analysis.json"), payload)
    write_complex_csv(os.path.join(args.out, "mu.csv"), rep.mu)
    write_real_csv(os.path.join(args.out, "jacobian.csv"), rep.jacobian)
    write_real_csv(os.path.join(args.out, "distortion.csv"), rep.distortion)
    write_complex_csv(os.path.join(args.out, "hopf.csv"), rep.hopf)
    print(f"analyze: hopf_residual={rep.hopf_residual:.3e} "
          f"k_core={rep.k_core:.6g} min_jacobian_core={rep.min_jacobian_core:.6g} "
          f"hard_failures={len(hard_failures)}")
    if hard_failures:
        print(json.dumps({"error": "InvariantFailure",
                          "message": "; ".join(hard_failures),
                          "exit_code": 2}, sort_keys=True))
        return 2
    return 0


def cmd_verify_identity(args) -> int:
    import numpy as np

    from .analysis import identity_residual
    from .artifacts import dump_json, jsonable
    from .config import problem_from_file, validate_against
    from .errors import InsufficientSupportError
    from .solver import solve_tension

    cfg, problem = problem_from_file(args.config)
    result = solve_tension(problem)
    exit_code = 0
    try:
        res_field, sup = identity_residual(result.field, problem.metric,
                                           mu_floor=args.mu_floor)
        qualifying = int(np.isfinite(res_field.values).sum())
        note = "ok"
    except InsufficientSupportError as exc:
        sup, qualifying, note = None, 0, str(exc)
        exit_code = 2

    os.makedirs(args.out, exist_ok=True)
    payload = jsonable({
        "format": "hmlab/identity/1",
        "grid": problem.grid.describe(),
        "config": cfg,
        "sup_residual": sup,
        "qualifying_nodes": qualifying,
        "mu_floor": args.mu_floor,
        "core_units": 2.0,
        "note": note,
    })
    validate_against("identity", payload)
    dump_json(os.path.join(args.out, "identity.json"), payload)
    sup_text = "n/a" if sup is None else f"{sup:.6g}"
    print(f"verify-identity: sup_residual={sup_text} "
          f"qualifying_nodes={qualifying} note={note}")
    return exit_code


def cmd_verify_heinz(args) -> int:
    from .artifacts import dump_json, jsonable
    from .config import problem_from_file, validate_against
    from .heinz import certify_solution
    from .solver import solve_tension

    cfg, problem = problem_from_file(args.config)
    result = solve_tension(problem)
    cert, positivity = certify_solution(
        result.field, center=args.center, C=args.heinz_c,
        core_radius=args.core_radius, floor=args.floor)

    os.makedirs(args.out, exist_ok=True)
    payload = jsonable({
        "format": "hmlab/heinz/1",
        "grid": problem.grid.describe(),
        "config": cfg,
        "field": "-log|mu|",
        "floor": args.floor,
        "c_source": "override" if args.heinz_c is not None else "estimated",
        "certificate": cert.describe(),
        "positivity": positivity,
    })
    validate_against("heinz", payload)
    dump_json(os.path.join(args.out, "heinz.json"), payload)
    print(f"verify-heinz: alpha={cert.alpha:.6g} C={cert.C:.6g} "
          f"mean_value_pass={cert.mean_value_pass} positivity={positivity}")
    return 0


def _order(coarse: float | None, fine: float | None) -> float | None:
    import numpy as np

    if coarse is None or fine is None or coarse <= 0 or fine <= 0:
        return None
    return float(np.log2(coarse / fine))


def cmd_convergence(args) -> int:
    import copy

    import numpy as np

    from .analysis import holomorphy_residual, hopf, identity_residual
    from .artifacts import dump_json, jsonable
    from .config import build_problem, load_config, validate_against
    from .errors import HmlabError, InputError, InsufficientSupportError
    from .solver import solve_tension

    cfg = load_config(args.config)
    if cfg["grid"]["domain"] != "disk":
        raise InputError("convergence studies are defined on the disk domain")
    if args.levels < 3:
        raise InputError(f"a study needs at least 3 levels, got {args.levels}")
    n0 = int(cfg["grid"]["n"])

    rows = []
    fields = []          # (grid, values) per successful level, else None
    prev = {"self": None, "hopf": None, "identity": None}
    any_failed = False
    for level in range(args.levels):
        n = (n0 - 1) * (1 << level) + 1
        level_cfg = copy.deepcopy(cfg)
        level_cfg["grid"]["n"] = n
        row = {"level": level, "n": n, "h": 2.0 / (n - 1), "status": "ok",
               "self_diff": None, "hopf_residual": None,
               "identity_residual": None, "order_self": None,
               "order_hopf": None, "order_identity": None}
        try:
            problem = build_problem(level_cfg)
            result = solve_tension(problem)
            f = result.field
            row["hopf_residual"] = holomorphy_residual(hopf(f, problem.metric))
            try:
                _, sup = identity_residual(f, problem.metric,
                                           mu_floor=args.mu_floor)
                row["identity_residual"] = sup
            except InsufficientSupportError:
                row["identity_residual"] = None
            if fields and fields[-1] is not None:
                cgrid, cvals = fields[-1]
                sub = f.values[::2, ::2]
                match = (cgrid.defined
                         & (np.abs(cgrid.nodes_z) <= 0.8))
                row["self_diff"] = float(
                    np.max(np.abs(sub[match] - cvals[match])))
            fields.append((problem.grid, f.values))
        except HmlabError as exc:
            row["status"] = "failed"
            row["error"] = f"{type(exc).__name__}: {exc}"
            fields.append(None)
            any_failed = True
        row["order_self"] = _order(prev["self"], row["self_diff"])
        row["order_hopf"] = _order(prev["hopf"], row["hopf_residual"])
        row["order_identity"] = _order(prev["identity"],
                                       row["identity_residual"])
        prev = {"self": row["self_diff"], "hopf": row["hopf_residual"],
                "identity": row["identity_residual"]}
        rows.append(row)
        print(f"convergence-study: level={level} n={n} status={row['status']}")

    orders = {
        "solution": next((r["order_self"] for r in reversed(rows)
                          if r["order_self"] is not None), None),
        "hopf": next((r["order_hopf"] for r in reversed(rows)
                      if r["order_hopf"] is not None), None),
        "identity": next((r["order_identity"] for r in reversed(rows)
                          if r["order_identity"] is not None), None),
    }
    os.makedirs(args.out, exist_ok=True)
    payload = jsonable({
        "format": "hmlab/convergence/1",
        "config": cfg,
        "status": "partial" if any_failed else "ok",
        "rows": rows,
        "orders": orders,
    })
    validate_against("convergence", payload)
    dump_json(os.path.join(args.out, "convergence.json"), payload)

    columns = ["level", "n", "h", "status", "self_diff", "hopf_residual",
               "identity_residual", "order_self", "order_hopf",
               "order_identity"]
    with open(os.path.join(args.out, "convergence.csv"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for col in columns:
                v = row.get(col)
                if v is None:
                    cells.append("")
                elif isinstance(v, float):
                    cells.append(format(v, ".17g"))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")
    return 2 if any_failed else 0


def cmd_report(args) -> int:
    from .artifacts import dump_json, jsonable, load_json, read_complex_csv
    from .config import validate_against
    from .errors import InputError, InvalidFieldError

    missing = [name for name in ("summary.json", "analysis.json", "field.csv")
               if not os.path.exists(os.path.join(args.out, name))]
    if missing:
        raise InputError(f"missing artifacts in {args.out!r}: {missing}")

    summary = load_json(os.path.join(args.out, "summary.json"), "solve summary")
    validate_against("summary", summary)
    analysis = load_json(os.path.join(args.out, "analysis.json"),
                         "analysis report")
    validate_against("analysis", analysis)

    notes = []
    field_ok = True
    try:
        grid = _grid_from_describe(summary["grid"])
        read_complex_csv(os.path.join(args.out, "field.csv"), grid,
                         "solution table")
    except InvalidFieldError as exc:
        field_ok = False
        notes.append(f"solution table is invalid: {exc}")

    rep = analysis["report"]
    inv = analysis["invariants"]
    kind = summary["config"]["metric"]["kind"]
    eps_crit = rep["conventions"].get("eps_crit")

    def field_check(value: str) -> str:
        return value if field_ok else "invalid-input"

    checks = {"converged": "pass" if summary["converged"] else "fail"}
    checks["mu_bound"] = field_check(
        "pass" if inv["mu_bound_ok"] else "fail")
    if inv["lewy_applicable"]:
        checks["lewy_positivity"] = field_check(
            "pass" if inv["lewy_ok"] else "fail")
    else:
        checks["lewy_positivity"] = field_check("not-applicable")
    hopf_res = rep["hopf_residual"]
    checks["hopf_holomorphy"] = field_check(
        "pass" if (hopf_res is not None
                   and hopf_res <= HOPF_RESIDUAL_THRESHOLD) else "fail")
    checks["curvature_identity"] = field_check(
        "pass" if rep["identity_note"] == "ok"
        and rep["identity_residual"] is not None else "not-applicable")

    extremum = "not-applicable"
    if kind in ("spherical", "hyperbolic"):
        verdicts = []
        for entry in rep["extrema"]:
            if entry.get("degenerate"):
                verdicts.append(True)
            elif kind == "spherical":
                verdicts.append(entry["max_classification"] == "boundary")
            else:
                on_rim = entry["min_classification"] == "boundary"
                tiny = (eps_crit is not None
                        and entry["min_value"] is not None
                        and entry["min_value"]
                        <= MIN_PRINCIPLE_EPS_FACTOR * eps_crit)
                verdicts.append(on_rim or tiny)
        extremum = "pass" if verdicts and all(verdicts) else "fail"
    checks["extremum_localization"] = field_check(extremum)

    heinz_path = os.path.join(args.out, "heinz.json")
    heinz = None
    if os.path.exists(heinz_path):
        heinz = load_json(heinz_path, "super-averaging certificate")
        validate_against("heinz", heinz)
        checks["super_averaging"] = "pass" if heinz["positivity"] else "fail"
    else:
        checks["super_averaging"] = "missing"

    identity_path = os.path.join(args.out, "identity.json")
    identity = None
    if os.path.exists(identity_path):
        identity = load_json(identity_path, "identity check")
        validate_against("identity", identity)

    convergence_path = os.path.join(args.out, "convergence.json")
    convergence = None
    if os.path.exists(convergence_path):
        convergence = load_json(convergence_path, "refinement study")
        validate_against("convergence", convergence)

    solve_section = {k: summary[k] for k in
                     ("config", "grid", "converged", "iterations",
                      "final_residual", "energy")}
    payload = jsonable({
        "format": "hmlab/report/1",
        "checks": checks,
        "sections": {
            "solve": solve_section,
            "analysis": {"report": rep, "invariants": inv},
            "identity": identity,
            "heinz": heinz,
            "convergence": convergence,
        },
        "notes": notes,
    })
    validate_against("report", payload)
    dump_json(os.path.join(args.out, "report.json"), payload)

    ordered = ["converged", "mu_bound", "lewy_positivity", "hopf_holomorphy",
               "curvature_identity", "extremum_localization",
               "super_averaging"]
    print("report: " + " ".join(f"{k}={checks[k]}" for k in ordered))
    if not field_ok or "fail" in checks.values():
        return 2
    return 0


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmlab",
        description="Solve and verify harmonic maps with a conformal "
                    "target metric on planar grids.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True,
                           help="problem configuration JSON")
        p.add_argument("--out", required=True, help="artifact directory")

    p = sub.add_parser("solve", help="solve one problem, write field + summary")
    add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("analyze",
                       help="diagnostics for a solved field in --out")
    p.add_argument("--config", help="override the metric recorded in the "
                                    "solve summary")
    p.add_argument("--out", required=True, help="artifact directory")
    p.add_argument("--core-radius", type=float, default=0.8,
                   help="radius of the measurement core (default 0.8)")
    p.add_argument("--mu-floor", type=float, default=0.01,
                   help="|mu| floor for the curvature identity (default 0.01)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify-identity",
                       help="solve, then check the curvature identity")
    add_common(p)
    p.add_argument("--mu-floor", type=float, default=0.01,
                   help="|mu| floor for qualifying nodes (default 0.01)")
    p.set_defaults(func=cmd_verify_identity)

    p = sub.add_parser("verify-heinz",
                       help="solve, then certify super-averaging of -log|mu|")
    add_common(p)
    p.add_argument("--center", type=_parse_center, default=None,
                   metavar="RE,IM", help="disk center (default: automatic)")
    p.add_argument("--heinz-c", type=float, default=None,
                   help="explicit inequality constant (default: estimated)")
    p.add_argument("--floor", type=float, default=0.0,
                   help="ignore nodes with u <= floor when estimating C")
    p.add_argument("--core-radius", type=float, default=0.8,
                   help="measurement core radius (default 0.8)")
    p.set_defaults(func=cmd_verify_heinz)

    p = sub.add_parser("convergence-study",
                       help="re-solve on doubled grids, tabulate orders")
    add_common(p)
    p.add_argument("--levels", type=int, default=3,
                   help="number of refinement levels (>= 3, default 3)")
    p.add_argument("--mu-floor", type=float, default=0.01,
                   help="|mu| floor for the identity column (default 0.01)")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("report",
                       help="consolidate artifacts in --out into report.json")
    p.add_argument("--out", required=True, help="artifact directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    from .errors import HmlabError
    try:
        return args.func(args)
    except HmlabError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                          "exit_code": exc.exit_code}, sort_keys=True))
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
