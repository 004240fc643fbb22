"""
Command-line scenario runner.

``darboux-roll run SCENARIO.json [...] [--out DIR] [--force] [--jobs N]``
    integrate each scenario and write ``trajectory.csv``, ``report.json``
    and ``plot.gp`` into its output directory.
``darboux-roll selftest [--filter NAME] [--mutate]``
    run the acceptance checks and print a pass/fail table.

Exit codes: 0 success, 1 selftest failure, 2 validation error, 3 runtime
singularity abort.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import controllability as ctrb
from .darboux import FrameAngles, RollingRateProfile, VirtualSurfaceInputs, goal_angles, wpps_report
from .errors import ChartSingularity, DarbouxRollError, ScenarioError, StepTooLarge
from .montana import ContactState, SphereGeometry
from .sim import (FIG4_TRIPLES, InputSchedule, Scenario, Trajectory, equivalence_run,
                  fig4_report, fig4_study, integrate, periodicity_report)

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_SINGULAR = 0, 1, 2, 3

CSV_COLUMNS = ("s", "t", "u_s", "v_s", "u_o", "v_o", "psi", "theta", "varphi", "delta",
               "alpha_s", "beta_s", "gamma_s", "heading")

_NUM = {"type": "number"}
_VEC = lambda n: {"type": "array", "items": _NUM, "minItems": n, "maxItems": n}  # noqa: E731
_INPUTS = {
    "type": "object", "additionalProperties": False,
    "properties": {"s": {"type": "number", "minimum": 0}, "alpha_s": _NUM, "beta_s": _NUM,
                   "gamma_s": _NUM},
}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "model": {"enum": ["darboux-s", "darboux-t", "montana-t"]},
        "initial": _VEC(5),
        "inputs": {"oneOf": [_INPUTS, {"type": "array", "items": _INPUTS, "minItems": 1}]},
        "g_f": _NUM,
        "angles": {"type": "object", "additionalProperties": False,
                   "required": ["theta", "varphi"],
                   "properties": {"theta": _NUM, "varphi": _NUM}},
        "rate": {"type": "object", "additionalProperties": False,
                 "properties": {"kind": {"enum": ["constant", "rest_to_rest"]},
                                "delta_max": {"type": "number", "minimum": 0},
                                "duration": {"type": "number", "exclusiveMinimum": 0}}},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "span": {"type": "number", "exclusiveMinimum": 0},
        "step": {"type": "number", "exclusiveMinimum": 0},
        "drift_only": {"type": "boolean"},
        "omega": _VEC(3),
        "full_circle": {"type": "boolean"},
        "plot": {"type": "boolean"},
        "analyses": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "equivalence": {"type": "boolean"},
                "fig4": {"oneOf": [{"type": "boolean"}, {
                    "type": "object", "additionalProperties": False,
                    "properties": {"triples": {"type": "array", "items": _VEC(3), "minItems": 2}}}]},
                "fig5": {"type": "boolean"},
                "ctrb_scan": {
                    "type": "object", "additionalProperties": False,
                    "required": ["theta_plus_varphi", "v_o"],
                    "properties": {"theta_plus_varphi": {"type": "array", "items": _NUM, "minItems": 1},
                                   "v_o": {"type": "array", "items": _NUM, "minItems": 1},
                                   "varphi": _NUM, "psi": _NUM,
                                   "plane": _VEC(2), "u_o": _NUM}},
                "wpps": {"oneOf": [{"type": "boolean"}, {
                    "type": "object", "additionalProperties": False,
                    "properties": {"threshold": {"type": "number", "exclusiveMinimum": 0}}}]},
            },
        },
    },
    "anyOf": [{"required": ["model"]}, {"required": ["analyses"]}],
}

_VALIDATOR = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)


# ---------------------------------------------------------------------------
# scenario files

def _error_key(err) -> str:
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        path = "/".join(str(p) for p in err.absolute_path)
        return ",".join(f"{path}/{k}" if path else k for k in extra)
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate_document(doc) -> None:
    """Schema-check a parsed scenario file; raise ScenarioError listing bad keys."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        keys = sorted({_error_key(e) for e in errors})
        detail = "; ".join(f"{_error_key(e)}: {e.message}" for e in errors)
        raise ScenarioError(f"invalid scenario file (keys: {', '.join(keys)}): {detail}", keys)


def _schedule(items) -> InputSchedule:
    if items is None:
        return InputSchedule()
    items = items if isinstance(items, list) else [items]
    breaks = tuple(float(it.get("s", 0.0)) for it in items)
    values = tuple(VirtualSurfaceInputs(float(it.get("alpha_s", 0.0)), float(it.get("beta_s", 0.0)),
                                        float(it.get("gamma_s", 0.0))) for it in items)
    try:
        return InputSchedule(breaks, values)
    except ValueError as exc:
        raise ScenarioError(str(exc), ["inputs"]) from exc


def scenario_from_document(doc) -> Scenario | None:
    """Build a Scenario from a validated document (``None`` if no model is given)."""
    if "model" not in doc:
        return None
    rate = doc.get("rate", {})
    try:
        rate = RollingRateProfile(rate.get("kind", "constant"), float(rate.get("delta_max", 1.0)),
                                  rate.get("duration"))
    except ValueError as exc:
        raise ScenarioError(str(exc), ["rate"]) from exc
    angles = doc.get("angles")
    sc = Scenario(
        model=doc["model"],
        initial=ContactState(*map(float, doc.get("initial", [0.0] * 5))),
        inputs=_schedule(doc.get("inputs")),
        g_f=float(doc["g_f"]) if "g_f" in doc else None,
        angles=FrameAngles(float(angles["theta"]), float(angles["varphi"])) if angles else None,
        rate=rate,
        geom=SphereGeometry(float(doc.get("radius", 1.0))),
        span=float(doc.get("span", 1.0)),
        step=float(doc.get("step", 1e-3)),
        drift_only=bool(doc.get("drift_only", False)),
        omega=tuple(map(float, doc["omega"])) if "omega" in doc else None,
        full_circle=bool(doc.get("full_circle", False)),
    )
    sc.validate()
    if sc.angles is None and sc.g_f is not None and not (sc.model == "montana-t" and sc.omega is not None):
        for v in sc.inputs.values:  # surface goal-angle singularities before integrating
            goal_angles(v, sc.g_f, sc.geom, sc.full_circle)
    return sc


def load_document(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}", ["<root>"]) from exc
    validate_document(doc)
    return doc


# ---------------------------------------------------------------------------
# serialization

def _clean(obj):
    """Recursively convert to JSON-native types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dumps_report(report) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    cols = traj.columns()
    data = np.column_stack([cols[c] for c in CSV_COLUMNS]) if len(traj) else np.empty((0, 14))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in data:
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Parse a trajectory CSV back into float columns keyed by header name."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in r] for r in reader]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def plot_script(csv_name="trajectory.csv", title="trajectory") -> str:
    """Plain gnuplot script drawing the plane path, sphere trace and spin."""
    idx = {c: k + 1 for k, c in enumerate(CSV_COLUMNS)}
    return "\n".join([
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set terminal pngcairo size 1200,400",
        f"set output '{Path(csv_name).stem}.png'",
        "set multiplot layout 1,3",
        f"set title '{title}: plane path'",
        "set xlabel 'u_s'; set ylabel 'v_s'",
        f"plot '{csv_name}' using {idx['u_s']}:{idx['v_s']} with lines",
        f"set title '{title}: sphere trace'",
        "set xlabel 'u_o'; set ylabel 'v_o'",
        f"plot '{csv_name}' using {idx['u_o']}:{idx['v_o']} with lines",
        f"set title '{title}: spin'",
        "set xlabel 's'; set ylabel 'psi'",
        f"plot '{csv_name}' using {idx['s']}:{idx['psi']} with lines",
        "unset multiplot",
        "",
    ])


# ---------------------------------------------------------------------------
# analyses

def _trajectory_summary(traj: Trajectory) -> dict:
    return {"samples": len(traj), "error": traj.error, "model": traj.model, "step": traj.step,
            "scenario_hash": traj.scenario_hash,
            "final_state": traj.final_state if len(traj) else None,
            "final_s": traj.s[-1] if len(traj) else None}


def ctrb_scan(grid, radius) -> list[dict]:
    geom = SphereGeometry(radius)
    varphi = float(grid.get("varphi", 0.0))
    plane = grid.get("plane", [0.0, 0.0])
    points = []
    for total in grid["theta_plus_varphi"]:
        for v_o in grid["v_o"]:
            state = ContactState(plane[0], plane[1], float(grid.get("u_o", 0.0)), float(v_o),
                                 float(grid.get("psi", 0.0)))
            angles = FrameAngles(theta=float(total) - varphi, varphi=varphi)
            point = {"theta_plus_varphi": total, "v_o": v_o, "varphi": varphi}
            try:
                point.update(ctrb.controllability_matrix(state, angles, geom).to_dict())
            except ChartSingularity as exc:
                point.update(rank=None, det_numeric=None, det_closed=None,
                             singular_factors=["chart:cos(v_o)"], error=str(exc))
            points.append(point)
    return points


def run_analyses(doc, sc: Scenario | None, traj: Trajectory | None, out: Path) -> dict:
    analyses = doc.get("analyses", {})
    radius = float(doc.get("radius", 1.0))
    report = {}
    if analyses.get("equivalence"):
        if sc is None or sc.model == "montana-t":
            raise ScenarioError("equivalence needs a darboux model", ["analyses/equivalence"])
        res = equivalence_run(sc)
        report["equivalence"] = {"max_gap": res.max_gap, "darboux": _trajectory_summary(res.traj_darboux),
                                 "montana_mapped": _trajectory_summary(res.traj_montana_mapped)}
    if analyses.get("fig4"):
        if sc is None or sc.g_f is None:
            raise ScenarioError("fig4 needs a model and g_f", ["analyses/fig4"])
        opts = analyses["fig4"] if isinstance(analyses["fig4"], dict) else {}
        triples = [tuple(t) for t in opts.get("triples", FIG4_TRIPLES)]
        trajs = fig4_study(sc.geom, sc.g_f, triples, span=sc.span, step=sc.step,
                           initial=sc.initial)
        names = []
        for k, tr in enumerate(trajs):
            name = f"fig4_{k}.csv"
            write_trajectory_csv(tr, out / name)
            names.append(name)
        report["fig4"] = {**fig4_report(trajs, sc.g_f), "triples": triples, "files": names,
                          "errors": [tr.error for tr in trajs]}
    if analyses.get("fig5"):
        if traj is None:
            raise ScenarioError("fig5 needs a model", ["analyses/fig5"])
        report["fig5"] = periodicity_report(traj)
    if "ctrb_scan" in analyses:
        report["ctrb_scan"] = {"points": ctrb_scan(analyses["ctrb_scan"], radius)}
    if analyses.get("wpps"):
        if sc is None or sc.g_f is None:
            raise ScenarioError("wpps needs inputs and g_f", ["analyses/wpps"])
        opts = analyses["wpps"] if isinstance(analyses["wpps"], dict) else {}
        kw = {"threshold": opts["threshold"]} if "threshold" in opts else {}
        report["wpps"] = [{"s": b, **wpps_report(v, sc.g_f, sc.geom, **kw).to_dict()}
                          for b, v in zip(sc.inputs.breaks, sc.inputs.values)]
    return report


# ---------------------------------------------------------------------------
# commands

def prepare_out_dir(out: Path, force: bool) -> None:
    if out.exists() and any(out.iterdir()) if out.is_dir() else out.exists():
        if not force:
            raise FileExistsError(f"output directory {out} exists; use --force to overwrite")
        shutil.rmtree(out) if out.is_dir() else out.unlink()
    out.mkdir(parents=True, exist_ok=True)


def run_one(path, out, force=False) -> tuple[int, str]:
    """Run a single scenario file; returns (exit code, message)."""
    out = Path(out)
    try:
        doc = load_document(path)
        sc = scenario_from_document(doc)
    except (DarbouxRollError, ValueError, OSError) as exc:
        return EXIT_INVALID, f"{path}: {exc}"
    try:
        prepare_out_dir(out, force)
    except FileExistsError as exc:
        return EXIT_INVALID, f"{path}: {exc}"
    code, msg = EXIT_OK, f"{path}: ok -> {out}"
    traj, report = None, {"scenario": doc, "scenario_hash": sc.digest() if sc else None}
    if sc is not None:
        try:
            traj = integrate(sc)
        except StepTooLarge as exc:
            traj = exc.trajectory
            code, msg = EXIT_SINGULAR, f"{path}: aborted: {exc}"
            traj = dataclasses.replace(traj, error=f"StepTooLarge: {exc}")
        if traj.error and code == EXIT_OK:
            code, msg = EXIT_SINGULAR, f"{path}: aborted: {traj.error}"
        write_trajectory_csv(traj, out / "trajectory.csv")
        report["trajectory"] = _trajectory_summary(traj)
        if doc.get("plot", True):
            (out / "plot.gp").write_text(plot_script(title=doc.get("name", Path(path).stem)),
                                         encoding="utf-8")
    if code == EXIT_OK:
        try:
            report["analyses"] = run_analyses(doc, sc, traj, out)
        except ScenarioError as exc:
            code, msg = EXIT_INVALID, f"{path}: {exc}"
        except (ChartSingularity, StepTooLarge) as exc:
            code, msg = EXIT_SINGULAR, f"{path}: aborted during analysis: {exc}"
    report["exit_code"] = code
    (out / "report.json").write_text(dumps_report(report), encoding="utf-8")
    return code, msg


def _out_dirs(paths, out):
    if out is None:
        return [Path("results") / Path(p).stem for p in paths]
    if len(paths) == 1:
        return [Path(out)]
    return [Path(out) / Path(p).stem for p in paths]


def cmd_run(args) -> int:
    outs = _out_dirs(args.scenarios, args.out)
    if len(set(outs)) != len(outs):
        print("scenario files must have distinct names when run together", file=sys.stderr)
        return EXIT_INVALID
    jobs = [(p, o, args.force) for p, o in zip(args.scenarios, outs)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_star, jobs))
    else:
        results = [run_one(*j) for j in jobs]
    for code, msg in results:
        print(msg, file=sys.stderr if code else sys.stdout)
    return max(code for code, _ in results)


def _run_star(job):
    return run_one(*job)


def cmd_selftest(args) -> int:
    from .acceptance import run_checks

    results = run_checks(args.filter, mutate=args.mutate)
    if not results:
        print(f"no checks match filter {args.filter!r}", file=sys.stderr)
        return EXIT_INVALID
    for r in results:
        print(r.line(), flush=True)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    return EXIT_OK if passed == len(results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="darboux-roll", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="integrate scenario files and write reports")
    run.add_argument("scenarios", nargs="+", metavar="scenario.json")
    run.add_argument("--out", help="output directory (per-scenario subdirectories when several)")
    run.add_argument("--force", action="store_true", help="overwrite an existing output directory")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for several scenarios")
    run.set_defaults(func=cmd_run)
    st = sub.add_parser("selftest", help="run the acceptance checks")
    st.add_argument("--filter", help="module name or check id to run")
    st.add_argument("--mutate", action="store_true",
                    help="corrupt the angular-velocity mapping; the equivalence check must fail")
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
