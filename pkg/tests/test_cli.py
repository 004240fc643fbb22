import json
import math
from pathlib import Path

import numpy as np
import pytest

from darboux_roll.cli import (CSV_COLUMNS, SCENARIO_SCHEMA, dumps_report, main, read_trajectory_csv,
                              run_one, validate_document, write_trajectory_csv)
from darboux_roll.errors import ScenarioError
from darboux_roll.sim import InputSchedule, Scenario, integrate

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
HEADER = "s,t,u_s,v_s,u_o,v_o,psi,theta,varphi,delta,alpha_s,beta_s,gamma_s,heading"


def _write(tmp_path, doc, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_fig5_run(tmp_path):
    out = tmp_path / "results"
    assert main(["run", str(SCENARIOS / "fig5.json"), "--out", str(out)]) == 0
    raw = (out / "trajectory.csv").read_bytes()
    assert raw.split(b"\n", 1)[0].decode() == HEADER and b"\r" not in raw
    report = json.loads((out / "report.json").read_text())
    assert report["exit_code"] == 0 and report["trajectory"]["samples"] == 20001
    assert report["analyses"]["fig5"]["heading_max_deviation"] < 1e-9
    assert "trajectory.csv" in (out / "plot.gp").read_text()


def test_csv_round_trip(tmp_path):
    sc = Scenario("darboux-s", inputs=InputSchedule.constant(0.2, 0.8, 0.1), g_f=0.3, span=0.5,
                  step=0.01)
    tr = integrate(sc)
    write_trajectory_csv(tr, tmp_path / "t.csv")
    back = read_trajectory_csv(tmp_path / "t.csv")
    assert tuple(back) == CSV_COLUMNS
    for name, col in tr.columns().items():
        np.testing.assert_array_equal(back[name], col)


def test_csv_round_trip_with_nan(tmp_path):
    tr = integrate(Scenario("montana-t", omega=(0, 0, 1), span=0.05, step=0.01))
    write_trajectory_csv(tr, tmp_path / "t.csv")
    back = read_trajectory_csv(tmp_path / "t.csv")
    assert np.all(np.isnan(back["theta"]))
    np.testing.assert_array_equal(back["psi"], tr.states[:, 4])


def test_report_is_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(SCENARIOS / "ctrb.json"), "--out", str(a)]) == 0
    assert main(["run", str(SCENARIOS / "ctrb.json"), "--out", str(b)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert not (a / "trajectory.csv").exists()
    points = json.loads((a / "report.json").read_text())["analyses"]["ctrb_scan"]["points"]
    assert len(points) == 20
    for p in points:
        assert {"rank", "det_numeric", "det_closed"} <= set(p)
    spot = next(p for p in points if p["theta_plus_varphi"] == pytest.approx(math.pi / 3)
                and p["v_o"] == pytest.approx(math.pi / 6))
    assert spot["det_closed"] == pytest.approx(-1.1830127, abs=1e-6) and spot["rank"] == 5


def test_dumps_report_sorted_and_nan_null():
    text = dumps_report({"b": float("nan"), "a": np.float64(1.5), "c": np.array([1, 2])})
    assert json.loads(text) == {"a": 1.5, "b": None, "c": [1, 2]}
    assert text.index('"a"') < text.index('"b"')


def test_zero_beta_exit_2(tmp_path, capsys):
    p = _write(tmp_path, {"model": "darboux-s", "inputs": {"alpha_s": 0.1, "beta_s": 0.0},
                          "g_f": 0.2})
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "beta_s must be nonzero" in capsys.readouterr().err


def test_unknown_keys_listed(tmp_path):
    with pytest.raises(ScenarioError) as info:
        validate_document({"model": "darboux-s", "bogus": 1, "analyses": {"nope": True}})
    assert set(info.value.keys) == {"bogus", "analyses/nope"}


@pytest.mark.parametrize("doc,key", [
    ({"model": "darboux-x"}, "model"),
    ({"model": "darboux-s", "initial": [0, 0, 0]}, "initial"),
    ({"model": "darboux-s", "step": -1}, "step"),
    ({"name": "nothing to do"}, "<root>"),
])
def test_schema_errors(doc, key):
    with pytest.raises(ScenarioError) as info:
        validate_document(doc)
    assert key in info.value.keys


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run_one(p, tmp_path / "o")[0] == 2


def test_goal_tangent_is_validation_error(tmp_path):
    p = _write(tmp_path, {"model": "darboux-s", "inputs": {"beta_s": 1.0}, "g_f": math.pi / 2})
    assert run_one(p, tmp_path / "o")[0] == 2


def test_singularity_exit_3(tmp_path):
    p = _write(tmp_path, {"model": "montana-t", "omega": [1, 0, 0], "initial": [0, 0, 0, -1.5, 0],
                          "span": 1})
    out = tmp_path / "o"
    code, msg = run_one(p, out)
    assert code == 3 and "ChartSingularity" in msg
    report = json.loads((out / "report.json").read_text())
    assert report["exit_code"] == 3 and "ChartSingularity" in report["trajectory"]["error"]
    assert len(read_trajectory_csv(out / "trajectory.csv")["s"]) == report["trajectory"]["samples"]


def test_step_too_large_exit_3(tmp_path):
    p = _write(tmp_path, {"model": "montana-t", "omega": [0, 0, 10], "span": 1, "step": 0.1})
    assert run_one(p, tmp_path / "o")[0] == 3


def test_output_collision(tmp_path):
    out = tmp_path / "o"
    out.mkdir()
    (out / "keep.txt").write_text("x")
    p = SCENARIOS / "ctrb.json"
    assert main(["run", str(p), "--out", str(out)]) == 2
    assert (out / "keep.txt").exists()
    assert main(["run", str(p), "--out", str(out), "--force"]) == 0
    assert not (out / "keep.txt").exists() and (out / "report.json").exists()


def test_batch_with_jobs(tmp_path):
    files = [str(SCENARIOS / "ctrb.json"), str(SCENARIOS / "fig4.json")]
    assert main(["run", *files, "--out", str(tmp_path), "--jobs", "2"]) == 0
    assert (tmp_path / "ctrb" / "report.json").exists()
    fig4 = json.loads((tmp_path / "fig4" / "report.json").read_text())["analyses"]["fig4"]
    assert fig4["max_heading_error"] < 1e-6 and len(fig4["files"]) == 3
    assert (tmp_path / "fig4" / "fig4_2.csv").exists()


def test_equivalence_scenarios(tmp_path):
    for name in ("equivalence", "rest_to_rest"):
        out = tmp_path / name
        assert main(["run", str(SCENARIOS / f"{name}.json"), "--out", str(out)]) == 0
        gap = json.loads((out / "report.json").read_text())["analyses"]["equivalence"]["max_gap"]
        assert gap < 1e-6


def test_example_scenarios_validate():
    for p in SCENARIOS.glob("*.json"):
        validate_document(json.loads(p.read_text()))
    assert SCENARIO_SCHEMA["additionalProperties"] is False


def test_selftest_filter(capsys):
    assert main(["selftest", "--filter", "diffgeo"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] 4" in out and "1/1 checks passed" in out


def test_selftest_mutation_detected(capsys):
    assert main(["selftest", "--filter", "1", "--mutate"]) == 1
    assert "[FAIL] 1" in capsys.readouterr().out


def test_selftest_unknown_filter():
    assert main(["selftest", "--filter", "nothing"]) == 2
