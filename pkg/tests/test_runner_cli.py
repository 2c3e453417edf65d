"""Scenario validation, the run pipeline and the command line."""

from __future__ import annotations

import csv
import json

import pytest

from gaugechain.cli import main
from gaugechain.errors import ScenarioError
from gaugechain.runner import (
    DEFAULT_DIM,
    DEFAULT_STEP,
    load_scenario,
    resolve_scenario,
    run,
    run_file,
    save_scenario,
    scenario_from_dict,
    shipped_scenarios,
)

MINIMAL = {"model": {"type": "linear", "omega": "1"}}
SHIPPED = ("chain_collapse", "linear_free_rotation", "linear_global_gauge", "swanson_local_gauge")


def test_minimal_scenario_defaults():
    scenario = scenario_from_dict(MINIMAL)
    assert scenario.fock.dim == DEFAULT_DIM
    assert scenario.grid == (0.0, 1.0, DEFAULT_STEP)
    assert scenario.chain_depth == (0, 0)
    assert scenario.map_requests == ()
    assert scenario.evolution is None


def test_non_positive_step_names_field():
    with pytest.raises(ScenarioError, match=r"grid\.step"):
        scenario_from_dict({**MINIMAL, "grid": {"step": 0}})


def test_every_problem_is_listed():
    data = {"model": {"type": "cubic", "omega": "1"}, "grid": {"step": -1}, "colour": "red"}
    with pytest.raises(ScenarioError) as info:
        scenario_from_dict(data)
    joined = " ".join(info.value.problems)
    assert "model.type" in joined and "grid.step" in joined and "colour" in joined
    assert len(info.value.problems) >= 3


def test_bad_map_request_is_rejected():
    data = {**MINIMAL, "chain_depth": [0, 1], "map_requests": [{"link": 0, "kind": "teleport"}]}
    with pytest.raises(ScenarioError, match="kind"):
        scenario_from_dict(data)


def test_yaml_error_reports_line(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("name: broken\nmodel:\n  type: linear\n  omega: [1, 2\n")
    with pytest.raises(ScenarioError, match="line"):
        load_scenario(path)


def test_unknown_scenario_reference():
    with pytest.raises(ScenarioError):
        resolve_scenario("no_such_scenario")


def test_shipped_scenarios_are_listed_and_valid():
    found = shipped_scenarios()
    assert tuple(found) == SHIPPED
    for path in found.values():
        load_scenario(path)


def test_scenario_round_trip(tmp_path):
    original = load_scenario(shipped_scenarios()["linear_global_gauge"])
    copy = load_scenario(save_scenario(original, tmp_path / "copy.yaml"))
    assert copy.to_config() == original.to_config()


def test_overrides_change_dim_and_step():
    scenario = load_scenario(shipped_scenarios()["chain_collapse"]).with_overrides(dim=16, step=0.002)
    assert scenario.fock.dim == 16
    assert scenario.grid[2] == 0.002


def test_empty_chain_has_no_checks(tmp_path):
    report = run(scenario_from_dict({**MINIMAL, "name": "empty", "grid": {"t1": 0.01}}), tmp_path)
    assert report.checks == [] and report.exit_status == 0
    assert sorted(p.name for p in (tmp_path / "empty").iterdir()) == ["checks.csv", "report.json"]


def test_requested_check_that_is_not_produced_fails(tmp_path):
    data = load_scenario(shipped_scenarios()["chain_collapse"]).to_config()
    data["grid"]["t1"] = 0.05
    data["checks"] = ["collapse_deviation", "gauge_kind[-1->0]"]
    report = run(scenario_from_dict(data), None)
    assert [c.name for c in report.checks] == data["checks"]
    assert report.checks[0].passed and not report.checks[1].passed
    assert report.exit_status == 1


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_scenario_passes(name, tmp_path):
    report = run_file(name, tmp_path)
    assert report.passed, report.summary()
    folder = tmp_path / name
    written = json.loads((folder / "report.json").read_text())
    assert written["scenario"] == name
    assert all(c["pass"] for c in written["checks"])
    with (folder / "checks.csv").open() as fh:
        assert len(list(csv.DictReader(fh))) == len(report.checks)
    if name == "swanson_local_gauge":
        assert report.diagnostics["gauge_kinds"] == {"-1->0": "local"}
    if name == "chain_collapse":
        assert {f"map_link{k}.csv" for k in (-2, -1, 0, 1)} <= {p.name for p in folder.iterdir()}


def test_outputs_are_deterministic(tmp_path):
    data = load_scenario(shipped_scenarios()["chain_collapse"]).to_config()
    data["grid"]["t1"] = 0.1
    scenario = scenario_from_dict(data)
    run(scenario, tmp_path / "a")
    run(scenario, tmp_path / "b")
    for artifact in ("chain.csv", "checks.csv", "map_link0.csv"):
        assert (tmp_path / "a" / "chain_collapse" / artifact).read_bytes() == \
            (tmp_path / "b" / "chain_collapse" / artifact).read_bytes()


def test_cli_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in SHIPPED:
        assert name in out


def test_cli_run_json_and_overrides(tmp_path, capsys):
    path = tmp_path / "short.yaml"
    data = load_scenario(shipped_scenarios()["chain_collapse"]).to_config()
    data["grid"]["t1"] = 0.05
    save_scenario(scenario_from_dict(data), path)
    assert main(["run", str(path), "--dim", "16", "--out-dir", str(tmp_path / "out"), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["scenario"] == "chain_collapse"
    rows = (tmp_path / "out" / "chain_collapse" / "chain.csv").read_text().splitlines()
    assert len(rows) == 1 + 5 * 51


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run", "no_such_scenario", "--out-dir", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err
    data = load_scenario(shipped_scenarios()["chain_collapse"]).to_config()
    data["grid"]["t1"] = 0.05
    data["tolerances"] = {"collapse_deviation": 1e-30}
    path = save_scenario(scenario_from_dict(data), tmp_path / "strict.yaml")
    assert main(["run", str(path), "--out-dir", str(tmp_path)]) == 1
    assert "FAIL" in capsys.readouterr().out
