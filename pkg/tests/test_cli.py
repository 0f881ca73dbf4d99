import json

import pytest
from click.testing import CliRunner

from conftest import SCENARIOS
from expose_lab.cli import main
from expose_lab.scenarios import ScenarioError, worker_count


@pytest.fixture
def runner():
    return CliRunner()


def test_mobius_fuzz_command(runner, tmp_path):
    res = runner.invoke(main, ["mobius-fuzz", "--samples", "20000", "--seed", "1", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    rep = json.loads((tmp_path / "mobius-fuzz.json").read_text())
    assert rep["violations"] == 0 and rep["ok"]
    assert rep["manifest"]["seeds"] == {"fuzz": 1}
    assert "version" in rep["manifest"] and "tolerances" in rep["manifest"]


def test_missing_scenario_is_input_error(runner, tmp_path):
    res = runner.invoke(main, ["run", str(tmp_path / "nope.json")])
    assert res.exit_code == 2
    assert "not found" in res.output


def test_missing_domain_is_input_error(runner, tmp_path):
    res = runner.invoke(main, ["run", str(SCENARIOS / "missing-domain.json"), "--out", str(tmp_path)])
    assert res.exit_code == 2
    assert "no_such_domain.json" in res.output


def test_malformed_scenario(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"operations": [{"kind": "teleport"}]}')
    assert runner.invoke(main, ["run", str(bad)]).exit_code == 2
    bad.write_text("{not json")
    assert runner.invoke(main, ["run", str(bad)]).exit_code == 2


def test_scenario_writes_manifest(runner, tmp_path):
    sc = tmp_path / "s.json"
    sc.write_text(json.dumps({"name": "mini", "output": "out", "operations": [
        {"kind": "hull-demo", "params": {"count": 50, "degree": 4}},
        {"kind": "plan", "params": {"decay_c": 0.5, "eps": 0.1}},
    ]}))
    res = runner.invoke(main, ["run", str(sc)])
    assert res.exit_code == 0, res.output
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["ok"] and [op["kind"] for op in man["operations"]] == ["hull-demo", "plan"]
    assert (tmp_path / "out" / "hull_annulus.svg").exists()


def test_infeasible_plan_is_invariant_failure(runner, tmp_path):
    res = runner.invoke(main, ["convexify", "--eps", "0.025", "--grid", "8", "--out", str(tmp_path)])
    assert res.exit_code == 1
    assert "expose_lab.convexify.PlannerError" in res.output


def test_bad_options(runner):
    assert runner.invoke(main, ["ball-expose", "--nu-list", "a,b"]).exit_code == 2
    assert runner.invoke(main, ["convexify", "--zeta", "x"]).exit_code == 2
    assert runner.invoke(main, ["hull-demo", "--rho0", "1.5"]).exit_code == 2
    res = runner.invoke(main, ["hull-demo", "--rho0", "0.3"])
    assert res.exit_code == 2
    assert isinstance(res.exception, SystemExit)
    assert runner.invoke(main, ["ball-expose", "--r", "3", "--s", "3"]).exit_code == 2
    assert runner.invoke(main, ["dumbbell", "--delta", "-1"]).exit_code == 2


def test_render_command(runner, tmp_path):
    csv = tmp_path / "d.csv"
    csv.write_text("index,re,im\n0,0,0\n1,1,1\n")
    res = runner.invoke(main, ["render", str(csv)])
    assert res.exit_code == 0
    assert (tmp_path / "d.svg").exists()
    (tmp_path / "e.csv").write_text("")
    assert runner.invoke(main, ["render", str(tmp_path / "e.csv")]).exit_code == 2
    assert runner.invoke(main, ["render", str(tmp_path / "missing.csv")]).exit_code == 2


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("EXPOSE_LAB_THREADS", "2")
    assert worker_count(8) == 2
    assert worker_count(1) == 1
    monkeypatch.setenv("EXPOSE_LAB_THREADS", "many")
    with pytest.raises(ScenarioError):
        worker_count()
