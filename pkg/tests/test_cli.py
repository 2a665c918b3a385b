import json

import pytest

from phcclab.cli import main

SCENARIO = """
name: clitest
duration_s: 4
warmup_s: 1
bottleneck_bps: 10e6
buffer_pkts: 100
flows: [{cc: reno}]
sweep: {param: buffer_pkts, values: [50, 100]}
"""


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "clitest.scenario"
    p.write_text(SCENARIO)
    return p


def test_run_writes_outputs(scenario, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--scenario", str(scenario), "--out", str(out)]) == 0
    assert json.loads((out / "summary.json").read_text())["name"] == "clitest"
    assert "utilization=" in capsys.readouterr().out


def test_run_refuses_overwrite_without_force(scenario, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--scenario", str(scenario), "--out", str(out)]) == 0
    assert main(["run", "--scenario", str(scenario), "--out", str(out)]) == 1
    assert main(["run", "--scenario", str(scenario), "--out", str(out), "--force"]) == 0


def test_run_is_reproducible(scenario, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "--scenario", str(scenario), "--out", str(a), "--seed", "3", "--trace"])
    main(["run", "--scenario", str(scenario), "--out", str(b), "--seed", "3", "--trace"])
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
    assert (a / "flows.csv").read_bytes() == (b / "flows.csv").read_bytes()


def test_default_output_dir_from_environment(scenario, tmp_path, monkeypatch):
    monkeypatch.setenv("PHCCLAB_OUT", str(tmp_path / "env"))
    assert main(["run", "--scenario", str(scenario)]) == 0
    assert (tmp_path / "env" / "clitest" / "summary.json").exists()


def test_sweep_uses_scenario_default(scenario, tmp_path, capsys):
    out = tmp_path / "sw"
    assert main(["sweep", "--scenario", str(scenario), "--out", str(out)]) == 0
    assert (out / "sweep.csv").exists()
    assert (out / "buffer_pkts=50").is_dir()
    assert capsys.readouterr().out.count("buffer_pkts=") >= 2


def test_sweep_with_partial_failure_exits_2(scenario, tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", "--scenario", str(scenario), "--param", "buffer_pkts=0,50",
                 "--out", str(out)])
    assert code == 2


def test_unknown_scenario_is_a_usage_error(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "nope.scenario")]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_invalid_scenario_is_a_usage_error(tmp_path):
    p = tmp_path / "bad.scenario"
    p.write_text("flows: [{cc: cubic}]")
    assert main(["run", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 1


def test_bad_arguments_exit_1():
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_bad_jobs_value(scenario, tmp_path):
    assert main(["sweep", "--scenario", str(scenario), "--jobs", "0",
                 "--out", str(tmp_path / "o")]) == 1


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert "table1_ci" in out and "fig12" in out


def test_canned_name_resolves(tmp_path):
    assert main(["run", "--scenario", "fig8_loss_1e-2_ci", "--duration", "12",
                 "--out", str(tmp_path / "o")]) == 0
