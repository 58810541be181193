"""Command-line interface: exit codes, outputs, byte stability."""

import json

import pytest

import qosched.engine
from conftest import make_flow, make_spec
from qosched.cli import main
from qosched.model import save_scenario


@pytest.fixture
def scenario_file(tmp_path):
    spec = make_spec(
        [make_flow(0, 0.2, lam=10.0), make_flow(1, 0.8, lam=40.0)],
        horizon=2000,
        seed=3,
    )
    path = tmp_path / "row1.json"
    save_scenario(spec, path)
    return path


def test_run_success(scenario_file, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(scenario_file), "--out", str(out), "--thin", "10"]) == 0
    assert (out / "run.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["violations"] == []
    assert "theoretical_bounds" in summary


def test_run_admission_violation_exits_1(tmp_path):
    spec = make_spec([make_flow(0, 0.6), make_flow(1, 0.6)], horizon=100)
    path = tmp_path / "bad.json"
    save_scenario(spec, path)
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 1


def test_run_parse_error_reports_line(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"flows": [\n  {"id": }\n]}\n')
    assert main(["run", str(path)]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err


def test_run_missing_file(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == 1


def test_strict_injected_fault_exits_2(scenario_file, tmp_path, monkeypatch):
    # Fault-injection build: corrupt the persistent-queue update.
    real = qosched.engine.update_persistent_queue

    def broken(z, zeta, alpha, s_t, indicator, s_i, d_i):
        return real(z, zeta, alpha, s_t, indicator, s_i, d_i) + 1e6

    monkeypatch.setattr(qosched.engine, "update_persistent_queue", broken)
    rc = main(["run", str(scenario_file), "--out", str(tmp_path / "o"), "--strict"])
    assert rc == 2


def test_verify_passes(scenario_file, capsys):
    assert main(["verify", str(scenario_file)]) == 0
    out = capsys.readouterr().out
    assert "PASS q_bound" in out
    assert "PASS oracle spot checks" in out
    assert "PASS conservation" in out


def test_verify_refuses_pi_bar_without_cap(tmp_path, capsys):
    spec = make_spec([make_flow(0, 0.2)], policy="pi_bar", horizon=100)
    path = tmp_path / "nocap.json"
    save_scenario(spec, path)
    assert main(["verify", str(path)]) == 1
    assert "MissingDropCap" in capsys.readouterr().out


def test_verify_pi_static_reports_z_zero(tmp_path, capsys):
    spec = make_spec(
        [make_flow(0, 0.2, lam=15.0), make_flow(1, 0.6, lam=15.0)],
        policy="pi_static",
        horizon=2000,
    )
    path = tmp_path / "static.json"
    save_scenario(spec, path)
    assert main(["verify", str(path)]) == 0
    assert "PASS Z identically zero" in capsys.readouterr().out


def test_preset_outputs_and_byte_stability(tmp_path):
    args = ["preset", "zeta_sweep", "--seed", "5", "--horizon", "400"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    agg_a = (tmp_path / "a" / "zeta_sweep" / "aggregate.csv").read_bytes()
    agg_b = (tmp_path / "b" / "zeta_sweep" / "aggregate.csv").read_bytes()
    assert agg_a == agg_b
    point = tmp_path / "a" / "zeta_sweep" / "zeta_01"
    assert (point / "run.csv").exists() and (point / "summary.json").exists()
    run_a = (point / "run.csv").read_bytes()
    run_b = (tmp_path / "b" / "zeta_sweep" / "zeta_01" / "run.csv").read_bytes()
    assert run_a == run_b


def test_preset_unknown_name_rejected():
    with pytest.raises(SystemExit):
        main(["preset", "no_such_preset"])
