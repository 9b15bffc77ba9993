"""Command line interface: argument handling, exit codes, output."""

from __future__ import annotations

import json
import os

import pytest

from localplan.cli import main


def test_run_scenario_writes_log(traffic_scenario_path, tmp_path, capsys):
    status = main([
        "--scenario", traffic_scenario_path,
        "--seed", "1",
        "--duration", "2.0",
        "--out", str(tmp_path),
        "--log-name", "cli.jsonl",
    ])
    assert status == 0
    out = capsys.readouterr().out
    assert "exit 0 (clean)" in out
    log = tmp_path / "cli.jsonl"
    assert log.exists()
    assert str(log) in out
    first = json.loads(log.read_text().splitlines()[0])
    assert first["record"] == "header"
    assert first["run"]["seed"] == 1


def test_sensor_overrides_reach_the_run(stop_scenario_path, tmp_path):
    status = main([
        "--scenario", stop_scenario_path,
        "--v-offset", "-0.1",
        "--sigma-v", "0.1",
        "--yawrate-offset-dps", "0.57",
        "--sigma-yawrate-dps", "1.72",
        "--duration", "1.0",
        "--out", str(tmp_path),
        "--log-name", "ovr.jsonl",
    ])
    assert status == 0
    header = json.loads((tmp_path / "ovr.jsonl").read_text().splitlines()[0])
    assert header["sensors"]["v_offset_mps"] == -0.1
    assert header["sensors"]["yawrate_offset_rps"] == pytest.approx(0.00995, abs=5e-6)


def test_collision_returns_2(stop_scenario_path, tmp_path, capsys):
    status = main([
        "--scenario", stop_scenario_path,
        "--v-offset", "-1.0",
        "--sigma-v", "0.1",
        "--yawrate-offset-dps", "0.57",
        "--sigma-yawrate-dps", "1.72",
        "--out", str(tmp_path),
    ])
    assert status == 2
    assert "collision at t=" in capsys.readouterr().out


def test_missing_scenario_returns_3(capsys):
    assert main([]) == 3
    assert "--scenario is required" in capsys.readouterr().err


def test_unreadable_scenario_returns_3(tmp_path, capsys):
    assert main(["--scenario", str(tmp_path / "nope.yaml")]) == 3
    assert "not found" in capsys.readouterr().err


def test_bad_flag_value_exits_3(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--seed", "not-a-number"])
    assert exc.value.code == 3


def test_bad_replan_rate_returns_3(traffic_scenario_path, capsys):
    assert main(["--scenario", traffic_scenario_path, "--replan-hz", "3"]) == 3
    assert "whole number" in capsys.readouterr().err


def test_toy_orbit_cli(tmp_path, capsys):
    status = main(["--toy-orbit", "--seed", "2", "--out", str(tmp_path)])
    assert status == 0
    out = capsys.readouterr().out
    assert "contained = True" in out
    assert os.path.exists(tmp_path / "toy_orbit_seed2.jsonl")
