"""Command-line behavior: exit codes, flags, and emitted files."""

from __future__ import annotations

import json

import pytest

from portsim.cli import main
from portsim.domain import serialize_scenario
from portsim.metrics import parse_report

from helpers import build_scenario, lat_at


@pytest.fixture()
def scenario_path(tmp_path):
    scenario = build_scenario(
        warehouses=[
            {"lat": lat_at(30.0, 100.0), "lon": -100.0, "intermodal": True,
             "capacity": 5_000.0, "fleet": 2},
            {"lat": lat_at(30.0, 150.0), "lon": -100.0, "intermodal": False,
             "capacity": 5_000.0, "fleet": 2},
        ],
        destinations=[(lat_at(30.0, 250.0), -100.0)],
        annual_tons=600.0,
        shares={0: 1.0},
        horizon_months=2,
    )
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(serialize_scenario(scenario)), encoding="utf-8")
    return path


def read(path):
    return path.read_text(encoding="utf-8")


# ---------------------------------------------------------------- validate


def test_validate_ok(scenario_path, capsys):
    assert main(["validate", str(scenario_path)]) == 0
    out = capsys.readouterr().out
    assert "OK: 1 port, 2 warehouses, 1 destinations" in out


def test_validate_reports_each_failure(tmp_path, capsys):
    doc = {
        "name": "broken",
        "nodes": [
            {"id": 1, "kind": "warehouse", "lat": 0.0, "lon": 0.0,
             "capacity_tons": 10.0},
            {"id": 2, "kind": "destination", "lat": 1.0, "lon": 1.0},
        ],
        "demand": {"annual_tons": 10.0,
                   "shares": [{"destination": 2, "fraction": 1.0}]},
    }
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    assert main(["validate", str(path)]) == 1
    err = capsys.readouterr().err
    assert "port" in err


def test_validate_missing_file_is_exit_3(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 3


def test_validate_malformed_json_is_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    assert main(["validate", str(path)]) == 1


# --------------------------------------------------------------------- run


def test_run_smoke_writes_files(scenario_path, tmp_path, capsys):
    out_dir = tmp_path / "out"
    code = main([
        "run", str(scenario_path), "--setting", "N-WHS", "--p", "1",
        "--seed", "1", "--out", str(out_dir),
    ])
    assert code == 0
    rows = parse_report(read(out_dir / "runs.csv"))
    assert len(rows) == 1
    assert rows[0]["setting"] == "N-WHS"
    assert rows[0]["p"] == 1
    util_text = read(out_dir / "warehouse_util.csv")
    assert util_text.splitlines()[0] == "setting,seed,warehouse_id,utilization"
    assert len(util_text.splitlines()) == 3
    printed = capsys.readouterr().out
    assert "N-WHS" in printed
    assert not (out_dir / "trace.tsv").exists()


def test_run_is_byte_deterministic(scenario_path, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    flags = ["--setting", "DRD-0-72", "--p", "0", "--seed", "9"]
    assert main(["run", str(scenario_path), *flags, "--out", str(out_a)]) == 0
    assert main(["run", str(scenario_path), *flags, "--out", str(out_b)]) == 0
    assert read(out_a / "runs.csv") == read(out_b / "runs.csv")
    assert read(out_a / "warehouse_util.csv") == read(out_b / "warehouse_util.csv")


def test_run_infeasible_p_is_exit_1(scenario_path, tmp_path, capsys):
    code = main([
        "run", str(scenario_path), "--setting", "RandomWHS", "--p", "999",
        "--out", str(tmp_path / "o"),
    ])
    assert code == 1
    assert "infeasible" in capsys.readouterr().err


def test_run_unknown_setting_is_exit_1(scenario_path, tmp_path, capsys):
    code = main([
        "run", str(scenario_path), "--setting", "whatever",
        "--out", str(tmp_path / "o"),
    ])
    assert code == 1
    assert "setting" in capsys.readouterr().err


def test_run_trace_flag_writes_trace(scenario_path, tmp_path):
    out_dir = tmp_path / "out"
    code = main([
        "run", str(scenario_path), "--setting", "RandomWHS", "--seed", "2",
        "--out", str(out_dir), "--trace",
    ])
    assert code == 0
    lines = read(out_dir / "trace.tsv").splitlines()
    assert lines[0] == "time\tseq\tkind\tdetails"
    assert len(lines) > 10


def test_run_alias_and_canonical_labels_agree(scenario_path, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    main(["run", str(scenario_path), "--setting", "DRD-0-200-N-WHS",
          "--seed", "4", "--out", str(out_a)])
    main(["run", str(scenario_path), "--setting", "DRD(0,200)&N-WHS",
          "--seed", "4", "--out", str(out_b)])
    assert read(out_a / "runs.csv") == read(out_b / "runs.csv")
    assert parse_report(read(out_a / "runs.csv"))[0]["setting"] == "DRD(0,200)&N-WHS"


def test_run_seed_falls_back_to_environment(scenario_path, tmp_path, monkeypatch):
    out_env, out_flag = tmp_path / "env", tmp_path / "flag"
    monkeypatch.setenv("PORTSIM_SEED", "31")
    assert main(["run", str(scenario_path), "--setting", "RandomWHS",
                 "--out", str(out_env)]) == 0
    monkeypatch.delenv("PORTSIM_SEED")
    assert main(["run", str(scenario_path), "--setting", "RandomWHS",
                 "--seed", "31", "--out", str(out_flag)]) == 0
    assert read(out_env / "runs.csv") == read(out_flag / "runs.csv")


# ------------------------------------------------------------------- sweep


def test_sweep_shape_and_anova(scenario_path, tmp_path):
    out_dir = tmp_path / "out"
    code = main([
        "sweep", str(scenario_path), "--settings", "all", "--iters", "2",
        "--seed", "0", "--out", str(out_dir),
    ])
    assert code == 0
    assert len(parse_report(read(out_dir / "runs.csv"))) == 12
    summary_lines = read(out_dir / "summary.csv").splitlines()
    assert len(summary_lines) == 7
    anova_lines = read(out_dir / "anova.csv").splitlines()
    assert anova_lines[0] == "metric,f,df_between,df_within,p_value"
    metrics = [line.split(",")[0] for line in anova_lines[1:]]
    assert metrics == [
        "fleet_utilization", "rail_utilization", "operating_cost",
        "unmet_demand",
    ]


def test_sweep_subset_of_settings(scenario_path, tmp_path):
    out_dir = tmp_path / "out"
    code = main([
        "sweep", str(scenario_path), "--settings", "RandomWHS,N-WHS",
        "--iters", "3", "--seed", "5", "--out", str(out_dir),
    ])
    assert code == 0
    rows = parse_report(read(out_dir / "runs.csv"))
    assert [r["setting"] for r in rows] == ["RandomWHS"] * 3 + ["N-WHS"] * 3
    assert [r["seed"] for r in rows] == [5, 6, 7, 5, 6, 7]


def test_sweep_budget_truncates_first_setting(scenario_path, tmp_path):
    out_dir = tmp_path / "out"
    code = main([
        "sweep", str(scenario_path), "--settings", "all", "--iters", "3",
        "--budget", "2", "--seed", "0", "--out", str(out_dir),
    ])
    assert code == 0
    rows = parse_report(read(out_dir / "runs.csv"))
    counts: dict[str, int] = {}
    for r in rows:
        counts[r["setting"]] = counts.get(r["setting"], 0) + 1
    assert counts["RandomWHS"] == 2
    assert counts["N-WHS"] == 3
    assert len(rows) == 17
    assert (out_dir / "anova.csv").exists()


def test_sweep_single_iteration_fails_anova_precondition(scenario_path, tmp_path, capsys):
    code = main([
        "sweep", str(scenario_path), "--settings", "all", "--iters", "1",
        "--out", str(tmp_path / "o"),
    ])
    assert code == 1
    assert "two observations" in capsys.readouterr().err


def test_sweep_jobs_do_not_change_output(scenario_path, tmp_path):
    out_serial, out_parallel = tmp_path / "s", tmp_path / "p"
    base = ["sweep", str(scenario_path), "--settings", "RandomWHS,DRD-0-24",
            "--iters", "2", "--seed", "1"]
    assert main([*base, "--jobs", "1", "--out", str(out_serial)]) == 0
    assert main([*base, "--jobs", "2", "--out", str(out_parallel)]) == 0
    assert read(out_serial / "runs.csv") == read(out_parallel / "runs.csv")
    assert read(out_serial / "summary.csv") == read(out_parallel / "summary.csv")


# ---------------------------------------------------------------- optimize


def test_optimize_smoke_and_determinism(scenario_path, tmp_path, capsys):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    base = ["optimize", str(scenario_path), "--p-min", "0", "--p-max", "1",
            "--reps", "2", "--seed", "3"]
    assert main([*base, "--out", str(out_a)]) == 0
    first = capsys.readouterr().out
    assert "best p" in first
    lines = read(out_a / "optimize.csv").splitlines()
    assert len(lines) == 3  # header + p=0 + p=1
    assert lines[0].startswith("p,replications,capital_cost")
    assert main([*base, "--out", str(out_b)]) == 0
    assert read(out_a / "optimize.csv") == read(out_b / "optimize.csv")


def test_optimize_single_p(scenario_path, tmp_path, capsys):
    code = main([
        "optimize", str(scenario_path), "--p-min", "0", "--p-max", "0",
        "--reps", "1", "--out", str(tmp_path / "o"),
    ])
    assert code == 0
    assert "best p = 0" in capsys.readouterr().out


def test_optimize_jobs_match_serial(scenario_path, tmp_path):
    out_serial, out_parallel = tmp_path / "s", tmp_path / "p"
    base = ["optimize", str(scenario_path), "--p-min", "0", "--p-max", "1",
            "--reps", "2", "--seed", "0"]
    assert main([*base, "--jobs", "1", "--out", str(out_serial)]) == 0
    assert main([*base, "--jobs", "2", "--out", str(out_parallel)]) == 0
    assert read(out_serial / "optimize.csv") == read(out_parallel / "optimize.csv")


# ------------------------------------------------------------- invocation


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "usage" in capsys.readouterr().out.lower()


def test_unknown_flag_exits_three(scenario_path, capsys):
    assert main(["run", str(scenario_path), "--no-such-flag"]) == 3


def test_no_command_exits_three():
    assert main([]) == 3
