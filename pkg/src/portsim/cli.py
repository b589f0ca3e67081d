"""Command line front end.

Four subcommands: ``validate`` checks a scenario file, ``run`` simulates a
single configuration, ``sweep`` replicates every requested setting and runs
the factor ANOVAs, ``optimize`` searches over the number of installed
intermodal facilities.  All outputs are UTF-8 CSV/TSV files in ``--out``.

Exit codes: 0 success, 1 invalid input (scenario, setting, p, statistics
preconditions), 2 simulation engine failure, 3 unreadable file or bad usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Sequence

from .domain import Scenario, ScenarioError, load_scenario
from .experiments import (
    ExperimentPlan,
    ModelSetting,
    Objective,
    OptimizationPlan,
    anova_one_way,
    canonical_settings,
    check_p_values,
    collect_optimization,
    collect_variation,
    optimization_tasks,
    run_single,
    variation_tasks,
)
from .kernel import SimulationError, TraceRecord
from .metrics import (
    RunResult,
    emit_report,
    emit_summary,
    emit_warehouse_utils,
)

# anova.csv rows: public metric name -> RunResult attribute
ANOVA_METRICS = (
    ("fleet_utilization", "port_fleet_utilization"),
    ("rail_utilization", "port_rail_utilization"),
    ("operating_cost", "operating_cost"),
    ("unmet_demand", "unmet_tons"),
)


def _cli_name(label: str) -> str:
    """Flag-friendly spelling of a setting label (no shell metacharacters)."""
    if label == "RandomWHS":
        return "Random-WHS"
    return (
        label.replace("(", "-").replace(")", "").replace(",", "-").replace("&", "-")
    )


def _setting_table() -> dict[str, ModelSetting]:
    table: dict[str, ModelSetting] = {}
    for setting in canonical_settings():
        table[setting.label] = setting
        table[_cli_name(setting.label)] = setting
    return table


def _lookup_setting(name: str) -> ModelSetting:
    table = _setting_table()
    if name in table:
        return table[name]
    known = ", ".join(_cli_name(s.label) for s in canonical_settings())
    raise ValueError(f"unknown setting {name!r}; choose from: {known}")


def _parse_settings(spec: str) -> tuple[ModelSetting, ...]:
    if spec.strip().lower() == "all":
        return tuple(canonical_settings())
    names = [piece.strip() for piece in spec.split(",") if piece.strip()]
    if not names:
        raise ValueError("--settings needs 'all' or a comma-separated list")
    return tuple(_lookup_setting(name) for name in names)


def _read_scenario(path: str | None) -> Scenario:
    if path is None:
        text = (
            resources.files("portsim") / "data" / "default_scenario.json"
        ).read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return load_scenario(json.loads(text))


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("PORTSIM_SEED", "").strip()
    return int(env) if env else 0


def _write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(data, encoding="utf-8")


def _render_trace(records: list[TraceRecord]) -> str:
    lines = ["time\tseq\tkind\tdetails"]
    for at, seq, kind, details in records:
        lines.append(f"{at!r}\t{seq}\t{kind}\t{details}")
    return "\n".join(lines) + "\n"


def _run_task(payload: tuple[Scenario, ModelSetting, int, int]) -> RunResult:
    scenario, setting, p, seed = payload
    return run_single(scenario, setting, p, seed)


def _map_runs(
    payloads: list[tuple[Scenario, ModelSetting, int, int]], jobs: int
) -> list[RunResult]:
    """Run replications, preserving payload order regardless of job count."""
    if jobs <= 1 or len(payloads) <= 1:
        return [_run_task(payload) for payload in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, payloads))


def _anova_csv(results: list[RunResult], settings: Sequence[ModelSetting]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["metric", "f", "df_between", "df_within", "p_value"])
    for metric, attr in ANOVA_METRICS:
        groups = []
        for setting in settings:
            group = [
                getattr(r, attr) for r in results if r.setting_label == setting.label
            ]
            # budget-truncated batches below two runs carry no variance
            # information; skip them rather than fail the whole sweep
            if len(group) >= 2:
                groups.append(group)
        if len(groups) < 2:
            raise ValueError(
                "anova needs at least two settings with two observations each"
            )
        res = anova_one_way(groups)
        writer.writerow(
            [metric, res.f_statistic, res.df_between, res.df_within, res.p_value]
        )
    return out.getvalue()


# --------------------------------------------------------------- subcommands


def _cmd_validate(args: argparse.Namespace) -> int:
    scenario = _read_scenario(args.scenario)
    print(
        f"OK: 1 port, {len(scenario.warehouses())} warehouses, "
        f"{len(scenario.destinations())} destinations"
    )
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = _read_scenario(args.scenario)
    setting = _lookup_setting(args.setting)
    seed = _resolve_seed(args.seed)
    trace: list[TraceRecord] | None = [] if args.trace else None
    result = run_single(scenario, setting, args.p, seed, trace=trace)
    out = Path(args.out)
    _write(out / "runs.csv", emit_report([result]))
    _write(out / "warehouse_util.csv", emit_warehouse_utils([result]))
    if trace is not None:
        _write(out / "trace.tsv", _render_trace(trace))
    print(emit_report([result], fmt="text"), end="")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    scenario = _read_scenario(args.scenario)
    settings = _parse_settings(args.settings)
    if args.iters < 2:
        raise ValueError(
            "the sweep ANOVA needs at least two observations per setting; "
            "use --iters 2 or more"
        )
    plan = ExperimentPlan(
        scenario,
        settings=settings,
        iterations=args.iters,
        base_seed=_resolve_seed(args.seed),
        budget=args.budget,
    )
    tasks = variation_tasks(plan)
    payloads = [(scenario, setting, plan.p, seed) for _, setting, seed in tasks]
    runs = _map_runs(payloads, args.jobs)
    outcome = collect_variation(plan, [(key, run) for (key, _, _), run in zip(tasks, runs)])
    out = Path(args.out)
    _write(out / "runs.csv", emit_report(outcome.results))
    _write(out / "summary.csv", emit_summary(outcome.results))
    _write(out / "warehouse_util.csv", emit_warehouse_utils(outcome.results))
    _write(out / "anova.csv", _anova_csv(outcome.results, settings))
    print(f"{len(outcome.results)} runs across {len(settings)} settings -> {out}")
    return 0


def _cmd_optimize(args: argparse.Namespace) -> int:
    scenario = _read_scenario(args.scenario)
    if args.p_max < args.p_min:
        raise ValueError(f"--p-max {args.p_max} is below --p-min {args.p_min}")
    plan_kwargs = dict(
        p_values=tuple(range(args.p_min, args.p_max + 1)),
        replications=args.reps,
        base_seed=_resolve_seed(args.seed),
        objective=Objective(args.objective),
    )
    if args.setting is not None:
        plan_kwargs["setting"] = _lookup_setting(args.setting)
    plan = OptimizationPlan(scenario, **plan_kwargs)
    check_p_values(plan)
    tasks = optimization_tasks(plan)
    payloads = [(scenario, plan.setting, p, seed) for _, p, seed in tasks]
    runs = _map_runs(payloads, args.jobs)
    outcome = collect_optimization(
        plan, [(key, run) for (key, _, _), run in zip(tasks, runs)]
    )
    out = Path(args.out)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "p",
            "replications",
            "capital_cost",
            "operating_mean",
            "operating_min",
            "total_mean",
            "total_min",
            "unmet_mean",
            "objective_mean",
            "objective_min",
        ]
    )
    for row in outcome.rows:
        writer.writerow(
            [
                row.p,
                row.replications,
                row.capital_cost,
                row.operating_mean,
                row.operating_min,
                row.total_mean,
                row.total_min,
                row.unmet_mean,
                row.objective_mean,
                row.objective_min,
            ]
        )
    _write(out / "optimize.csv", buf.getvalue())
    print(
        f"best p = {outcome.best_p} with mean {plan.objective.value} cost "
        f"${outcome.best_mean_objective:,.2f} over {plan.replications} replications"
    )
    return 0


# -------------------------------------------------------------------- parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="portsim",
        description="Seeded freight-network simulator: port, warehouses, states.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "scenario",
            nargs="?",
            default=None,
            help="scenario JSON path (omit for the bundled scenario)",
        )

    def seed_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--seed",
            type=int,
            default=None,
            help="base run seed (falls back to $PORTSIM_SEED, then 0)",
        )

    def out_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default="out", help="output directory")

    def jobs_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--jobs",
            type=int,
            default=os.cpu_count() or 1,
            help="worker processes (results are identical for any value)",
        )

    p_val = sub.add_parser("validate", help="check a scenario file")
    scenario_arg(p_val)
    p_val.set_defaults(handler=_cmd_validate)

    p_run = sub.add_parser("run", help="simulate one setting for one seed")
    scenario_arg(p_run)
    p_run.add_argument("--setting", default="Random-WHS", help="model setting label")
    p_run.add_argument(
        "--p", type=int, default=0, help="extra intermodal facilities to install"
    )
    seed_arg(p_run)
    out_arg(p_run)
    p_run.add_argument(
        "--trace", action="store_true", help="also write the event trace (trace.tsv)"
    )
    p_run.set_defaults(handler=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="replicate settings and run ANOVAs")
    scenario_arg(p_sweep)
    p_sweep.add_argument(
        "--settings",
        default="all",
        help="'all' or comma-separated setting labels",
    )
    p_sweep.add_argument(
        "--iters", type=int, default=100, help="replications per setting"
    )
    seed_arg(p_sweep)
    p_sweep.add_argument(
        "--budget",
        type=int,
        default=None,
        help="cap the first setting's replications",
    )
    out_arg(p_sweep)
    jobs_arg(p_sweep)
    p_sweep.set_defaults(handler=_cmd_sweep)

    p_opt = sub.add_parser("optimize", help="search the facility count p")
    scenario_arg(p_opt)
    p_opt.add_argument("--p-min", type=int, default=0, help="smallest p to try")
    p_opt.add_argument("--p-max", type=int, default=10, help="largest p to try")
    p_opt.add_argument(
        "--reps", type=int, default=5, help="replications per p value"
    )
    seed_arg(p_opt)
    p_opt.add_argument(
        "--objective",
        choices=[obj.value for obj in Objective],
        default=Objective.OPERATING.value,
        help="cost to minimize",
    )
    p_opt.add_argument(
        "--setting",
        default=None,
        help="model setting label (default: nearest warehouse with 0-72 h delay)",
    )
    out_arg(p_opt)
    jobs_arg(p_opt)
    p_opt.set_defaults(handler=_cmd_optimize)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 3
    try:
        return args.handler(args)
    except ScenarioError as exc:
        for message in exc.messages:
            print(f"error: {message}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
