"""Measure the directional margins of the bundled scenario.

Runs every model setting over a seed range and prints, per setting, the
sweep means that the acceptance checks compare, plus per-seed sign counts
for each comparison. Use it to tune scenario constants before freezing
them:

    python3 tools/probe.py --seeds 8
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from collections import Counter
from importlib import resources
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from portsim.agents import FreightSimulation
from portsim.domain import load_scenario
from portsim.experiments import canonical_settings
from portsim.kernel import RngStream
from portsim.metrics import RunResult

HOURS_PER_MONTH = 730.0


def load_default():
    text = (resources.files("portsim") / "data" / "default_scenario.json").read_text()
    return load_scenario(json.loads(text))


def run_probed(scenario, setting, seed: int, trace):
    from portsim.domain import install_intermodal

    upgraded = install_intermodal(scenario, 0, RngStream(seed, "install"))
    sim = FreightSimulation(
        upgraded,
        selection=setting.selection,
        replenish=setting.replenish,
        seed=seed,
        label=setting.label,
        p=0,
        capital_cost=0.0,
        trace=trace,
    )
    result = sim.run()
    parked = {w.id for w in scenario.warehouses() if w.fleet == 0 and w.intermodal}
    extras = {
        "stock_parked": sum(sim._used[w] for w in sim._used if w in parked),
        "stock_other": sum(sim._used[w] for w in sim._used if w not in parked),
        "port_queue": sim.port_queue_tons,
        "truck_tons": sum(
            s.tons for s in sim.shipments if s.picked_up_at is not None
            and s.pickup_mode.value == "truck"
        ),
    }
    return result, extras


def sweep(scenario, seeds: list[int], with_trace: bool):
    results: dict[str, list[RunResult]] = {}
    extras: dict[str, list[dict]] = {}
    trains_by_month: dict[str, Counter] = {}
    timings: list[float] = []
    for setting in canonical_settings():
        rows = []
        exs = []
        for seed in seeds:
            trace = [] if (with_trace and seed == seeds[0]) else None
            t0 = time.perf_counter()
            row, ex = run_probed(scenario, setting, seed, trace)
            rows.append(row)
            exs.append(ex)
            timings.append(time.perf_counter() - t0)
            if trace is not None:
                months = Counter(
                    int(at // HOURS_PER_MONTH)
                    for at, _, kind, _ in trace
                    if kind == "train.depart"
                )
                trains_by_month[setting.label] = months
        results[setting.label] = rows
        extras[setting.label] = exs
    return results, extras, trains_by_month, timings


def mean(xs):
    xs = [x for x in xs if x is not None]
    return sum(xs) / len(xs) if xs else float("nan")


def fmt_pair(wins: int, total: int) -> str:
    mark = "OK " if wins / total >= 0.75 else "BAD"
    return f"{wins:2d}/{total:<2d} {mark}"


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=8)
    ap.add_argument("--first-seed", type=int, default=1)
    ap.add_argument("--scenario", type=Path, default=None)
    args = ap.parse_args()

    if args.scenario:
        scenario = load_scenario(json.loads(args.scenario.read_text()))
    else:
        scenario = load_default()
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))

    results, extras, trains, timings = sweep(scenario, seeds, with_trace=True)
    n = len(seeds)

    print(f"scenario={scenario.name} seeds={seeds[0]}..{seeds[-1]}")
    print(f"run wall time: mean {mean(timings):.2f}s max {max(timings):.2f}s")
    print()
    header = (
        f"{'setting':<18} {'unmet':>9} {'fleet':>6} {'rail':>6} "
        f"{'dw.rail':>8} {'dw.truck':>8} {'parked':>8} {'other':>7} "
        f"{'portq':>7} {'trkton':>7}"
    )
    print(header)
    for label, rows in results.items():
        exs = extras[label]
        print(
            f"{label:<18} {mean([r.unmet_tons for r in rows]):>9.0f}"
            f" {mean([r.port_fleet_utilization for r in rows]):>6.3f}"
            f" {mean([r.port_rail_utilization for r in rows]):>6.3f}"
            f" {mean([r.rail_dwell_days for r in rows]):>8.2f}"
            f" {mean([r.truck_dwell_days for r in rows]):>8.2f}"
            f" {mean([e['stock_parked'] for e in exs]):>8.0f}"
            f" {mean([e['stock_other'] for e in exs]):>7.0f}"
            f" {mean([e['port_queue'] for e in exs]):>7.0f}"
            f" {mean([e['truck_tons'] for e in exs]):>7.0f}"
        )
    print()

    for label, months in trains.items():
        total = sum(months.values())
        per = " ".join(str(months.get(m, 0)) for m in range(12))
        print(f"trainloads {label:<18} total={total:<4d} by month: {per}")
    print()

    ran = results["RandomWHS"]
    nws = results["N-WHS"]
    d24, d72, d200 = results["DRD(0,24)"], results["DRD(0,72)"], results["DRD(0,200)"]

    wins = sum(
        1 for a, b in zip(nws, ran) if a.port_fleet_utilization < b.port_fleet_utilization
    )
    print(
        f"4a fleet  N<Random   {fmt_pair(wins, n)}   "
        f"means {mean([r.port_fleet_utilization for r in nws]):.3f} vs "
        f"{mean([r.port_fleet_utilization for r in ran]):.3f}"
    )
    wins = sum(
        1 for a, b in zip(nws, ran) if a.port_rail_utilization < b.port_rail_utilization
    )
    print(
        f"4a rail   N<Random   {fmt_pair(wins, n)}   "
        f"means {mean([r.port_rail_utilization for r in nws]):.3f} vs "
        f"{mean([r.port_rail_utilization for r in ran]):.3f}"
    )
    wins = sum(1 for a, b in zip(ran, nws) if a.unmet_tons < b.unmet_tons)
    print(
        f"4b unmet  Random<N   {fmt_pair(wins, n)}   "
        f"means {mean([r.unmet_tons for r in ran]):.0f} vs "
        f"{mean([r.unmet_tons for r in nws]):.0f}"
    )
    for name, lo, hi in (("24->72", d24, d72), ("72->200", d72, d200)):
        wins = sum(
            1
            for a, b in zip(lo, hi)
            if a.port_fleet_utilization <= b.port_fleet_utilization + 1e-12
        )
        print(
            f"4c fleet  {name:<9}  {fmt_pair(wins, n)}   "
            f"means {mean([r.port_fleet_utilization for r in lo]):.3f} -> "
            f"{mean([r.port_fleet_utilization for r in hi]):.3f}"
        )
        wins = sum(1 for a, b in zip(lo, hi) if a.unmet_tons <= b.unmet_tons + 1e-9)
        deltas = [b.unmet_tons - a.unmet_tons for a, b in zip(lo, hi)]
        print(
            f"4c unmet  {name:<9}  {fmt_pair(wins, n)}   "
            f"means {mean([r.unmet_tons for r in lo]):.0f} -> "
            f"{mean([r.unmet_tons for r in hi]):.0f}"
        )
        print(
            "          deltas "
            + " ".join(f"{d:+.0f}" for d in deltas)
            + f"   mean {mean(deltas):+.1f}"
        )

    hot = [sum(1 for _, u in r.warehouse_utilizations if u > 0.6) for r in nws]
    cold = [sum(1 for _, u in r.warehouse_utilizations if u < 0.3) for r in nws]
    need = 0.3 * len(nws[0].warehouse_utilizations)
    ok = sum(1 for h, c in zip(hot, cold) if h >= need and c >= need)
    print(
        f"4d bimodal N-WHS     {fmt_pair(ok, n)}   "
        f"hot {mean(hot):.1f} cold {mean(cold):.1f} (need >= {need:.1f} each)"
    )
    print()

    for label, rows in results.items():
        rail = mean([r.rail_dwell_days for r in rows])
        truck = mean([r.truck_dwell_days for r in rows])
        sign = "OK " if rail > truck else "BAD"
        band = (
            "OK "
            if all(1.0 <= v <= 15.0 for v in (rail, truck))
            else "BAD"
        )
        print(
            f"6 dwell   {label:<18} rail {rail:6.2f}d truck {truck:6.2f}d "
            f"sign {sign} band {band}"
        )

    util_lines = []
    for r in nws[:1]:
        for wid, u in sorted(r.warehouse_utilizations):
            util_lines.append(f"  wh {wid}: {u:.2f}")
    print()
    print(f"N-WHS warehouse utils (seed {seeds[0]}):")
    print("\n".join(util_lines))


if __name__ == "__main__":
    main()
