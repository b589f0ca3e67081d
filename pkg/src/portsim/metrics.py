"""Ledgers and reports: cost accounting, unmet demand, dwell statistics,
and machine-readable CSV emission.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .domain import CostTable, Mode, leg_cost


@dataclass
class Leg:
    mode: Mode
    miles: float
    congested: bool
    dollars: float
    at: float


@dataclass
class CostLedger:
    """Operating cost accumulates per leg; capital is booked separately.

    ``legs`` is None unless the caller wants the full per-leg record (it is
    memory-heavy on large sweeps).
    """

    operating_dollars: float = 0.0
    capital_dollars: float = 0.0
    legs: list[Leg] | None = None


def record_leg(
    ledger: CostLedger,
    mode: Mode,
    miles: float,
    congested: bool,
    cost_table: CostTable,
    at: float,
) -> float:
    """Price one leg, add it to the ledger, return the dollars added."""
    dollars = leg_cost(mode, miles, congested, cost_table)
    ledger.operating_dollars += dollars
    if ledger.legs is not None:
        ledger.legs.append(Leg(mode, miles, congested, dollars, at))
    return dollars


@dataclass
class DemandLedger:
    demanded: dict[int, float] = field(default_factory=dict)
    delivered: dict[int, float] = field(default_factory=dict)

    def add_demand(self, destination: int, tons: float) -> None:
        self.demanded[destination] = self.demanded.get(destination, 0.0) + tons

    def credit(self, destination: int, tons: float) -> None:
        self.delivered[destination] = self.delivered.get(destination, 0.0) + tons

    def unmet_demand(self) -> float:
        """Outstanding tons, floored at zero per destination."""
        return sum(
            max(0.0, want - self.delivered.get(dest, 0.0))
            for dest, want in self.demanded.items()
        )

    def total_demanded(self) -> float:
        return sum(self.demanded.values())

    def total_delivered(self) -> float:
        return sum(self.delivered.values())


@dataclass(frozen=True)
class DwellStats:
    truck_count: int
    truck_mean_days: float | None
    truck_max_days: float | None
    rail_count: int
    rail_mean_days: float | None
    rail_max_days: float | None
    unpicked_count: int


def dwell_summary(shipments) -> DwellStats:
    """Per-mode pickup waits in days; unpicked lots are counted, not averaged."""
    by_mode: dict[Mode, list[float]] = {Mode.TRUCK: [], Mode.RAIL: []}
    unpicked = 0
    for s in shipments:
        if s.picked_up_at is None:
            unpicked += 1
            continue
        days = (s.picked_up_at - s.created_at) / 24.0
        by_mode[s.pickup_mode].append(days)
    trucks, rails = by_mode[Mode.TRUCK], by_mode[Mode.RAIL]
    return DwellStats(
        truck_count=len(trucks),
        truck_mean_days=sum(trucks) / len(trucks) if trucks else None,
        truck_max_days=max(trucks) if trucks else None,
        rail_count=len(rails),
        rail_mean_days=sum(rails) / len(rails) if rails else None,
        rail_max_days=max(rails) if rails else None,
        unpicked_count=unpicked,
    )


@dataclass(frozen=True)
class RunResult:
    """Everything one replication reports."""

    setting_label: str
    p: int
    seed: int
    unmet_tons: float
    port_fleet_utilization: float
    port_rail_utilization: float
    operating_cost: float
    capital_cost: float
    rail_dwell_days: float | None
    truck_dwell_days: float | None
    warehouse_utilizations: tuple[tuple[int, float], ...]
    dwell: DwellStats
    demanded_tons: float
    delivered_tons: float
    horizon_hours: float


REPORT_COLUMNS = (
    "setting",
    "p",
    "seed",
    "unmet_tons",
    "port_fleet_util",
    "port_rail_util",
    "operating_cost",
    "capital_cost",
    "rail_dwell_days",
    "truck_dwell_days",
)


def _num(value: float | None) -> str:
    return "" if value is None else repr(value)


def emit_report(results: list[RunResult], fmt: str = "csv") -> str:
    """One row per run. CSV column order is part of the contract."""
    if not results:
        raise ValueError("no results to report")
    if fmt == "text":
        out = io.StringIO()
        for r in results:
            rail = "n/a" if r.rail_dwell_days is None else f"{r.rail_dwell_days:.2f} d"
            truck = "n/a" if r.truck_dwell_days is None else f"{r.truck_dwell_days:.2f} d"
            out.write(
                f"{r.setting_label} p={r.p} seed={r.seed}: "
                f"unmet {r.unmet_tons:.1f} t, fleet {r.port_fleet_utilization:.1%}, "
                f"rail {r.port_rail_utilization:.1%}, "
                f"operating ${r.operating_cost:,.1f}, capital ${r.capital_cost:,.0f}, "
                f"dwell rail {rail} / truck {truck}\n"
            )
        return out.getvalue()
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in results:
        writer.writerow(
            [
                r.setting_label,
                r.p,
                r.seed,
                _num(r.unmet_tons),
                _num(r.port_fleet_utilization),
                _num(r.port_rail_utilization),
                _num(r.operating_cost),
                _num(r.capital_cost),
                _num(r.rail_dwell_days),
                _num(r.truck_dwell_days),
            ]
        )
    return out.getvalue()


def parse_report(text: str) -> list[dict]:
    """Read emit_report CSV back into typed rows (round-trip safe)."""
    rows = []
    reader = csv.DictReader(io.StringIO(text))
    for raw in reader:
        row: dict = {"setting": raw["setting"], "p": int(raw["p"]), "seed": int(raw["seed"])}
        for key in REPORT_COLUMNS[3:]:
            row[key] = float(raw[key]) if raw[key] != "" else None
        rows.append(row)
    return rows


SUMMARY_COLUMNS = (
    "setting",
    "runs",
    "unmet_mean",
    "unmet_min",
    "fleet_util_mean",
    "fleet_util_min",
    "rail_util_mean",
    "rail_util_min",
    "operating_cost_mean",
    "operating_cost_min",
)


def summarize(results: list[RunResult]) -> list[dict]:
    """Per-setting mean and min rows, in first-seen setting order."""
    if not results:
        raise ValueError("no results to summarize")
    order: list[str] = []
    groups: dict[str, list[RunResult]] = {}
    for r in results:
        if r.setting_label not in groups:
            order.append(r.setting_label)
            groups[r.setting_label] = []
        groups[r.setting_label].append(r)
    rows = []
    for label in order:
        g = groups[label]
        n = len(g)
        rows.append(
            {
                "setting": label,
                "runs": n,
                "unmet_mean": sum(r.unmet_tons for r in g) / n,
                "unmet_min": min(r.unmet_tons for r in g),
                "fleet_util_mean": sum(r.port_fleet_utilization for r in g) / n,
                "fleet_util_min": min(r.port_fleet_utilization for r in g),
                "rail_util_mean": sum(r.port_rail_utilization for r in g) / n,
                "rail_util_min": min(r.port_rail_utilization for r in g),
                "operating_cost_mean": sum(r.operating_cost for r in g) / n,
                "operating_cost_min": min(r.operating_cost for r in g),
            }
        )
    return rows


def emit_summary(results: list[RunResult]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in summarize(results):
        writer.writerow(
            [row["setting"], row["runs"]]
            + [_num(row[c]) for c in SUMMARY_COLUMNS[2:]]
        )
    return out.getvalue()


def emit_warehouse_utils(results: list[RunResult]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["setting", "seed", "warehouse_id", "utilization"])
    for r in results:
        for node_id, util in r.warehouse_utilizations:
            writer.writerow([r.setting_label, r.seed, node_id, _num(util)])
    return out.getvalue()
