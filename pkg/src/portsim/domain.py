"""World model: nodes, cost and vehicle tables, demand, scenario ingestion,
warehouse aggregation, fleet allocation, and intermodal installation.

Everything here is immutable after load, so scenarios can be shared freely
across concurrent replications.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum

from .geo import great_circle_distance
from .kernel import RngStream


class ScenarioError(ValueError):
    """Validation failure; carries one message per offending field."""

    def __init__(self, messages: list[str]) -> None:
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class NodeKind(str, Enum):
    PORT = "port"
    WAREHOUSE = "warehouse"
    DESTINATION = "destination"


class Mode(str, Enum):
    TRUCK = "truck"
    RAIL = "rail"


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    name: str
    lat: float
    lon: float
    intermodal: bool = False
    capacity_tons: float | None = None
    fleet: int | None = None


@dataclass(frozen=True)
class CostTable:
    truck_congested_per_mile: float = 1.96
    truck_free_per_mile: float = 1.65
    rail_long_per_mile: float = 110.79
    rail_short_per_mile: float = 2380.55
    facility_upgrade: float = 900_000.0
    rail_short_haul_threshold: float = 500.0
    truck_long_haul_threshold: float = 250.0


@dataclass(frozen=True)
class VehicleSpec:
    truck_capacity_tons: float = 8.475
    train_capacity_tons: float = 4079.0
    truck_speed_mph: float = 50.0
    train_speed_mph: float = 25.0
    truck_service_hours: float = 2.0
    train_service_hours: float = 8.0


@dataclass(frozen=True)
class DemandTable:
    annual_tons: float
    shares: tuple[tuple[int, float], ...]  # (destination id, fraction), normalized


HOURS_PER_MONTH = 730.0


@dataclass(frozen=True)
class Scenario:
    name: str
    nodes: tuple[Node, ...]
    cost_table: CostTable
    vehicle_spec: VehicleSpec
    demand: DemandTable
    port_trucks: int = 15
    port_trains: int = 2
    total_warehouse_trucks: int = 280
    horizon_months: int = 12
    congested_links: frozenset[tuple[int, int]] = frozenset()
    _by_id: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    @property
    def horizon_hours(self) -> float:
        return self.horizon_months * HOURS_PER_MONTH

    def node(self, node_id: int) -> Node:
        return self._by_id[node_id]

    def port(self) -> Node:
        return next(n for n in self.nodes if n.kind is NodeKind.PORT)

    def warehouses(self) -> list[Node]:
        return [n for n in self.nodes if n.kind is NodeKind.WAREHOUSE]

    def destinations(self) -> list[Node]:
        return [n for n in self.nodes if n.kind is NodeKind.DESTINATION]

    def distance(self, a: int, b: int) -> float:
        na, nb = self._by_id[a], self._by_id[b]
        return great_circle_distance(na.lat, na.lon, nb.lat, nb.lon)

    def is_congested(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.congested_links


def leg_cost(mode: Mode, miles: float, congested: bool, cost_table: CostTable) -> float:
    """Dollar cost of one vehicle leg at the table's per-mile rates."""
    if miles < 0:
        raise ValueError(f"negative leg length: {miles}")
    if mode is Mode.TRUCK:
        rate = (
            cost_table.truck_congested_per_mile
            if congested
            else cost_table.truck_free_per_mile
        )
    else:
        rate = (
            cost_table.rail_long_per_mile
            if miles >= cost_table.rail_short_haul_threshold
            else cost_table.rail_short_per_mile
        )
    return miles * rate


def _inside_california(lat: float, lon: float) -> bool:
    # Coarse polygonal stand-in for the state outline; the eastern edge
    # follows the Colorado River southeast and the Nevada diagonal north.
    if lat < 32.5 or lat > 42.0 or lon < -125.0:
        return False
    if lat <= 35.0:
        east = -114.6
    elif lat <= 39.0:
        east = -114.6 - (lat - 35.0) * 1.35
    else:
        east = -120.0
    return lon <= east


def default_congested_links(nodes: list[Node]) -> frozenset[tuple[int, int]]:
    """Pairs with both endpoints inside California are congested by default."""
    inside = [n.id for n in nodes if _inside_california(n.lat, n.lon)]
    links = set()
    for i, a in enumerate(inside):
        for b in inside[i + 1 :]:
            links.add((min(a, b), max(a, b)))
    return frozenset(links)


_NODE_KINDS = {k.value: k for k in NodeKind}


def _parse_section(doc: dict, key: str, cls, errors: list[str]):
    raw = doc.get(key, {})
    if not isinstance(raw, dict):
        errors.append(f"{key}: expected a mapping")
        return cls()
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    for u in sorted(unknown):
        errors.append(f"{key}.{u}: unknown field")
    kwargs = {k: v for k, v in raw.items() if k in known}
    return cls(**kwargs)


def load_scenario(document: dict) -> Scenario:
    """Build a validated Scenario from a parsed scenario document."""
    errors: list[str] = []
    name = str(document.get("name", "scenario"))

    nodes: list[Node] = []
    seen_ids: set[int] = set()
    for i, raw in enumerate(document.get("nodes", [])):
        where = f"nodes[{i}]"
        try:
            node_id = int(raw["id"])
            kind = _NODE_KINDS.get(str(raw["kind"]))
            lat = float(raw["lat"])
            lon = float(raw["lon"])
        except (KeyError, TypeError, ValueError):
            errors.append(f"{where}: needs id, kind, lat, lon")
            continue
        if kind is None:
            errors.append(f"{where}.kind: unknown kind {raw['kind']!r}")
            continue
        if node_id in seen_ids:
            errors.append(f"{where}.id: duplicate id {node_id}")
            continue
        seen_ids.add(node_id)
        if not -90.0 <= lat <= 90.0:
            errors.append(f"{where}.lat: {lat} outside [-90, 90]")
        if not -180.0 <= lon <= 180.0:
            errors.append(f"{where}.lon: {lon} outside [-180, 180]")
        capacity = raw.get("capacity_tons")
        fleet = raw.get("fleet")
        intermodal = bool(raw.get("intermodal", False))
        if kind is NodeKind.WAREHOUSE:
            if capacity is None or float(capacity) <= 0.0:
                errors.append(f"{where}.capacity_tons: warehouse capacity must be positive")
                capacity = 1.0
            capacity = float(capacity)
            if fleet is not None and int(fleet) < 0:
                errors.append(f"{where}.fleet: negative fleet")
        else:
            if capacity is not None:
                errors.append(f"{where}.capacity_tons: only warehouses store freight")
            if fleet is not None:
                errors.append(f"{where}.fleet: only warehouses have fleets")
            if kind is NodeKind.DESTINATION and intermodal:
                errors.append(f"{where}.intermodal: destinations have no rail door")
            capacity, fleet = None, None
        nodes.append(
            Node(
                id=node_id,
                kind=kind,
                name=str(raw.get("name", f"{kind.value}-{node_id}")),
                lat=lat,
                lon=lon,
                intermodal=intermodal if kind is NodeKind.WAREHOUSE else (kind is NodeKind.PORT),
                capacity_tons=capacity,
                fleet=int(fleet) if fleet is not None else None,
            )
        )

    ports = [n for n in nodes if n.kind is NodeKind.PORT]
    warehouses = [n for n in nodes if n.kind is NodeKind.WAREHOUSE]
    destinations = [n for n in nodes if n.kind is NodeKind.DESTINATION]
    if len(ports) != 1:
        errors.append(f"nodes: exactly one port required, found {len(ports)}")
    if not warehouses:
        errors.append("nodes: at least one warehouse required")
    if not destinations:
        errors.append("nodes: at least one destination required")

    cost_table = _parse_section(document, "cost_table", CostTable, errors)
    vehicle_spec = _parse_section(document, "vehicle_spec", VehicleSpec, errors)
    for fld in dataclasses.fields(cost_table):
        if getattr(cost_table, fld.name) < 0:
            errors.append(f"cost_table.{fld.name}: negative rate")
    for fld in dataclasses.fields(vehicle_spec):
        if getattr(vehicle_spec, fld.name) <= 0 and "service" not in fld.name:
            errors.append(f"vehicle_spec.{fld.name}: must be positive")

    demand_raw = document.get("demand")
    dest_ids = {d.id for d in destinations}
    annual = 0.0
    shares: list[tuple[int, float]] = []
    if not isinstance(demand_raw, dict):
        errors.append("demand: section required")
    else:
        try:
            annual = float(demand_raw.get("annual_tons", 0.0))
        except (TypeError, ValueError):
            errors.append("demand.annual_tons: not a number")
        if annual < 0:
            errors.append("demand.annual_tons: negative tonnage")
        raw_shares = demand_raw.get("shares", [])
        total = 0.0
        for j, s in enumerate(raw_shares):
            try:
                dest = int(s["destination"])
                frac = float(s["fraction"])
            except (KeyError, TypeError, ValueError):
                errors.append(f"demand.shares[{j}]: needs destination and fraction")
                continue
            if dest not in dest_ids:
                errors.append(f"demand.shares[{j}].destination: {dest} is not a destination node")
                continue
            if frac <= 0.0:
                errors.append(f"demand.shares[{j}].fraction: share fraction must be positive")
                continue
            shares.append((dest, frac))
            total += frac
        if not shares or total <= 0.0:
            errors.append("demand.shares: fractions must sum to a positive total")
        else:
            shares = sorted(((d, f / total) for d, f in shares), key=lambda x: x[0])

    port_cfg = document.get("port", {})
    port_trucks = int(port_cfg.get("trucks", 15))
    port_trains = int(port_cfg.get("trains", 2))
    total_wh_trucks = int(document.get("total_warehouse_trucks", 280))
    horizon_months = int(document.get("horizon_months", 12))
    if port_trucks <= 0:
        errors.append("port.trucks: must be positive")
    if port_trains <= 0:
        errors.append("port.trains: must be positive")
    if total_wh_trucks <= 0:
        errors.append("total_warehouse_trucks: must be positive")
    if horizon_months < 1:
        errors.append("horizon_months: must be at least 1")

    with_fleet = [w for w in warehouses if w.fleet is not None]
    if with_fleet and len(with_fleet) != len(warehouses):
        errors.append(
            "nodes: warehouse fleet sizes must be given for all warehouses or none"
        )
    elif with_fleet:
        fleet_sum = sum(w.fleet for w in with_fleet)
        if fleet_sum != total_wh_trucks:
            errors.append(
                f"nodes: warehouse fleet sizes sum to {fleet_sum}, "
                f"expected total_warehouse_trucks = {total_wh_trucks}"
            )

    if "congested_links" in document:
        links = set()
        for j, pair in enumerate(document["congested_links"]):
            try:
                a, b = int(pair[0]), int(pair[1])
            except (TypeError, ValueError, IndexError):
                errors.append(f"congested_links[{j}]: expected a pair of node ids")
                continue
            if a not in seen_ids or b not in seen_ids:
                errors.append(f"congested_links[{j}]: unknown node reference ({a}, {b})")
                continue
            if a == b:
                errors.append(f"congested_links[{j}]: link endpoints must differ")
                continue
            links.add((min(a, b), max(a, b)))
        congested = frozenset(links)
    else:
        congested = default_congested_links(nodes)

    if errors:
        raise ScenarioError(errors)

    return Scenario(
        name=name,
        nodes=tuple(sorted(nodes, key=lambda n: n.id)),
        cost_table=cost_table,
        vehicle_spec=vehicle_spec,
        demand=DemandTable(annual_tons=annual, shares=tuple(shares)),
        port_trucks=port_trucks,
        port_trains=port_trains,
        total_warehouse_trucks=total_wh_trucks,
        horizon_months=horizon_months,
        congested_links=congested,
    )


def serialize_scenario(scenario: Scenario) -> dict:
    """Inverse of load_scenario; load(serialize(s)) == s."""
    nodes = []
    for n in sorted(scenario.nodes, key=lambda n: n.id):
        raw: dict = {
            "id": n.id,
            "kind": n.kind.value,
            "name": n.name,
            "lat": n.lat,
            "lon": n.lon,
        }
        if n.kind is NodeKind.WAREHOUSE:
            raw["intermodal"] = n.intermodal
            raw["capacity_tons"] = n.capacity_tons
            if n.fleet is not None:
                raw["fleet"] = n.fleet
        nodes.append(raw)
    return {
        "name": scenario.name,
        "nodes": nodes,
        "cost_table": dataclasses.asdict(scenario.cost_table),
        "vehicle_spec": dataclasses.asdict(scenario.vehicle_spec),
        "demand": {
            "annual_tons": scenario.demand.annual_tons,
            "shares": [
                {"destination": d, "fraction": f} for d, f in scenario.demand.shares
            ],
        },
        "port": {"trucks": scenario.port_trucks, "trains": scenario.port_trains},
        "total_warehouse_trucks": scenario.total_warehouse_trucks,
        "horizon_months": scenario.horizon_months,
        "congested_links": [list(p) for p in sorted(scenario.congested_links)],
    }


def aggregate_warehouses(warehouses: list[Node], target_count: int) -> list[Node]:
    """Greedy nearest-pair merging within each intermodal class.

    The merged node keeps the lower id, sums capacity, and sits at the
    capacity-weighted centroid. Classes never mix, so a rail-capable group
    stays rail-capable.
    """
    if target_count > len(warehouses):
        raise ValueError(
            f"target_count {target_count} above input count {len(warehouses)}"
        )
    if target_count < 1:
        raise ValueError("target_count must be at least 1")
    classes = {w.intermodal for w in warehouses}
    if target_count < len(classes):
        raise ValueError(
            f"cannot reach {target_count} without mixing intermodal classes; "
            f"minimum is {len(classes)}"
        )
    working = list(warehouses)
    while len(working) > target_count:
        best: tuple[float, int, int] | None = None
        for i in range(len(working)):
            for j in range(i + 1, len(working)):
                if working[i].intermodal != working[j].intermodal:
                    continue
                d = great_circle_distance(
                    working[i].lat, working[i].lon, working[j].lat, working[j].lon
                )
                if best is None or d < best[0]:
                    best = (d, i, j)
        assert best is not None  # class-count precondition guarantees a pair
        _, i, j = best
        a, b = working[i], working[j]
        cap = a.capacity_tons + b.capacity_tons
        if a.fleet is None and b.fleet is None:
            fleet = None
        else:
            fleet = (a.fleet or 0) + (b.fleet or 0)
        merged = Node(
            id=min(a.id, b.id),
            kind=NodeKind.WAREHOUSE,
            name=f"{a.name}+{b.name}",
            lat=(a.lat * a.capacity_tons + b.lat * b.capacity_tons) / cap,
            lon=(a.lon * a.capacity_tons + b.lon * b.capacity_tons) / cap,
            intermodal=a.intermodal,
            capacity_tons=cap,
            fleet=fleet,
        )
        working[i] = merged
        del working[j]
    return working


def allocate_fleet(
    total_trucks: int, warehouses: list[Node], allow_zero: bool = False
) -> dict[int, int]:
    """Split a truck total across warehouses, proportional to capacity.

    Largest-remainder rounding keeps the counts summing exactly to
    total_trucks. Unless allow_zero is set, every warehouse gets at least
    one truck.
    """
    if not warehouses:
        raise ValueError("no warehouses to allocate to")
    if total_trucks < 0:
        raise ValueError("negative truck total")
    counts = {w.id: 0 for w in warehouses}
    remaining = total_trucks
    if not allow_zero:
        if total_trucks < len(warehouses):
            raise ValueError(
                f"{total_trucks} trucks cannot give each of {len(warehouses)} warehouses one"
            )
        for w in warehouses:
            counts[w.id] = 1
        remaining = total_trucks - len(warehouses)
    total_capacity = math.fsum(w.capacity_tons for w in warehouses)
    exact = {w.id: remaining * w.capacity_tons / total_capacity for w in warehouses}
    for node_id, value in exact.items():
        counts[node_id] += int(value)
    leftover = total_trucks - sum(counts.values())
    by_remainder = sorted(exact, key=lambda nid: (-(exact[nid] - int(exact[nid])), nid))
    for node_id in by_remainder[:leftover]:
        counts[node_id] += 1
    return counts


def install_intermodal(scenario: Scenario, p: int, stream: RngStream) -> Scenario:
    """Flip p uniformly chosen non-intermodal warehouses to rail-capable.

    Returns a new Scenario; the caller accounts the capital cost of
    p * cost_table.facility_upgrade separately from operating cost.
    """
    candidates = sorted(w.id for w in scenario.warehouses() if not w.intermodal)
    if p < 0 or p > len(candidates):
        raise ValueError(
            f"p={p} infeasible: scenario has {len(candidates)} non-intermodal "
            f"warehouses, so the maximum is {len(candidates)}"
        )
    if p == 0:
        return scenario
    picked = {candidates[i] for i in stream.choose(len(candidates), p)}
    new_nodes = tuple(
        dataclasses.replace(n, intermodal=True) if n.id in picked else n
        for n in scenario.nodes
    )
    return dataclasses.replace(scenario, nodes=new_nodes)
