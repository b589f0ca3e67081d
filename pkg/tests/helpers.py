"""Scenario builders shared by the behavioral and experiment suites."""

from __future__ import annotations

import math

from portsim.domain import Scenario, load_scenario

MILES_PER_DEGREE = 3958.8 * math.pi / 180.0


def lat_at(base_lat: float, miles: float) -> float:
    """Latitude `miles` north of base_lat along one meridian.

    On a meridian the haversine distance is exactly radius * delta-lat,
    which makes hand-computed leg distances exact.
    """
    return base_lat + miles / MILES_PER_DEGREE


def build_scenario(
    warehouses,
    destinations,
    annual_tons,
    shares,
    *,
    port=(30.0, -100.0),
    port_trucks=15,
    port_trains=2,
    total_warehouse_trucks=None,
    horizon_months=12,
    congested_links=None,
    name="test",
) -> Scenario:
    """Compact scenario assembly for tests.

    warehouses: list of dicts with keys lat, lon, intermodal, capacity, fleet.
    destinations: list of (lat, lon).
    shares: {destination index -> fraction} over the destinations list.
    The default port sits outside California so nothing is congested unless
    asked for.
    """
    nodes = [{"id": 0, "kind": "port", "lat": port[0], "lon": port[1]}]
    wh_ids = []
    for i, w in enumerate(warehouses):
        node_id = 10 + i
        wh_ids.append(node_id)
        nodes.append(
            {
                "id": node_id,
                "kind": "warehouse",
                "lat": w["lat"],
                "lon": w["lon"],
                "intermodal": w.get("intermodal", True),
                "capacity_tons": w["capacity"],
                **({"fleet": w["fleet"]} if "fleet" in w else {}),
            }
        )
    dest_ids = []
    for j, (lat, lon) in enumerate(destinations):
        node_id = 100 + j
        dest_ids.append(node_id)
        nodes.append({"id": node_id, "kind": "destination", "lat": lat, "lon": lon})
    doc = {
        "name": name,
        "nodes": nodes,
        "demand": {
            "annual_tons": annual_tons,
            "shares": [
                {"destination": dest_ids[j], "fraction": f} for j, f in shares.items()
            ],
        },
        "port": {"trucks": port_trucks, "trains": port_trains},
        "horizon_months": horizon_months,
    }
    if total_warehouse_trucks is None:
        total_warehouse_trucks = sum(w.get("fleet", 0) for w in warehouses)
        if total_warehouse_trucks == 0:
            total_warehouse_trucks = 280
    doc["total_warehouse_trucks"] = total_warehouse_trucks
    if congested_links is not None:
        doc["congested_links"] = congested_links
    return load_scenario(doc)
