"""Generate the bundled default scenario JSON.

A synthetic Southwest US network: one container port (San Pedro) and 35
warehouses laid out along an inland corridor. The layout is built from
(range, bearing) pairs rather than surveyed coordinates so the distance
structure that the simulation behavior depends on stays exact:

  * one oversized storage yard sits nearest the port, rail-capable, with
    no delivery trucks of its own; it holds whatever lands in it
  * a trunk hub and two gateways in the mid ring take full train drops
    and carry most of the delivery fleet
  * fourteen small relays with token fleets force partial train drops
  * seven remote yards at the far edge of the replenish range take full
    drops and, like the near yard, never move anything on
  * one outpost past the 250 mi replenish range is truck-only
  * five local depots and four small lots are truck-only

Demand splits seven big markets (rail-sized monthly lots) from eleven
small ones (truck-sized lots). The monthly total is pinned to a whole
number of trainloads plus a sub-trainload remainder so the split between
rail and road work is stable across months.

Run from the repository root:

    python3 tools/make_default_scenario.py
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from portsim.domain import load_scenario
from portsim.geo import EARTH_RADIUS_MILES, great_circle_distance

PORT = ("San Pedro", 33.74, -118.27)

TRAIN_CAP = 4079.0
MONTHLY_REMAINDER = 1400.0
MONTHLY_TONS = 13 * TRAIN_CAP + MONTHLY_REMAINDER
ANNUAL_TONS = 12 * MONTHLY_TONS
SMALL_LOT = 300.0

# warehouse rows: (name, miles, bearing, capacity, fleet, intermodal)
NEAR_YARD_CAP = 160 * TRAIN_CAP
REMOTE_YARD_CAP = 20 * TRAIN_CAP
WAREHOUSES = [
    # near yard: closest rail target, big enough to absorb a full year
    ("Wilmington Yard", 50.0, 38.0, NEAR_YARD_CAP, 0, True),
    # trunk hub and gateways: mid-ring full-drop targets with real fleets
    ("Victorville Hub", 220.0, 52.0, 30_000.0, 144, True),
    ("Adelanto Gateway", 230.0, 44.0, 25_000.0, 9, True),
    ("Apple Valley Gateway", 240.0, 60.0, 25_000.0, 9, True),
    # relays: small rail-capable buffers, one truck each
    ("Fontana Relay", 150.0, 74.0, 1_000.0, 1, True),
    ("Rialto Relay", 155.0, 30.0, 1_000.0, 1, True),
    ("Colton Relay", 160.0, 48.0, 1_000.0, 1, True),
    ("Redlands Relay", 165.0, 56.0, 1_000.0, 1, True),
    ("Beaumont Relay", 170.0, 64.0, 1_000.0, 1, True),
    ("Banning Relay", 175.0, 40.0, 1_000.0, 1, True),
    ("Cabazon Relay", 180.0, 52.0, 1_000.0, 1, True),
    ("Indio Relay", 185.0, 36.0, 1_000.0, 1, True),
    ("Amboy Relay", 190.0, 60.0, 1_000.0, 1, True),
    ("Essex Relay", 195.0, 66.0, 1_000.0, 1, True),
    ("Goffs Relay", 200.0, 44.0, 1_000.0, 1, True),
    ("Fenner Relay", 205.0, 58.0, 1_000.0, 1, True),
    ("Siberia Relay", 210.0, 70.0, 1_000.0, 1, True),
    ("Bagdad Relay", 215.0, 34.0, 1_000.0, 1, True),
    # remote yards: far edge of the truck range, rail-capable, no fleet
    ("Hinkley Yard", 232.0, 46.0, REMOTE_YARD_CAP, 0, True),
    ("Yermo Yard", 235.0, 58.0, REMOTE_YARD_CAP, 0, True),
    ("Dunn Yard", 238.0, 38.0, REMOTE_YARD_CAP, 0, True),
    ("Baker Yard", 241.0, 64.0, REMOTE_YARD_CAP, 0, True),
    ("Cima Yard", 244.0, 50.0, REMOTE_YARD_CAP, 0, True),
    ("Kelso Yard", 247.0, 70.0, REMOTE_YARD_CAP, 0, True),
    ("Nipton Yard", 250.0, 42.0, REMOTE_YARD_CAP, 0, True),
    # outpost: past the 250 mi replenish threshold, truck-only
    ("Kingman Outpost", 520.0, 68.0, 6_000.0, 1, False),
    # local depots: truck-only, most of the remaining fleet
    ("Carson Depot", 20.0, 40.0, 300.0, 21, False),
    ("Fullerton Depot", 28.0, 56.0, 300.0, 21, False),
    ("Chino Depot", 36.0, 48.0, 300.0, 21, False),
    ("Corona Depot", 44.0, 64.0, 300.0, 20, False),
    ("Pomona Depot", 52.0, 58.0, 300.0, 20, False),
    # lots: truck-only, no fleet; they fill and stay full
    ("Anaheim Lot", 25.0, 50.0, 500.0, 0, False),
    ("Yorba Lot", 31.0, 44.0, 500.0, 0, False),
    ("Norco Lot", 38.0, 58.0, 500.0, 0, False),
    ("Moreno Lot", 45.0, 68.0, 500.0, 0, False),
]

# destination rows: (name, miles, bearing); big markets carry equal shares
# of everything the small markets do not take
BIG_DEST = [
    ("Las Vegas Market", 250.0, 46.0),
    ("Laughlin Market", 270.0, 62.0),
    ("Kingman Market", 290.0, 70.0),
    ("Mesquite Market", 310.0, 50.0),
    ("St. George Market", 330.0, 56.0),
    ("Page Market", 355.0, 66.0),
    ("Flagstaff Market", 380.0, 74.0),
]

SMALL_DEST = [
    ("Hesperia Market", 75.0, 40.0),
    ("Victorville Market", 85.0, 54.0),
    ("Apple Valley Market", 95.0, 62.0),
    ("Lucerne Market", 105.0, 72.0),
    ("Barstow Market", 115.0, 46.0),
    ("Daggett Market", 125.0, 58.0),
    ("Newberry Market", 135.0, 64.0),
    ("Ludlow Market", 145.0, 50.0),
    ("Kramer Market", 155.0, 34.0),
    ("Amboy Market", 165.0, 60.0),
    ("Essex Market", 175.0, 66.0),
]

PORT_TRUCKS = 15
PORT_TRAINS = 2
TOTAL_WH_TRUCKS = 280


def place(miles: float, bearing_deg: float) -> tuple[float, float]:
    """Coordinates of the point `miles` from the port along `bearing_deg`."""
    _, lat1, lon1 = PORT
    d = miles / EARTH_RADIUS_MILES
    th = math.radians(bearing_deg)
    p1 = math.radians(lat1)
    l1 = math.radians(lon1)
    p2 = math.asin(math.sin(p1) * math.cos(d) + math.cos(p1) * math.sin(d) * math.cos(th))
    l2 = l1 + math.atan2(
        math.sin(th) * math.sin(d) * math.cos(p1),
        math.cos(d) - math.sin(p1) * math.sin(p2),
    )
    return round(math.degrees(p2), 6), round(math.degrees(l2), 6)


def main() -> None:
    port_name, port_lat, port_lon = PORT
    nodes = [
        {"id": 0, "kind": "port", "name": port_name, "lat": port_lat, "lon": port_lon}
    ]

    next_id = 10
    for name, miles, bearing, cap, fleet, intermodal in WAREHOUSES:
        lat, lon = place(miles, bearing)
        got = great_circle_distance(port_lat, port_lon, lat, lon)
        if abs(got - miles) > 1.5:
            raise SystemExit(f"{name}: placed at {got:.1f} mi, wanted {miles:.1f}")
        nodes.append(
            {
                "id": next_id,
                "kind": "warehouse",
                "name": name,
                "lat": lat,
                "lon": lon,
                "intermodal": intermodal,
                "capacity_tons": cap,
                "fleet": fleet,
            }
        )
        next_id += 1

    shares = []
    dest_id = 100
    big_lot = (MONTHLY_TONS - SMALL_LOT * len(SMALL_DEST)) / len(BIG_DEST)
    if big_lot < TRAIN_CAP * 1.05:
        raise SystemExit("big market lots fell below a comfortable trainload")
    if SMALL_LOT > TRAIN_CAP * 0.5:
        raise SystemExit("small market lots are too close to a trainload")
    for name, miles, bearing in BIG_DEST:
        lat, lon = place(miles, bearing)
        nodes.append(
            {"id": dest_id, "kind": "destination", "name": name, "lat": lat, "lon": lon}
        )
        shares.append({"destination": dest_id, "fraction": big_lot / MONTHLY_TONS})
        dest_id += 1
    for name, miles, bearing in SMALL_DEST:
        lat, lon = place(miles, bearing)
        nodes.append(
            {"id": dest_id, "kind": "destination", "name": name, "lat": lat, "lon": lon}
        )
        shares.append({"destination": dest_id, "fraction": SMALL_LOT / MONTHLY_TONS})
        dest_id += 1

    document = {
        "name": "socal-gateway",
        "note": "synthetic geography and capacities; not survey data",
        "nodes": nodes,
        "demand": {"annual_tons": ANNUAL_TONS, "shares": shares},
        "port": {"trucks": PORT_TRUCKS, "trains": PORT_TRAINS},
        "total_warehouse_trucks": TOTAL_WH_TRUCKS,
        "horizon_months": 12,
    }

    scenario = load_scenario(document)
    whs = scenario.warehouses()
    assert len(whs) == 35
    assert len(scenario.destinations()) == 18
    assert sum(1 for w in whs if w.intermodal) == 25
    assert sum(1 for w in whs if not w.intermodal) == 10
    assert sum(w.fleet for w in whs) == TOTAL_WH_TRUCKS
    assert any(
        great_circle_distance(port_lat, port_lon, w.lat, w.lon) > 500.0 for w in whs
    )

    out = Path(__file__).resolve().parents[1] / "src/portsim/data/default_scenario.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(document, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    print(f"  monthly demand {MONTHLY_TONS:.0f} t = 13 trainloads + {MONTHLY_REMAINDER:.0f} t")
    print(f"  big market lot {big_lot:.1f} t/month, small {SMALL_LOT:.0f} t/month")


if __name__ == "__main__":
    main()
