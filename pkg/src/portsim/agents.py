"""Freight agents: monthly arrivals at the port, the dispatcher that feeds
trains and trucks, trip execution, and per-warehouse delivery fleets.

Dispatch rules, all in one place:

* All arriving lots join a single FIFO queue at the port.
* While the queue holds at least one full trainload and a train is idle,
  the train loads exactly 4,079 tons sliced from the head of the queue.
  A lot straddling the boundary is split; the unpicked remainder keeps its
  place at the head and its original creation time.
* Idle port trucks serve whatever the queue offers them: the whole queue in
  FIFO order when it cannot fill a train, otherwise only the excess beyond
  one protected trainload, taken from the back so the head stays intact for
  the next train.
* A departing train picks its unload stops one at a time while rolling: it
  selects a warehouse under the active policy, reserves what it will drop
  there, and selects again from that location until its cargo is gone. When
  no warehouse has free space the train waits where it is and retries each
  time space is released.
* Warehouse trucks load the oldest stored lot first and carry freight for
  exactly one destination per trip.

Space reservations ("committed" tons) are claimed at selection time and
converted to stored tons on unload, which keeps capacity overflows
structurally impossible rather than merely checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Callable, Sequence

from .domain import DemandTable, Mode, Scenario, allocate_fleet
from .kernel import EventQueue, ResourcePool, RngStream, SimulationError
from .metrics import CostLedger, DemandLedger, RunResult, dwell_summary, record_leg

TON_EPS = 1e-6


class SelectionPolicy(Enum):
    RANDOM_AVAILABLE = "random_available"
    NEAREST_AVAILABLE = "nearest_available"


@dataclass(frozen=True)
class ReplenishPolicy:
    """Driver replenishment stop on long port-truck hauls.

    With ``hi_hours`` set, every port-truck trip longer than
    ``threshold_miles`` waits Uniform(0, hi_hours) before unloading.
    ``hi_hours=None`` disables the stop entirely.
    """

    hi_hours: float | None = None
    threshold_miles: float = 250.0


@dataclass
class Shipment:
    """One lot (or picked piece of a lot) of freight for one destination."""

    tons: float
    destination: int
    created_at: float
    picked_up_at: float | None = None
    pickup_mode: Mode | None = None


@dataclass
class InventoryLot:
    destination: int
    tons: float
    arrived_at: float


@dataclass
class TrainTrip:
    """A rolling train: its remaining cargo and where it currently sits."""

    unit: int
    cargo: list[list]  # [destination, tons] entries, consumed front first
    onboard_tons: float
    location: int


def generate_monthly_arrivals(demand: DemandTable, month_index: int) -> list[Shipment]:
    """One lot per destination share, stamped at the start of the month."""
    created_at = month_index * 730.0
    lots = []
    for destination, fraction in demand.shares:
        tons = demand.annual_tons * fraction / 12.0
        if tons > 0.0:
            lots.append(Shipment(tons=tons, destination=destination, created_at=created_at))
    return lots


def select_warehouse(
    policy: SelectionPolicy,
    views: Sequence[tuple[int, float]],
    needed_tons: float,
    distance_to: Callable[[int], float],
    stream: RngStream,
) -> int | None:
    """Pick a warehouse id from (id, free tons) views, or None.

    A candidate is available when it has strictly positive free space and
    room for needed_tons. Random picks uniformly among the available set;
    nearest takes the shortest distance, ties broken by lower id.
    """
    available = [
        wid
        for wid, free in views
        if free > TON_EPS and free >= needed_tons - TON_EPS
    ]
    if not available:
        return None
    if policy is SelectionPolicy.RANDOM_AVAILABLE:
        return available[stream.index(len(available))]
    return min(available, key=lambda wid: (distance_to(wid), wid))


class FreightSimulation:
    """One replication: wires a scenario to the event kernel and runs it.

    Flow of a ton of freight: port arrival queue -> (train or port truck)
    -> warehouse storage -> warehouse truck -> destination. Mass counters
    along that path let the debug mode prove conservation after every event.
    """

    def __init__(
        self,
        scenario: Scenario,
        selection: SelectionPolicy,
        replenish: ReplenishPolicy,
        seed: int,
        *,
        label: str = "custom",
        p: int = 0,
        capital_cost: float = 0.0,
        trace: list | None = None,
        collect_legs: bool = False,
        debug: bool = False,
    ) -> None:
        self.scenario = scenario
        self.selection = selection
        self.replenish = replenish
        self.seed = seed
        self.label = label
        self.p = p
        self.capital_cost = capital_cost

        self.queue = EventQueue(trace=trace)
        self.costs = CostLedger(legs=[] if collect_legs else None)
        self.demand = DemandLedger()
        self.shipments: list[Shipment] = []

        self._train_stream = RngStream(seed, "train.select")
        self._ptruck_stream = RngStream(seed, "port_truck.select")
        self._replenish_stream = RngStream(seed, "port_truck.replenish")

        self._port_id = scenario.port().id
        warehouses = sorted(scenario.warehouses(), key=lambda n: n.id)
        self._wh_ids = [w.id for w in warehouses]
        self._intermodal_ids = [w.id for w in warehouses if w.intermodal]
        self._capacity = {w.id: w.capacity_tons for w in warehouses}
        if any(w.fleet is None for w in warehouses):
            fleets = allocate_fleet(scenario.total_warehouse_trucks, warehouses)
        else:
            fleets = {w.id: w.fleet for w in warehouses}

        self.train_pool = ResourcePool("trains", scenario.port_trains)
        self.port_truck_pool = ResourcePool("port_trucks", scenario.port_trucks)
        self.warehouse_pools = {
            w: ResourcePool(f"wh{w}_trucks", fleets[w]) for w in self._wh_ids
        }

        self._port_q: list[Shipment] = []
        self.port_queue_tons = 0.0
        self._used = {w: 0.0 for w in self._wh_ids}
        self._committed = {w: 0.0 for w in self._wh_ids}
        self._touched: set[int] = set()
        self._by_dest: dict[int, dict[int, list[InventoryLot]]] = {
            w: {} for w in self._wh_ids
        }
        self._order: dict[int, list[InventoryLot]] = {w: [] for w in self._wh_ids}
        self._wh_pending = {w: False for w in self._wh_ids}
        self._dispatch_pending = False
        self._waiting_trains: list[TrainTrip] = []

        self.generated_tons = 0.0
        self.onboard_tons = 0.0
        self.stored_tons = 0.0
        self.delivered_tons = 0.0

        self._dist_memo: dict[tuple[int, int], float] = {}
        self._setup_done = False
        self._finished = False
        if debug:
            self.queue.after_event = self._check_invariants

    # ------------------------------------------------------------ lifecycle

    def setup(self) -> None:
        """Schedule the monthly arrival events; idempotent."""
        if self._setup_done:
            return
        self._setup_done = True
        for month in range(self.scenario.horizon_months):
            self.queue.schedule(month * 730.0, partial(self._arrive, month), "arrival")

    def run(self) -> RunResult:
        self.setup()
        self.queue.run(until=self.scenario.horizon_hours)
        return self.finish()

    def finish(self) -> RunResult:
        """Freeze metrics at the horizon and build the run report."""
        if self._finished:
            raise SimulationError("finish() called twice")
        self._finished = True
        # lots still queued at the port were never picked up
        self.shipments.extend(self._port_q)
        horizon = self.scenario.horizon_hours
        stats = dwell_summary(self.shipments)
        return RunResult(
            setting_label=self.label,
            p=self.p,
            seed=self.seed,
            unmet_tons=self.demand.unmet_demand(),
            port_fleet_utilization=self.port_truck_pool.utilization(horizon),
            port_rail_utilization=self.train_pool.utilization(horizon),
            operating_cost=self.costs.operating_dollars,
            capital_cost=self.capital_cost,
            rail_dwell_days=stats.rail_mean_days,
            truck_dwell_days=stats.truck_mean_days,
            warehouse_utilizations=tuple(
                (w, self.warehouse_pools[w].utilization(horizon)) for w in self._wh_ids
            ),
            dwell=stats,
            demanded_tons=self.demand.total_demanded(),
            delivered_tons=self.demand.total_delivered(),
            horizon_hours=horizon,
        )

    # ------------------------------------------------------------- arrivals

    def _arrive(self, month: int) -> None:
        for lot in generate_monthly_arrivals(self.scenario.demand, month):
            self.generated_tons += lot.tons
            self.demand.add_demand(lot.destination, lot.tons)
            self._port_q.append(lot)
            self.port_queue_tons += lot.tons
            self.queue.emit(
                "arrival",
                f"month={month} dest={lot.destination} tons={lot.tons!r}",
            )
        self._schedule_dispatch()

    # ------------------------------------------------------------- dispatch

    def _schedule_dispatch(self) -> None:
        # coalesce: many state changes in one event need only one pass
        if self._dispatch_pending:
            return
        self._dispatch_pending = True
        self.queue.schedule(self.queue.clock, self._run_dispatch, "dispatch")

    def _run_dispatch(self) -> None:
        self._dispatch_pending = False
        now = self.queue.clock
        spec = self.scenario.vehicle_spec
        train_cap = spec.train_capacity_tons

        # trains first, so freight they can carry is never nibbled by trucks
        while (
            self.port_queue_tons >= train_cap - TON_EPS
            and self.train_pool.busy < self.train_pool.capacity
        ):
            unit = self.train_pool.try_acquire(now)
            pieces = self._take(self._port_q, train_cap, Mode.RAIL, tail=False)
            self.port_queue_tons -= math.fsum(p.tons for p in pieces)
            self._start_train_trip(unit, pieces)

        truck_cap = spec.truck_capacity_tons
        while self.port_truck_pool.busy < self.port_truck_pool.capacity:
            if self.port_queue_tons >= train_cap - TON_EPS:
                # only the excess beyond one protected trainload, and from
                # the back of the queue so the head stays train-ready
                spare = self.port_queue_tons - train_cap
                if spare <= TON_EPS:
                    break
                amount = min(truck_cap, spare)
                tail = True
            elif self.port_queue_tons > TON_EPS:
                amount = min(truck_cap, self.port_queue_tons)
                tail = False
            else:
                break
            target = self._select_for_port_truck(amount)
            if target is None:
                break
            pieces = self._take(self._port_q, amount, Mode.TRUCK, tail=tail)
            self.port_queue_tons -= math.fsum(p.tons for p in pieces)
            unit = self.port_truck_pool.try_acquire(now)
            self._start_port_truck_trip(unit, target, pieces)

    def _free(self, warehouse: int) -> float:
        return max(
            0.0,
            self._capacity[warehouse]
            - self._used[warehouse]
            - self._committed[warehouse],
        )

    def _select_for_port_truck(self, needed: float) -> int | None:
        views = [(w, self._free(w)) for w in self._wh_ids]
        return select_warehouse(
            SelectionPolicy.RANDOM_AVAILABLE,
            views,
            needed,
            lambda w: self._dist(self._port_id, w),
            self._ptruck_stream,
        )

    # ----------------------------------------------------------- port trips

    def _take(
        self, queue: list[Shipment], amount: float, mode: Mode, tail: bool
    ) -> list[Shipment]:
        """Pull pieces totalling ``amount`` tons off one end of a queue.

        Whole lots keep their identity; a boundary lot is split and the
        unpicked remainder keeps its original creation time and position.
        """
        now = self.queue.clock
        pieces: list[Shipment] = []
        while amount > TON_EPS and queue:
            lot = queue[-1] if tail else queue[0]
            if lot.tons <= amount + TON_EPS:
                queue.pop() if tail else queue.pop(0)
                lot.picked_up_at = now
                lot.pickup_mode = mode
                pieces.append(lot)
                amount -= lot.tons
            else:
                lot.tons -= amount
                pieces.append(
                    Shipment(amount, lot.destination, lot.created_at, now, mode)
                )
                amount = 0.0
        for piece in pieces:
            self.queue.emit(
                "pickup",
                f"mode={piece.pickup_mode.value} dest={piece.destination} "
                f"tons={piece.tons!r} created_at={piece.created_at!r} "
                f"picked_at={now!r}",
            )
        self.shipments.extend(pieces)
        return pieces

    def _start_train_trip(self, unit: int, pieces: list[Shipment]) -> None:
        spec = self.scenario.vehicle_spec
        total = math.fsum(p.tons for p in pieces)
        if abs(total - spec.train_capacity_tons) > 1e-6:
            raise SimulationError(f"train departing with {total} tons, not a full load")
        self.onboard_tons += total
        self.queue.emit("train.depart", f"train={unit} tons={total!r}")
        trip = TrainTrip(
            unit=unit,
            cargo=[[p.destination, p.tons] for p in pieces],
            onboard_tons=total,
            location=self._port_id,
        )
        # loading at the port, then the first stop gets chosen on the move
        self.queue.schedule(
            self.queue.clock + spec.train_service_hours,
            partial(self._train_select_stop, trip),
            "train.roll",
        )

    def _train_select_stop(self, trip: TrainTrip) -> None:
        """Choose the next drop from wherever the train now stands."""
        spec = self.scenario.vehicle_spec
        if trip.onboard_tons <= TON_EPS:
            miles_back = self._dist(trip.location, self._port_id)
            self._record_trip_leg(
                Mode.RAIL, "train.leg", trip.location, self._port_id, miles_back,
                self.queue.clock,
            )
            self.queue.schedule(
                self.queue.clock + miles_back / spec.train_speed_mph,
                partial(self._finish_train_return, trip.unit),
                "train.return",
            )
            return
        views = [(w, self._free(w)) for w in self._intermodal_ids]
        chosen = select_warehouse(
            self.selection,
            views,
            0.0,
            partial(self._dist, trip.location),
            self._train_stream,
        )
        if chosen is None:
            # nowhere to unload: hold position until space is released
            self._waiting_trains.append(trip)
            self.queue.emit(
                "train.wait",
                f"train={trip.unit} at={trip.location} tons={trip.onboard_tons!r}",
            )
            return
        drop = min(trip.onboard_tons, self._free(chosen))
        self._committed[chosen] += drop
        self._touched.add(chosen)
        miles = self._dist(trip.location, chosen)
        self._record_trip_leg(
            Mode.RAIL, "train.leg", trip.location, chosen, miles, self.queue.clock
        )
        done = (
            self.queue.clock
            + miles / spec.train_speed_mph
            + spec.train_service_hours
        )
        self.queue.schedule(
            done, partial(self._finish_train_drop, trip, chosen, drop), "train.drop"
        )

    def _finish_train_drop(self, trip: TrainTrip, warehouse: int, drop: float) -> None:
        deposit: list[tuple[int, float]] = []
        need = drop
        while need > TON_EPS and trip.cargo:
            entry = trip.cargo[0]
            take = min(entry[1], need)
            deposit.append((entry[0], take))
            entry[1] -= take
            need -= take
            if entry[1] <= TON_EPS:
                trip.cargo.pop(0)
        self._committed[warehouse] -= drop
        self._touched.add(warehouse)
        self._store(warehouse, deposit)
        self.onboard_tons -= drop
        trip.onboard_tons -= drop
        trip.location = warehouse
        self.queue.emit("train.drop", f"warehouse={warehouse} tons={drop!r}")
        self._wh_check(warehouse)
        self._train_select_stop(trip)

    def _finish_train_return(self, unit: int) -> None:
        self.train_pool.release(self.queue.clock, unit)
        self.queue.emit("train.return", f"train={unit}")
        self._schedule_dispatch()

    def _wake_waiting_trains(self) -> None:
        if not self._waiting_trains:
            return
        waiting, self._waiting_trains = self._waiting_trains, []
        for trip in waiting:
            self.queue.schedule(
                self.queue.clock, partial(self._train_select_stop, trip), "train.retry"
            )

    def _start_port_truck_trip(self, unit: int, warehouse: int, pieces: list[Shipment]) -> None:
        spec = self.scenario.vehicle_spec
        tons = math.fsum(p.tons for p in pieces)
        self._committed[warehouse] += tons
        self._touched.add(warehouse)
        self.onboard_tons += tons
        miles = self._dist(self._port_id, warehouse)
        depart = self.queue.clock + spec.truck_service_hours
        self._record_trip_leg(
            Mode.TRUCK, "truck.leg", self._port_id, warehouse, miles, depart
        )
        arrive = depart + miles / spec.truck_speed_mph
        delay = 0.0
        if (
            self.replenish.hi_hours is not None
            and miles > self.replenish.threshold_miles
        ):
            delay = self._replenish_stream.uniform_sample(0.0, self.replenish.hi_hours)
            self.queue.emit(
                "truck.replenish",
                f"truck={unit} warehouse={warehouse} hours={delay!r}",
            )
        drop_at = arrive + delay + spec.truck_service_hours
        self._record_trip_leg(
            Mode.TRUCK, "truck.leg", warehouse, self._port_id, miles, drop_at
        )
        deposit = [(p.destination, p.tons) for p in pieces]
        self.queue.schedule(
            drop_at, partial(self._finish_truck_drop, warehouse, deposit), "truck.drop"
        )
        self.queue.schedule(
            drop_at + miles / spec.truck_speed_mph,
            partial(self._finish_truck_return, unit),
            "truck.return",
        )

    def _finish_truck_drop(self, warehouse: int, deposit: list[tuple[int, float]]) -> None:
        total = math.fsum(tons for _, tons in deposit)
        self._committed[warehouse] -= total
        self._touched.add(warehouse)
        self._store(warehouse, deposit)
        self.onboard_tons -= total
        self._wh_check(warehouse)

    def _finish_truck_return(self, unit: int) -> None:
        self.port_truck_pool.release(self.queue.clock, unit)
        self._schedule_dispatch()

    def _store(self, warehouse: int, deposit: list[tuple[int, float]]) -> None:
        now = self.queue.clock
        self._touched.add(warehouse)
        for destination, tons in deposit:
            lot = InventoryLot(destination, tons, now)
            self._by_dest[warehouse].setdefault(destination, []).append(lot)
            self._order[warehouse].append(lot)
            self._used[warehouse] += tons
            self.stored_tons += tons
        if self._used[warehouse] > self._capacity[warehouse] + 1e-6:
            raise SimulationError(
                f"warehouse {warehouse} over capacity; reservation accounting broken"
            )

    # ----------------------------------------------------- warehouse fleet

    def _wh_check(self, warehouse: int) -> None:
        if self._wh_pending[warehouse]:
            return
        self._wh_pending[warehouse] = True
        self.queue.schedule(
            self.queue.clock, partial(self._run_wh_dispatch, warehouse), "wh.dispatch"
        )

    def _run_wh_dispatch(self, warehouse: int) -> None:
        self._wh_pending[warehouse] = False
        spec = self.scenario.vehicle_spec
        pool = self.warehouse_pools[warehouse]
        order = self._order[warehouse]
        now = self.queue.clock
        freed = False
        while True:
            while order and order[0].tons <= TON_EPS:
                order.pop(0)
            if not order or pool.busy >= pool.capacity:
                break
            unit = pool.try_acquire(now)
            destination = order[0].destination
            lots = self._by_dest[warehouse][destination]
            load = 0.0
            while lots and load < spec.truck_capacity_tons - TON_EPS:
                lot = lots[0]
                take = min(lot.tons, spec.truck_capacity_tons - load)
                lot.tons -= take
                load += take
                if lot.tons <= TON_EPS:
                    lots.pop(0)
            self._used[warehouse] -= load
            self._touched.add(warehouse)
            self.stored_tons -= load
            self.onboard_tons += load
            freed = True
            miles = self._dist(warehouse, destination)
            out_at = now + spec.truck_service_hours
            self._record_trip_leg(
                Mode.TRUCK, "wtruck.leg", warehouse, destination, miles, out_at
            )
            deliver_at = out_at + miles / spec.truck_speed_mph + spec.truck_service_hours
            self._record_trip_leg(
                Mode.TRUCK, "wtruck.leg", destination, warehouse, miles, deliver_at
            )
            self.queue.schedule(
                deliver_at,
                partial(self._finish_delivery, warehouse, destination, load),
                "wtruck.deliver",
            )
            self.queue.schedule(
                deliver_at + miles / spec.truck_speed_mph,
                partial(self._finish_wtruck_return, warehouse, unit),
                "wtruck.return",
            )
        if freed:
            # the released floor space may unblock a held train or a truck
            self._wake_waiting_trains()
            self._schedule_dispatch()

    def _finish_delivery(self, warehouse: int, destination: int, tons: float) -> None:
        self.demand.credit(destination, tons)
        self.delivered_tons += tons
        self.onboard_tons -= tons
        self.queue.emit(
            "delivery", f"warehouse={warehouse} dest={destination} tons={tons!r}"
        )

    def _finish_wtruck_return(self, warehouse: int, unit: int) -> None:
        self.warehouse_pools[warehouse].release(self.queue.clock, unit)
        self._wh_check(warehouse)

    # -------------------------------------------------------------- helpers

    def _dist(self, a: int, b: int) -> float:
        key = (a, b) if a <= b else (b, a)
        miles = self._dist_memo.get(key)
        if miles is None:
            miles = self.scenario.distance(*key)
            self._dist_memo[key] = miles
        return miles

    def _record_trip_leg(
        self, mode: Mode, kind: str, a: int, b: int, miles: float, at: float
    ) -> None:
        congested = self.scenario.is_congested(a, b)
        record_leg(self.costs, mode, miles, congested, self.scenario.cost_table, at)
        self.queue.emit(
            kind, f"from={a} to={b} miles={miles!r} congested={int(congested)}"
        )

    def _check_invariants(self) -> None:
        # runs after every event, so stay O(warehouses touched), not O(all)
        moving = (
            self.port_queue_tons
            + self.onboard_tons
            + self.stored_tons
            + self.delivered_tons
        )
        tolerance = 1e-6 * max(1.0, self.generated_tons)
        if abs(moving - self.generated_tons) > tolerance:
            raise SimulationError(
                f"mass leak at t={self.queue.clock}: generated {self.generated_tons}, "
                f"accounted {moving}"
            )
        for w in self._touched:
            if self._used[w] > self._capacity[w] + 1e-6:
                raise SimulationError(f"warehouse {w} stores above capacity")
            if self._committed[w] < -1e-6:
                raise SimulationError(f"warehouse {w} negative reservation")
            if self._used[w] + self._committed[w] > self._capacity[w] + 1e-6:
                raise SimulationError(f"warehouse {w} reserved beyond capacity")
        self._touched.clear()
