"""Discrete-event core: simulation clock, future-event list, named seeded
random streams, and resource pools with busy-time accounting.

One kernel instance drives one run. Time is in hours. Events fire in
(fire_at, sequence) order, so simultaneous events pop in schedule order
and every run is deterministic for a fixed seed.
"""

from __future__ import annotations

import hashlib
import heapq
from collections import deque
from typing import Callable

import numpy as np

TraceRecord = tuple[float, int, str, str]


class SimulationError(RuntimeError):
    """An engine contract was violated (usually an agent-logic bug)."""


class EventQueue:
    """Future-event list with a monotone clock.

    The optional ``trace`` sink receives one ``(fire_at, sequence, kind,
    details)`` tuple per popped event and per agent-emitted record; both
    share one sequence counter so the trace is totally ordered.
    """

    def __init__(self, trace: list[TraceRecord] | None = None) -> None:
        self.clock: float = 0.0
        self.trace = trace
        # Invoked after every event callback; lets callers assert invariants
        # (e.g. conservation checks) at every state transition.
        self.after_event: Callable[[], None] | None = None
        self._heap: list[tuple[float, int, str, Callable[[], None]]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, fire_at: float, callback: Callable[[], None], kind: str = "event") -> int:
        """Queue ``callback`` to run at ``fire_at``. Returns its sequence number."""
        if fire_at < self.clock:
            raise SimulationError(
                f"past event: cannot schedule {kind!r} at {fire_at} when clock is {self.clock}"
            )
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (fire_at, seq, kind, callback))
        return seq

    def emit(self, kind: str, details: str) -> None:
        """Append an agent record to the trace at the current clock."""
        if self.trace is None:
            return
        seq = self._seq
        self._seq += 1
        self.trace.append((self.clock, seq, kind, details))

    def advance(self) -> bool:
        """Pop and run the next event. Returns False when the list is empty."""
        if not self._heap:
            return False
        fire_at, seq, kind, callback = heapq.heappop(self._heap)
        self.clock = fire_at
        if self.trace is not None:
            self.trace.append((fire_at, seq, kind, ""))
        callback()
        if self.after_event is not None:
            self.after_event()
        return True

    def run(self, until: float | None = None) -> None:
        """Run events in order; stop after the last event at or before ``until``."""
        if until is None:
            while self.advance():
                pass
            return
        while self._heap and self._heap[0][0] <= until:
            self.advance()


def _name_entropy(name: str) -> int:
    # Stable across processes and platforms, unlike hash().
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class RngStream:
    """A named random stream derived from (run seed, name).

    Streams with different names are statistically independent, and the
    sequence for a given (seed, name) never depends on draw order in any
    other stream.
    """

    def __init__(self, run_seed: int, name: str) -> None:
        if run_seed < 0:
            raise SimulationError(f"run seed must be non-negative, got {run_seed}")
        self.name = name
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([run_seed, _name_entropy(name)]))
        )

    def uniform_sample(self, lo: float, hi: float) -> float:
        if lo > hi:
            raise SimulationError(f"uniform_sample bounds reversed: [{lo}, {hi}]")
        if lo == hi:
            return lo
        return lo + (hi - lo) * self._gen.random()

    def index(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise SimulationError(f"index needs a positive range, got {n}")
        return int(self._gen.integers(0, n))

    def choose(self, n: int, k: int) -> list[int]:
        """k distinct indices sampled uniformly from range(n)."""
        if k > n:
            raise SimulationError(f"cannot choose {k} from {n}")
        return [int(i) for i in self._gen.choice(n, size=k, replace=False)]


class ResourcePool:
    """Counted units (trucks, trains) with FIFO waiters and busy accounting.

    ``busy_unit_hours`` accrues when a unit is released; utilization over a
    horizon also counts units still busy at the horizon. Callers either poll
    with try_acquire (and stay idle on None) or join the FIFO wait queue
    with acquire.
    """

    def __init__(self, name: str, capacity: int) -> None:
        if capacity < 0:
            raise SimulationError(f"pool {name!r}: negative capacity {capacity}")
        self.name = name
        self.capacity = capacity
        self.busy_unit_hours = 0.0
        self._idle: deque[int] = deque(range(capacity))
        self._busy_since: dict[int, float] = {}
        self._waiters: deque[Callable[[int], None]] = deque()

    @property
    def busy(self) -> int:
        return len(self._busy_since)

    def try_acquire(self, now: float) -> int | None:
        """Take an idle unit, or None without queueing."""
        if not self._idle:
            return None
        unit = self._idle.popleft()
        self._busy_since[unit] = now
        return unit

    def acquire(self, now: float, on_grant: Callable[[int], None]) -> None:
        """Grant an idle unit immediately, else wait in FIFO order."""
        unit = self.try_acquire(now)
        if unit is not None:
            on_grant(unit)
        else:
            self._waiters.append(on_grant)

    def release(self, now: float, unit: int) -> None:
        """Return a unit; the head waiter (if any) is granted at the same time."""
        if unit not in self._busy_since:
            raise SimulationError(f"pool {self.name!r}: release of idle unit {unit}")
        start = self._busy_since.pop(unit)
        self.busy_unit_hours += now - start
        if self._waiters:
            on_grant = self._waiters.popleft()
            self._busy_since[unit] = now
            on_grant(unit)
        else:
            self._idle.append(unit)

    def utilization(self, horizon: float) -> float:
        """busy-unit-hours over capacity-hours, counting still-busy units."""
        if horizon <= 0:
            raise SimulationError(f"pool {self.name!r}: non-positive horizon {horizon}")
        if self.capacity == 0:
            return 0.0
        hours = self.busy_unit_hours
        for start in self._busy_since.values():
            hours += max(0.0, horizon - start)
        value = hours / (self.capacity * horizon)
        if value > 1.0 + 1e-9:
            raise SimulationError(
                f"pool {self.name!r}: utilization {value} above 1; busy intervals leaked"
            )
        return min(1.0, value)
