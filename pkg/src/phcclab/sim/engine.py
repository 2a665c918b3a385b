"""Deterministic discrete-event engine.

Simulated time is kept as integer nanoseconds so that event ordering never
depends on floating-point rounding. Events at the same instant run in the
order they were scheduled (a monotone insertion counter breaks ties), which
makes a run a pure function of its configuration and seed.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass
from typing import Any, Callable

from ..errors import SimulationError

NS_PER_S = 1_000_000_000


def to_ns(seconds: float) -> int:
    return int(round(seconds * NS_PER_S))


def to_seconds(ns: int) -> float:
    return ns / NS_PER_S


@dataclass
class RunStats:
    events_processed: int
    now_ns: int
    pending: int

    @property
    def now(self) -> float:
        return to_seconds(self.now_ns)


class Engine:
    """Priority queue of ``(time_ns, seq, callback, args)`` entries.

    When ``trace`` is true, components may call :meth:`log` to append
    records; :meth:`trace_digest` hashes them for determinism checks.
    """

    def __init__(self, trace: bool = False):
        self.now = 0
        self._heap: list[tuple[int, int, Callable[..., Any], tuple]] = []
        self._seq = 0
        self.events_processed = 0
        self.trace: list[tuple] | None = [] if trace else None

    def schedule_at(self, time_ns: int, callback: Callable[..., Any], *args: Any) -> None:
        if time_ns < self.now:
            raise SimulationError(
                f"event scheduled in the past: {time_ns} < now {self.now}"
            )
        self._seq += 1
        heapq.heappush(self._heap, (time_ns, self._seq, callback, args))

    def schedule(self, delay_ns: int, callback: Callable[..., Any], *args: Any) -> None:
        self.schedule_at(self.now + delay_ns, callback, *args)

    def run_until(self, t_end_ns: int) -> RunStats:
        if t_end_ns < self.now:
            raise SimulationError(f"run_until({t_end_ns}) is before now ({self.now})")
        heap = self._heap
        pop = heapq.heappop
        processed = 0
        while heap and heap[0][0] <= t_end_ns:
            time_ns, _, callback, args = pop(heap)
            self.now = time_ns
            callback(*args)
            processed += 1
        self.now = t_end_ns
        self.events_processed += processed
        return RunStats(processed, self.now, len(heap))

    def pending_events(self) -> list[tuple[int, int, Callable[..., Any], tuple]]:
        """Snapshot of scheduled events, in no particular order."""
        return list(self._heap)

    def log(self, *record: Any) -> None:
        if self.trace is not None:
            self.trace.append((self.now,) + record)

    def trace_digest(self) -> str:
        h = hashlib.sha256()
        for rec in self.trace or ():
            h.update(repr(rec).encode())
            h.update(b"\n")
        return h.hexdigest()
