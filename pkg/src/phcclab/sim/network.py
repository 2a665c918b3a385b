"""Network elements: packets, point-to-point links, drop-tail queues, random loss."""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field

from ..errors import ConfigError
from .engine import NS_PER_S

DATA = "data"
ACK = "ack"

DATA_BYTES = 1000
ACK_BYTES = 40

_packet_ids = itertools.count()


@dataclass(slots=True)
class Packet:
    flow_id: int
    kind: str
    seq: int = 0
    ack_no: int = 0
    size_bytes: int = DATA_BYTES
    sent_at: int = 0  # ns; echoed back in ACKs for RTT sampling
    retx: bool = False
    id: int = field(default_factory=lambda: next(_packet_ids))

    def __post_init__(self):
        if self.size_bytes <= 0:
            raise ValueError("packet size must be positive")
        if self.seq < 0:
            raise ValueError("sequence numbers are non-negative")


class Link:
    """Unidirectional link with a serializer and a propagation delay.

    ``transmit`` models an unbounded FIFO in front of the serializer: a
    packet offered while the link is busy starts when the previous one
    finishes. Bounded buffering is done by placing a :class:`DropTailQueue`
    in front (see :class:`phcclab.sim.topology.Topology`).
    """

    __slots__ = ("bandwidth_bps", "prop_delay_ns", "busy_until", "_ser_cache", "bits_sent")

    def __init__(self, bandwidth_bps: float, prop_delay_s: float):
        if not bandwidth_bps > 0:
            raise ConfigError(f"link bandwidth must be > 0, got {bandwidth_bps}")
        if prop_delay_s < 0:
            raise ConfigError(f"propagation delay must be >= 0, got {prop_delay_s}")
        self.bandwidth_bps = float(bandwidth_bps)
        self.prop_delay_ns = int(round(prop_delay_s * NS_PER_S))
        self.busy_until = 0
        self.bits_sent = 0
        self._ser_cache: dict[int, int] = {}

    def serialization_ns(self, size_bytes: int) -> int:
        ns = self._ser_cache.get(size_bytes)
        if ns is None:
            ns = int(round(8 * size_bytes * NS_PER_S / self.bandwidth_bps))
            self._ser_cache[size_bytes] = ns
        return ns

    def transmit(self, pkt: Packet, now: int) -> int:
        """Serialize ``pkt`` no earlier than ``now``; return its delivery time (ns)."""
        start = now if now > self.busy_until else self.busy_until
        self.busy_until = start + self.serialization_ns(pkt.size_bytes)
        self.bits_sent += 8 * pkt.size_bytes
        return self.busy_until + self.prop_delay_ns


class DropTailQueue:
    """Bounded FIFO that drops arrivals when full.

    Occupancy counts packets waiting for the serializer; the packet being
    transmitted is not in the queue. A time-weighted area accumulator is
    maintained so the mean occupancy over a run is exact.
    """

    def __init__(self, capacity_pkts: int):
        if capacity_pkts < 1:
            raise ConfigError(f"queue capacity must be >= 1 packet, got {capacity_pkts}")
        self.capacity = int(capacity_pkts)
        self._items: deque[Packet] = deque()
        self.drops = 0
        self.arrivals = 0
        self.max_occupancy = 0
        self._area = 0  # packet * ns
        self._last_change = 0

    @property
    def occupancy(self) -> int:
        return len(self._items)

    def _integrate(self, now: int) -> None:
        self._area += len(self._items) * (now - self._last_change)
        self._last_change = now

    def enqueue(self, pkt: Packet, now: int) -> bool:
        """Return True if accepted, False if dropped."""
        self.arrivals += 1
        if len(self._items) >= self.capacity:
            self.drops += 1
            return False
        self._integrate(now)
        self._items.append(pkt)
        if len(self._items) > self.max_occupancy:
            self.max_occupancy = len(self._items)
        return True

    def dequeue(self, now: int) -> Packet | None:
        if not self._items:
            return None
        self._integrate(now)
        return self._items.popleft()

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def area(self, now: int) -> int:
        """Integral of occupancy (packet-ns) from time 0 to ``now``."""
        return self._area + len(self._items) * (now - self._last_change)


class LossModel:
    """Independent Bernoulli loss for forward data packets.

    Draws come from :class:`random.Random` (MT19937) seeded with ``seed``,
    so the drop sequence is a function of the seed alone. ACKs are never
    dropped.
    """

    def __init__(self, drop_prob: float, seed: int = 0):
        if not 0.0 <= drop_prob <= 1.0:
            raise ConfigError(f"drop probability must be in [0, 1], got {drop_prob}")
        self.drop_prob = float(drop_prob)
        self._rng = random.Random(seed)
        self.drops = 0

    def maybe_drop(self, pkt: Packet) -> bool:
        """Return True when ``pkt`` should be dropped."""
        if pkt.kind != DATA or self.drop_prob == 0.0:
            return False
        if self._rng.random() < self.drop_prob:
            self.drops += 1
            return True
        return False
