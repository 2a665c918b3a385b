"""Throughput, utilization, fairness and queue statistics over finished runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

DEFAULT_RESOLUTION_S = 0.001


class FlowTrace:
    """Per-flow record of deliveries and periodic controller samples.

    Deliveries are accumulated into fixed bins of ``resolution`` seconds
    (bytes per bin); sample lists hold ``(time_s, value)`` pairs.
    """

    def __init__(self, flow_id: int = 0, resolution: float = DEFAULT_RESOLUTION_S):
        if not resolution > 0:
            raise ValueError("resolution must be positive")
        self.flow_id = flow_id
        self.resolution = resolution
        self.bins: list[int] = []
        self.bytes_total = 0
        self.last_time = 0.0
        self.cwnd: list[tuple[float, float]] = []
        self.rtt: list[tuple[float, float]] = []
        self.phase: list[tuple[float, str]] = []

    def record_delivery(self, t: float, nbytes: int) -> None:
        if t < self.last_time:
            raise ValueError("delivery timestamps must be non-decreasing")
        self.last_time = t
        idx = int(t / self.resolution)
        bins = self.bins
        if idx >= len(bins):
            bins.extend([0] * (idx + 1 - len(bins)))
        bins[idx] += nbytes
        self.bytes_total += nbytes

    def bytes_between(self, start: float, end: float) -> int:
        """Bytes delivered in bins whose start lies in ``[start, end)``."""
        lo = max(0, math.ceil(start / self.resolution - 1e-9))
        hi = max(0, math.ceil(end / self.resolution - 1e-9))
        return sum(self.bins[lo:hi])

    def mean_throughput(self, start: float, end: float) -> float:
        """Average delivered rate (bps) over ``[start, end)``."""
        if not end > start:
            raise ValueError("need end > start")
        return 8 * self.bytes_between(start, end) / (end - start)


def throughput_series(trace: FlowTrace, window: float, end: float | None = None):
    """``[(t, bps)]`` for consecutive windows ``[t - window, t)``, t at window ends."""
    if not window > 0:
        raise ValueError("window must be positive")
    if end is None:
        if not trace.bins:
            return []
        end = len(trace.bins) * trace.resolution
    out = []
    k = 1
    while k * window <= end + 1e-9:
        t0, t1 = (k - 1) * window, k * window
        out.append((t1, 8 * trace.bytes_between(t0, t1) / window))
        k += 1
    if not out and trace.bins:
        out.append((window, 8 * trace.bytes_between(0, window) / window))
    return out


def utilization(throughputs_bps, capacity_bps: float) -> float:
    if not capacity_bps > 0:
        raise ValueError("capacity must be positive")
    u = sum(throughputs_bps) / capacity_bps
    return min(1.0, max(0.0, u))


def jain_fi(throughputs) -> float:
    xs = [float(x) for x in throughputs]
    if not xs:
        raise ValueError("fairness index needs at least one flow")
    if any(x < 0 for x in xs):
        raise ValueError("throughputs must be non-negative")
    sq = sum(x * x for x in xs)
    if sq == 0:
        raise ValueError("fairness index is undefined when every flow has zero throughput")
    return sum(xs) ** 2 / (len(xs) * sq)


def avg_queue_size(area_pkt_s: float, duration_s: float) -> float:
    """Time-weighted mean occupancy from an occupancy integral (packet-seconds)."""
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    return area_pkt_s / duration_s


def coefficient_of_variation(values) -> float:
    xs = list(values)
    if len(xs) < 2:
        return 0.0
    mean = sum(xs) / len(xs)
    if mean == 0:
        return 0.0
    var = sum((x - mean) ** 2 for x in xs) / len(xs)
    return math.sqrt(var) / mean


@dataclass
class FlowReport:
    flow_id: int
    cc: str
    start_s: float
    throughput_bps: float
    packets_sent: int
    packets_delivered: int
    queue_drops: int
    random_drops: int
    retransmits: int
    timeouts: int
    fast_retransmits: int
    throughput_cv: float


@dataclass
class ExperimentReport:
    name: str
    seed: int
    duration_s: float
    warmup_s: float
    config_hash: str
    capacity_bps: float
    flows: list[FlowReport]
    aggregate_throughput_bps: float
    utilization: float
    jain_fi: float
    avg_queue_pkts: float
    max_queue_pkts: int
    queue_drops: int
    random_drops: int
    events_processed: int
    trace_digest: str | None = None
    extra: dict = field(default_factory=dict)

    def throughput_by_cc(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for f in self.flows:
            out[f.cc] = out.get(f.cc, 0.0) + f.throughput_bps
        return out

    def share(self, cc: str) -> float:
        """Fraction of the aggregate throughput obtained by flows running ``cc``."""
        total = self.aggregate_throughput_bps
        return self.throughput_by_cc().get(cc, 0.0) / total if total > 0 else 0.0
