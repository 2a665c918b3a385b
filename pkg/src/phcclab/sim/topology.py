"""Dumbbell topology: N sources -> router r0 -> bottleneck -> router r1 -> N sinks.

Forward data path for flow i::

    s_i --access--> r0 [DropTailQueue] --bottleneck--> r1 --access--> d_i

ACKs return d_i -> r1 -> r0 -> s_i over lossless links. The shared reverse
hop is modelled as pure delay plus serialization with no contention, so
acknowledgements never congest (reverse-path queuing is out of scope).
Per-flow access links are provisioned faster than the bottleneck by
default, so every queue that can drop packets sits at r0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

from ..errors import ConfigError
from .engine import Engine
from .network import ACK, DATA, DropTailQueue, Link, LossModel, Packet

ACCESS_SPEEDUP = 10.0


class DataReceiver(Protocol):
    def on_data(self, pkt: Packet, now: int) -> Packet: ...


class AckReceiver(Protocol):
    def on_ack_packet(self, ack: Packet) -> None: ...


@dataclass
class DumbbellConfig:
    n_flows: int
    bottleneck_bps: float = 200e6
    bottleneck_delay_s: float = 0.02
    buffer_pkts: int = 600
    access_bps: float | None = None
    access_delay_s: float | Sequence[float] = 0.02
    loss_prob: float = 0.0
    seed: int = 0

    def access_delays(self) -> list[float]:
        if isinstance(self.access_delay_s, (int, float)):
            return [float(self.access_delay_s)] * self.n_flows
        delays = [float(d) for d in self.access_delay_s]
        if len(delays) != self.n_flows:
            raise ConfigError(
                f"{len(delays)} access delays given for {self.n_flows} flows"
            )
        return delays


@dataclass
class FlowCounters:
    sent: int = 0
    delivered: int = 0
    dropped_queue: int = 0
    dropped_random: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_queue + self.dropped_random


@dataclass
class Topology:
    engine: Engine
    config: DumbbellConfig
    sources: list[str]
    sinks: list[str]
    routers: tuple[str, str]
    src_links: list[Link]
    sink_links: list[Link]
    ack_sink_links: list[Link]
    ack_src_links: list[Link]
    bottleneck: Link
    reverse_bottleneck: Link
    queue: DropTailQueue
    loss: LossModel
    counters: list[FlowCounters]
    senders: dict[int, AckReceiver] = field(default_factory=dict)
    receivers: dict[int, DataReceiver] = field(default_factory=dict)
    in_service: Packet | None = None

    @property
    def n_flows(self) -> int:
        return len(self.sources)

    def attach(self, flow_id: int, sender: AckReceiver, receiver: DataReceiver) -> None:
        self.senders[flow_id] = sender
        self.receivers[flow_id] = receiver

    def base_rtt(self, flow_id: int) -> float:
        """Propagation-plus-serialization round trip with empty queues (seconds)."""
        data = Packet(flow_id, DATA)
        ack = Packet(flow_id, ACK, size_bytes=40)
        ns = 0
        for link, pkt in ((self.src_links[flow_id], data), (self.bottleneck, data),
                          (self.sink_links[flow_id], data), (self.ack_sink_links[flow_id], ack),
                          (self.reverse_bottleneck, ack), (self.ack_src_links[flow_id], ack)):
            ns += link.serialization_ns(pkt.size_bytes) + link.prop_delay_ns
        return ns / 1e9

    # -- forward path ---------------------------------------------------

    def send_data(self, pkt: Packet) -> None:
        eng = self.engine
        self.counters[pkt.flow_id].sent += 1
        arrive = self.src_links[pkt.flow_id].transmit(pkt, eng.now)
        eng.schedule_at(arrive, self._at_router, pkt)

    def _at_router(self, pkt: Packet) -> None:
        eng = self.engine
        if self.in_service is None:
            self._start_tx(pkt)
        elif not self.queue.enqueue(pkt, eng.now):
            self.counters[pkt.flow_id].dropped_queue += 1
            if eng.trace is not None:
                eng.log("qdrop", pkt.flow_id, pkt.seq)

    def _start_tx(self, pkt: Packet) -> None:
        self.in_service = pkt
        done = self.bottleneck.transmit(pkt, self.engine.now) - self.bottleneck.prop_delay_ns
        self.engine.schedule_at(done, self._tx_done)

    def _tx_done(self) -> None:
        eng = self.engine
        pkt = self.in_service
        if eng.trace is not None:
            eng.log("tx", pkt.flow_id, pkt.seq, pkt.size_bytes)
        if self.loss.maybe_drop(pkt):
            self.counters[pkt.flow_id].dropped_random += 1
            if eng.trace is not None:
                eng.log("rdrop", pkt.flow_id, pkt.seq)
        else:
            at_r1 = eng.now + self.bottleneck.prop_delay_ns
            arrive = self.sink_links[pkt.flow_id].transmit(pkt, at_r1)
            eng.schedule_at(arrive, self._at_sink, pkt)
        nxt = self.queue.dequeue(eng.now)
        if nxt is None:
            self.in_service = None
        else:
            self._start_tx(nxt)

    def _at_sink(self, pkt: Packet) -> None:
        eng = self.engine
        self.counters[pkt.flow_id].delivered += 1
        ack = self.receivers[pkt.flow_id].on_data(pkt, eng.now)
        if eng.trace is not None:
            eng.log("rx", pkt.flow_id, pkt.seq, ack.ack_no)
        f = pkt.flow_id
        t = self.ack_sink_links[f].transmit(ack, eng.now)
        rb = self.reverse_bottleneck
        t += rb.serialization_ns(ack.size_bytes) + rb.prop_delay_ns
        t = self.ack_src_links[f].transmit(ack, t)
        eng.schedule_at(t, self.senders[f].on_ack_packet, ack)

    # -- bookkeeping ----------------------------------------------------

    def in_network(self) -> list[int]:
        """Count data packets currently inside the network, per flow.

        Found by inspecting the queue, the serializer and the pending event
        list, independently of the send/deliver/drop counters.
        """
        counts = [0] * self.n_flows
        for pkt in self.queue:
            counts[pkt.flow_id] += 1
        if self.in_service is not None:
            counts[self.in_service.flow_id] += 1
        for _, _, cb, args in self.engine.pending_events():
            if getattr(cb, "__func__", None) in (Topology._at_router, Topology._at_sink):
                counts[args[0].flow_id] += 1
        return counts


def build_dumbbell(cfg: DumbbellConfig, engine: Engine | None = None) -> Topology:
    if cfg.n_flows < 1:
        raise ConfigError(f"need at least one flow, got {cfg.n_flows}")
    if cfg.buffer_pkts < 1:
        raise ConfigError(f"buffer must hold at least one packet, got {cfg.buffer_pkts}")
    if not cfg.bottleneck_bps > 0:
        raise ConfigError(f"bottleneck bandwidth must be > 0, got {cfg.bottleneck_bps}")
    access_bps = cfg.access_bps if cfg.access_bps is not None else ACCESS_SPEEDUP * cfg.bottleneck_bps
    if not access_bps > 0:
        raise ConfigError(f"access bandwidth must be > 0, got {access_bps}")
    delays = cfg.access_delays()
    engine = engine or Engine()
    n = cfg.n_flows
    return Topology(
        engine=engine,
        config=cfg,
        sources=[f"s{i}" for i in range(n)],
        sinks=[f"d{i}" for i in range(n)],
        routers=("r0", "r1"),
        src_links=[Link(access_bps, d) for d in delays],
        sink_links=[Link(access_bps, d) for d in delays],
        ack_sink_links=[Link(access_bps, d) for d in delays],
        ack_src_links=[Link(access_bps, d) for d in delays],
        bottleneck=Link(cfg.bottleneck_bps, cfg.bottleneck_delay_s),
        reverse_bottleneck=Link(cfg.bottleneck_bps, cfg.bottleneck_delay_s),
        queue=DropTailQueue(cfg.buffer_pkts),
        loss=LossModel(cfg.loss_prob, cfg.seed),
        counters=[FlowCounters() for _ in range(n)],
    )
