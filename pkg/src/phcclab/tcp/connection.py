"""Packet-granularity reliable transfer: sender connection and receiving sink.

Sequence numbers count packets from 0. ``ack_no`` is cumulative: the next
packet the sink expects. Every data packet is acknowledged immediately
(no delayed ACKs). Loss detection follows NewReno without SACK: three
duplicate ACKs trigger one fast retransmit and one congestion signal per
window; partial ACKs during recovery retransmit the next hole silently;
while recovering, each duplicate ACK lets one more packet out (window
inflation, deflated by partial ACKs), so the flight is close to the reduced
window when recovery ends instead of leaving the sender to refill it in one
burst;
an RTO expiry triggers go-back-N from the oldest unacknowledged packet.
During recovery only the first partial ACK re-arms the retransmit timer
(the "impatient" variant), so a burst of many losses ends in a timeout
and go-back-N instead of one repaired hole per RTT. Duplicate ACKs
elicited by retransmitted packets are not counted toward fast
retransmit: after go-back-N they only report data the sink already has.
"""

from __future__ import annotations

import math

from ..errors import SimulationError
from ..sim.engine import NS_PER_S, to_ns
from ..sim.network import ACK, ACK_BYTES, DATA, DATA_BYTES, Packet
from .controller import TIMEOUT, TRIPLE_DUPACK, AckEvent, CongestionController, LossSignal, RoundSummary

DUPACK_THRESHOLD = 3


class Sink:
    """Receiver side: tracks in-order delivery and builds cumulative ACKs."""

    def __init__(self, flow_id: int, trace=None):
        self.flow_id = flow_id
        self.rcv_next = 0
        self._out_of_order: set[int] = set()
        self.trace = trace
        self.unique_pkts = 0
        self.duplicate_pkts = 0

    def on_data(self, pkt: Packet, now: int) -> Packet:
        seq = pkt.seq
        fresh = False
        if seq == self.rcv_next:
            fresh = True
            nxt = seq + 1
            ooo = self._out_of_order
            while nxt in ooo:
                ooo.remove(nxt)
                nxt += 1
            self.rcv_next = nxt
        elif seq > self.rcv_next and seq not in self._out_of_order:
            fresh = True
            self._out_of_order.add(seq)
        if fresh:
            self.unique_pkts += 1
            if self.trace is not None:
                self.trace.record_delivery(now / NS_PER_S, pkt.size_bytes)
        else:
            self.duplicate_pkts += 1
        return Packet(self.flow_id, ACK, seq=seq, ack_no=self.rcv_next, size_bytes=ACK_BYTES,
                      sent_at=pkt.sent_at, retx=pkt.retx)


class Connection:
    """Sender state for one flow, driving a pluggable congestion controller."""

    def __init__(self, flow_id: int, controller: CongestionController, topology, *,
                 dupack_threshold: int = DUPACK_THRESHOLD, packet_bytes: int = DATA_BYTES,
                 debug: bool = False):
        self.flow_id = flow_id
        self.controller = controller
        self.topology = topology
        self.engine = topology.engine
        self.rtt = controller.rtt
        self.dupack_threshold = dupack_threshold
        self.packet_bytes = packet_bytes
        self.debug = debug

        self.started = False
        self.next_seq = 0
        self.high_seq = 0  # one past the highest sequence ever sent
        self.lastack = 0
        self.dupack_count = 0
        self.in_recovery = False
        self.recover = 0
        self._partial_acks = 0
        self._inflate = 0  # packets that left the network during recovery
        self.round_start_seq = 0

        self.released = 0
        self.acked_in_flight = 0
        self.declared_lost = 0
        self.retransmits = 0
        self.timeouts = 0
        self.fast_retransmits = 0
        self.loss_signals: list[LossSignal] = []

        self._deadline: int | None = None
        self._timer_at: int | None = None

        self._round_index = 0
        self._reset_round(0)

    # -- public surface --------------------------------------------------

    @property
    def inflight(self) -> int:
        return self.next_seq - self.lastack

    def start(self, at_s: float = 0.0) -> None:
        self.engine.schedule_at(to_ns(at_s), self._begin)

    def on_ack_packet(self, ack: Packet) -> None:
        self.on_ack(ack.ack_no, ack.sent_at, retx=ack.retx)

    def on_ack(self, ack_no: int, echoed_send_time: int, now: int | None = None,
               retx: bool = False) -> AckEvent | None:
        """Process one cumulative ACK. Times are engine nanoseconds.

        Returns the :class:`AckEvent` handed to the controller, or None for
        a stale ACK.
        """
        now = self.engine.now if now is None else now
        now_s = now / NS_PER_S
        ctl = self.controller
        if ack_no > self.lastack:
            newly = ack_no - self.lastack
            self.acked_in_flight += min(ack_no, self.next_seq) - self.lastack
            self.lastack = ack_no
            if self.next_seq < ack_no:
                self.next_seq = ack_no
            self.dupack_count = 0
            sample = None
            if not retx:
                sample = (now - echoed_send_time) / NS_PER_S
                if sample > 0:
                    self.rtt.update(sample)
                    self._r_rtt_n += 1
                    self._r_rtt_sum += sample
                    if sample < self._r_rtt_min:
                        self._r_rtt_min = sample
                else:
                    sample = None
            self._r_acked += newly
            rearm = True
            if self.in_recovery:
                if ack_no >= self.recover:
                    self.in_recovery = False
                    self._inflate = 0
                else:
                    self._inflate = max(0, self._inflate - newly + 1)
                    self._partial_acks += 1
                    rearm = self._partial_acks == 1
                    self._retransmit(ack_no)
            event = AckEvent(newly, sample, False, now_s)
            ctl.on_ack(event)
            self.round_boundary(ack_no, now)
            if self.lastack >= self.high_seq:
                self._deadline = None
            elif rearm:
                self._arm_timer(now)
        elif ack_no == self.lastack and self.lastack < self.high_seq:
            if not retx:
                self.dupack_count += 1
                if self.in_recovery:
                    self._inflate += 1
            event = AckEvent(0, None, True, now_s)
            ctl.on_ack(event)
            if (self.dupack_count == self.dupack_threshold and not self.in_recovery
                    and self.lastack >= self.recover):
                self._fast_retransmit(now)
        else:
            return None
        self.fill_window(now)
        if self.debug:
            self.check_invariants()
        return event

    def fill_window(self, now: int | None = None) -> int:
        """Release new packets up to ``floor(cwnd)`` in flight; return how many."""
        if not self.started:
            return 0
        now = self.engine.now if now is None else now
        room = math.floor(self.controller.cwnd) + self._inflate - (self.next_seq - self.lastack)
        sent = 0
        while sent < room:
            self._send(self.next_seq, now)
            self.next_seq += 1
            sent += 1
        if sent and self._deadline is None:
            self._arm_timer(now)
        return sent

    def round_boundary(self, ack_no: int, now: int | None = None) -> bool:
        """End the current RTT round once ``ack_no`` covers its first packet."""
        if ack_no < self.round_start_seq:
            return False
        self._end_round(self.engine.now if now is None else now)
        return True

    def on_timeout(self, now: int | None = None) -> LossSignal | None:
        now = self.engine.now if now is None else now
        if self.lastack >= self.high_seq:
            self._deadline = None
            return None
        self.timeouts += 1
        self.rtt.back_off()
        self.recover = self.high_seq
        during = self.in_recovery
        self.in_recovery = False
        self._inflate = 0
        self.dupack_count = 0
        self.declared_lost += self.next_seq - self.lastack
        self.next_seq = self.lastack
        self._r_lost += 1
        signal = LossSignal(TIMEOUT, self._delay_now(), now / NS_PER_S, during_recovery=during)
        self.loss_signals.append(signal)
        self.controller.on_loss(signal)
        self._deadline = None
        self.fill_window(now)
        self._arm_timer(now)
        return signal

    def check_invariants(self) -> None:
        if not 0 <= self.lastack <= self.next_seq <= self.high_seq:
            raise SimulationError(
                f"flow {self.flow_id}: sequence order broken "
                f"(lastack={self.lastack}, next={self.next_seq}, high={self.high_seq})"
            )
        accounted = self.released - self.acked_in_flight - self.declared_lost
        if accounted != self.inflight:
            raise SimulationError(
                f"flow {self.flow_id}: inflight {self.inflight} != released - acked - lost "
                f"= {accounted}"
            )
        cwnd = self.controller.cwnd
        if not self.controller.cwnd_min <= cwnd <= self.controller.cwnd_max:
            raise SimulationError(f"flow {self.flow_id}: cwnd {cwnd} out of bounds")

    # -- internals -------------------------------------------------------

    def _begin(self) -> None:
        self.started = True
        now = self.engine.now
        self._reset_round(now)
        self.fill_window(now)
        self.round_start_seq = self.next_seq

    def _send(self, seq: int, now: int) -> None:
        retx = seq < self.high_seq
        if retx:
            self.retransmits += 1
        else:
            self.high_seq = seq + 1
        self.released += 1
        self._r_sent += 1
        self.topology.send_data(Packet(self.flow_id, DATA, seq=seq, size_bytes=self.packet_bytes,
                                       sent_at=now, retx=retx))

    def _retransmit(self, seq: int) -> None:
        self.declared_lost += 1
        self._r_lost += 1
        self._send(seq, self.engine.now)

    def _fast_retransmit(self, now: int) -> None:
        self.fast_retransmits += 1
        self.in_recovery = True
        self._partial_acks = 0
        self._inflate = self.dupack_count
        self.recover = self.high_seq
        signal = LossSignal(TRIPLE_DUPACK, self._delay_now(), now / NS_PER_S)
        self.loss_signals.append(signal)
        self.controller.on_loss(signal)
        self._retransmit(self.lastack)
        self._arm_timer(now)

    def _delay_now(self) -> float:
        return self.rtt.last_sample if self.rtt.has_samples else self.rtt.rto

    def _reset_round(self, now: int) -> None:
        self._r_start = now
        self._r_acked = 0
        self._r_sent = 0
        self._r_lost = 0
        self._r_rtt_n = 0
        self._r_rtt_sum = 0.0
        self._r_rtt_min = math.inf

    def _end_round(self, now: int) -> None:
        n = self._r_rtt_n
        summary = RoundSummary(
            index=self._round_index,
            start=self._r_start / NS_PER_S,
            end=now / NS_PER_S,
            acked_pkts=self._r_acked,
            sent_pkts=self._r_sent,
            lost_pkts=self._r_lost,
            rtt_samples=n,
            rtt_mean=self._r_rtt_sum / n if n else None,
            rtt_min=self._r_rtt_min if n else None,
            seqno=self.next_seq,
            lastack=self.lastack,
        )
        self._round_index += 1
        self.round_start_seq = self.next_seq
        self._reset_round(now)
        self.controller.on_round_end(summary)

    def _arm_timer(self, now: int) -> None:
        self._deadline = now + to_ns(self.rtt.rto)
        if self._timer_at is None or self._timer_at > self._deadline:
            self._timer_at = self._deadline
            self.engine.schedule_at(self._deadline, self._on_timer, self._deadline)

    def _on_timer(self, at: int) -> None:
        if at != self._timer_at:
            return
        self._timer_at = None
        if self._deadline is None:
            return
        now = self.engine.now
        if now < self._deadline:
            self._timer_at = self._deadline
            self.engine.schedule_at(self._deadline, self._on_timer, self._deadline)
            return
        self.on_timeout(now)
