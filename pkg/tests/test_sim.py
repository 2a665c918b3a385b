import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phcclab.errors import ConfigError, SimulationError
from phcclab.sim.engine import NS_PER_S, Engine, to_ns
from phcclab.sim.network import ACK, DATA, DropTailQueue, Link, LossModel, Packet
from phcclab.sim.topology import DumbbellConfig, build_dumbbell


# -- engine ------------------------------------------------------------------

def test_empty_run_advances_clock():
    eng = Engine()
    stats = eng.run_until(to_ns(10))
    assert stats.events_processed == 0
    assert stats.now == 10.0


def test_same_timestamp_runs_in_insertion_order():
    eng = Engine()
    seen = []
    for tag in "abcde":
        eng.schedule_at(5, seen.append, tag)
    eng.run_until(10)
    assert seen == list("abcde")


def test_scheduling_in_the_past_is_rejected():
    eng = Engine()
    eng.run_until(100)
    with pytest.raises(SimulationError):
        eng.schedule_at(50, lambda: None)
    with pytest.raises(SimulationError):
        eng.run_until(10)


@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=60))
def test_events_pop_in_time_order(times):
    eng = Engine()
    seen = []
    for i, t in enumerate(times):
        eng.schedule_at(t, seen.append, (t, i))
    eng.run_until(10_000)
    assert seen == sorted(seen)


# -- links -------------------------------------------------------------------

def test_transmit_delivery_time():
    link = Link(200e6, 0.02)
    # 8000 bits at 200 Mbps is 40 us, plus 20 ms of propagation
    assert link.transmit(Packet(0, DATA), 0) == 20_040_000


def test_zero_propagation_is_serialization_only():
    link = Link(200e6, 0.0)
    assert link.transmit(Packet(0, DATA), 1000) == 1000 + 40_000


def test_back_to_back_packets_are_one_serialization_apart():
    link = Link(200e6, 0.02)
    a = link.transmit(Packet(0, DATA), 0)
    b = link.transmit(Packet(0, DATA), 0)
    assert b - a == 40_000


def test_bad_link_parameters():
    with pytest.raises(ConfigError):
        Link(0, 0.01)
    with pytest.raises(ConfigError):
        Link(1e6, -1)


# -- drop-tail queue -----------------------------------------------------------

def test_queue_accepts_below_capacity():
    q = DropTailQueue(600)
    for _ in range(5):
        q.enqueue(Packet(0, DATA), 0)
    assert q.enqueue(Packet(0, DATA), 0)
    assert q.occupancy == 6


def test_queue_drops_when_full():
    q = DropTailQueue(600)
    for _ in range(600):
        assert q.enqueue(Packet(0, DATA), 0)
    assert not q.enqueue(Packet(0, DATA), 0)
    assert q.drops == 1 and q.occupancy == 600


def test_queue_rejects_zero_capacity():
    with pytest.raises(ConfigError):
        DropTailQueue(0)


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 50)), max_size=200),
       st.integers(1, 20))
def test_queue_fifo_and_area_match_brute_force(ops, cap):
    q = DropTailQueue(cap)
    model: list[int] = []
    out, expected_out = [], []
    now = 0
    area = 0
    for i, (push, dt) in enumerate(ops):
        area += len(model) * dt
        now += dt
        if push:
            accepted = q.enqueue(Packet(0, DATA, seq=i), now)
            assert accepted == (len(model) < cap)
            if accepted:
                model.append(i)
        else:
            pkt = q.dequeue(now)
            if model:
                expected_out.append(model.pop(0))
                out.append(pkt.seq)
            else:
                assert pkt is None
        assert q.occupancy == len(model) <= cap
    assert out == expected_out
    assert q.area(now + 7) == area + 7 * len(model)


# -- random loss -------------------------------------------------------------

def test_loss_extremes():
    keep = LossModel(0.0, seed=1)
    drop = LossModel(1.0, seed=1)
    pkts = [Packet(0, DATA, seq=i) for i in range(1000)]
    assert not any(keep.maybe_drop(p) for p in pkts)
    assert all(drop.maybe_drop(p) for p in pkts)


def test_loss_never_touches_acks():
    model = LossModel(1.0, seed=1)
    assert not model.maybe_drop(Packet(0, ACK, size_bytes=40))


def test_bernoulli_rate_over_a_million_draws():
    model = LossModel(0.01, seed=12345)
    pkt = Packet(0, DATA)
    n = 1_000_000
    drops = sum(model.maybe_drop(pkt) for _ in range(n))
    assert 0.009 <= drops / n <= 0.011


def test_loss_sequence_depends_only_on_seed():
    pkt = Packet(0, DATA)
    m1, m2 = LossModel(0.3, seed=7), LossModel(0.3, seed=7)
    s1 = [m1.maybe_drop(pkt) for _ in range(500)]
    s2 = [m2.maybe_drop(pkt) for _ in range(500)]
    assert s1 == s2
    ref = random.Random(7)
    assert s1 == [ref.random() < 0.3 for _ in range(500)]


def test_bad_loss_probability():
    with pytest.raises(ConfigError):
        LossModel(1.5)


# -- topology ------------------------------------------------------------------

def test_three_flow_dumbbell_shape():
    topo = build_dumbbell(DumbbellConfig(n_flows=3, bottleneck_bps=200e6,
                                         bottleneck_delay_s=0.02, buffer_pkts=600))
    assert len(topo.sources) == 3 and len(topo.sinks) == 3
    assert len(topo.routers) == 2
    assert topo.queue.capacity == 600


def test_single_flow_dumbbell():
    topo = build_dumbbell(DumbbellConfig(n_flows=1))
    assert topo.sources == ["s0"] and topo.sinks == ["d0"]


def test_zero_buffer_rejected():
    with pytest.raises(ConfigError):
        build_dumbbell(DumbbellConfig(n_flows=1, buffer_pkts=0))


def test_base_rtt_is_three_hops_each_way():
    topo = build_dumbbell(DumbbellConfig(n_flows=1, bottleneck_bps=10e6))
    assert topo.base_rtt(0) == pytest.approx(0.12, abs=0.002)


class _Echo:
    """Receiver that acknowledges each packet with its own sequence number."""

    def __init__(self, log):
        self.log = log

    def on_data(self, pkt, now):
        self.log.append(pkt.seq)
        return Packet(pkt.flow_id, ACK, seq=pkt.seq, ack_no=pkt.seq + 1, size_bytes=40)


class _Null:
    def on_ack_packet(self, ack):
        pass


def _blast(n_pkts, buffer_pkts, loss_prob=0.0, seed=0):
    eng = Engine(trace=True)
    topo = build_dumbbell(DumbbellConfig(n_flows=2, bottleneck_bps=10e6, buffer_pkts=buffer_pkts,
                                         loss_prob=loss_prob, seed=seed), eng)
    logs = [[], []]
    for f in range(2):
        topo.attach(f, _Null(), _Echo(logs[f]))
    for i in range(n_pkts):
        for f in range(2):
            eng.schedule_at(i * 100_000, topo.send_data, Packet(f, DATA, seq=i))
    return eng, topo, logs


def test_conservation_at_any_instant():
    eng, topo, _ = _blast(400, buffer_pkts=50, loss_prob=0.05, seed=3)
    for t_ms in (5, 30, 41, 77, 150, 1000):
        eng.run_until(t_ms * 1_000_000)
        in_net = topo.in_network()
        for f, c in enumerate(topo.counters):
            assert c.sent == c.delivered + c.dropped + in_net[f]
    assert sum(c.dropped_queue for c in topo.counters) > 0


def test_bottleneck_preserves_per_flow_order():
    eng, _, logs = _blast(300, buffer_pkts=40)
    eng.run_until(NS_PER_S)
    for log in logs:
        assert log == sorted(log)


def test_delivered_rate_never_exceeds_capacity():
    eng, topo, _ = _blast(2000, buffer_pkts=100)
    eng.run_until(to_ns(0.5))
    delivered_bits = sum(c.delivered for c in topo.counters) * 8000
    # everything delivered by 0.5 s left the bottleneck after t >= 0
    assert delivered_bits <= 10e6 * 0.5


def test_same_seed_gives_identical_trace():
    digests = []
    for _ in range(2):
        eng, _, _ = _blast(200, buffer_pkts=30, loss_prob=0.02, seed=9)
        eng.run_until(NS_PER_S)
        digests.append(eng.trace_digest())
    assert digests[0] == digests[1]
    eng, _, _ = _blast(200, buffer_pkts=30, loss_prob=0.02, seed=10)
    eng.run_until(NS_PER_S)
    assert eng.trace_digest() != digests[0]


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 80), st.floats(0, 0.2), st.integers(0, 1000))
def test_conservation_property(buffer_pkts, loss_prob, seed):
    eng, topo, _ = _blast(150, buffer_pkts, loss_prob, seed)
    eng.run_until(to_ns(0.02))
    in_net = topo.in_network()
    for f, c in enumerate(topo.counters):
        assert c.sent == c.delivered + c.dropped + in_net[f]
