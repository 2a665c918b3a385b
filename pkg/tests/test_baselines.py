import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from phcclab.baselines import (
    HSTCP_TABLE, HstcpController, RenoController, VegasController, hstcp_params, reno_on_ack,
    reno_on_loss, vegas_on_round,
)
from phcclab.tcp.controller import TIMEOUT, TRIPLE_DUPACK, AckEvent, LossSignal, RoundSummary


def acks(ctl, n):
    for _ in range(n):
        ctl.on_ack(AckEvent(1, 0.1, False))


def test_slow_start_doubles_per_round():
    ctl = RenoController(initial_ssthresh=64, initial_cwnd=4)
    acks(ctl, 4)
    assert ctl.cwnd == 8


def test_congestion_avoidance_adds_one_per_round():
    ctl = RenoController(initial_ssthresh=5, initial_cwnd=10)
    acks(ctl, 10)
    assert ctl.cwnd == 11


def test_reno_halves_on_triple_dupack():
    ctl = reno_on_loss(RenoController(initial_cwnd=40), LossSignal(TRIPLE_DUPACK, 0.1))
    assert ctl.cwnd == 20 and ctl.ssthresh == 20


def test_reno_timeout_drops_to_floor():
    ctl = RenoController(initial_cwnd=40)
    ctl.on_loss(LossSignal(TIMEOUT, 0.1))
    assert ctl.cwnd == 2 and ctl.ssthresh == 20


def test_reno_functional_wrappers():
    ctl = RenoController(initial_cwnd=4)
    assert reno_on_ack(ctl, AckEvent(1, 0.1, False)).cwnd == 5


@pytest.mark.parametrize("delta, change", [(0.5, 1), (5, -1), (2, 0)])
def test_vegas_deadband(delta, change):
    ctl = VegasController(1, 3, initial_cwnd=20)
    vegas_on_round(ctl, delta)
    assert ctl.cwnd == 20 + change


def test_vegas_needs_ordered_thresholds():
    with pytest.raises(ValueError):
        VegasController(3, 1)


def test_vegas_holds_under_stationary_delay():
    ctl = VegasController(1, 3, initial_ssthresh=2, initial_cwnd=30)
    ctl.rtt.update(0.1)
    sizes = []
    for i in range(50):
        # the path holds 28 packets per base RTT, so two queue up
        s = RoundSummary(index=i, start=0, end=0.1, acked_pkts=28, sent_pkts=28, lost_pkts=0,
                         rtt_samples=28, rtt_mean=0.1 * ctl.cwnd / 28, rtt_min=0.1,
                         seqno=0, lastack=0)
        ctl.on_round_end(s)
        sizes.append(ctl.cwnd)
    assert max(sizes[10:]) - min(sizes[10:]) <= 1


def test_hstcp_low_window_is_reno():
    assert hstcp_params(10) == (1.0, 0.5)


def test_hstcp_large_window_is_more_aggressive():
    a, b = hstcp_params(1e4)
    assert a > 1 and b < 0.5


def test_hstcp_table_endpoints_follow_the_response_function():
    # a(w) = w^2 p(w) 2 b(w) / (2 - b(w)), log p(w) linear in log w between
    # p = 1.5 / 38^2 at w = 38 and p = 1e-7 at w = 83000
    lo, hi = math.log(1.5 / 38 ** 2), math.log(1e-7)
    span = math.log(83000) - math.log(38)
    for w, a, b in HSTCP_TABLE:
        p = math.exp(lo + (math.log(w) - math.log(38)) / span * (hi - lo))
        assert a == pytest.approx(w * w * p * 2 * b / (2 - b), rel=0.01)


@given(st.floats(38, 83000), st.floats(1, 2))
def test_hstcp_monotone(w, k):
    a1, b1 = hstcp_params(w)
    a2, b2 = hstcp_params(min(83000, w * k))
    assert a2 >= a1 - 1e-12 and b2 <= b1 + 1e-12


def test_hstcp_loss_uses_table_decrease():
    ctl = HstcpController(initial_cwnd=1000)
    _, b = hstcp_params(1000)
    ctl.on_loss(LossSignal(TRIPLE_DUPACK, 0.1))
    assert ctl.cwnd == pytest.approx(1000 * (1 - b))


def test_hstcp_grows_faster_than_reno_at_large_windows():
    h = HstcpController(initial_ssthresh=2, initial_cwnd=2000)
    r = RenoController(initial_ssthresh=2, initial_cwnd=2000)
    acks(h, 2000)
    acks(r, 2000)
    assert h.cwnd - 2000 > r.cwnd - 2000 >= 1
