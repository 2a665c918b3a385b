"""Reference controllers: Reno, Vegas and HighSpeed TCP."""

from __future__ import annotations

import bisect
import math

from .tcp.controller import TIMEOUT, AckEvent, CongestionController, LossSignal, RoundSummary

INITIAL_SSTHRESH = 64.0


class RenoController(CongestionController):
    """AIMD: slow start +1 per acked packet, then +1 per window of ACKs.

    Congestion avoidance counts acknowledged packets and adds one packet
    once a full window's worth has arrived, so a loss-free round grows
    the window by exactly one.
    """

    name = "reno"

    def __init__(self, initial_ssthresh: float = INITIAL_SSTHRESH, **kw):
        super().__init__(**kw)
        self.ssthresh = float(initial_ssthresh)
        self._acked_count = 0.0

    @property
    def mode(self) -> str:
        return "slow-start" if self.cwnd < self.ssthresh else "congestion-avoidance"

    @property
    def state_label(self) -> str:
        return self.mode

    def on_ack(self, event: AckEvent) -> None:
        n = event.newly_acked_pkts
        while n > 0 and self.cwnd < self.ssthresh:
            self.cwnd = self.cwnd + 1
            n -= 1
        if n > 0:
            self._increase(n)

    def _increase(self, acked: int) -> None:
        self._acked_count += acked
        while self._acked_count >= self.cwnd:
            self._acked_count -= self.cwnd
            self.cwnd = self.cwnd + 1

    def on_loss(self, signal: LossSignal) -> None:
        self.ssthresh = max(self.cwnd_min, self.cwnd / 2)
        self._acked_count = 0.0
        # loss window after a timeout is the contract floor
        self.cwnd = self.cwnd_min if signal.kind == TIMEOUT else self.ssthresh


def reno_on_ack(state: RenoController, event: AckEvent) -> RenoController:
    state.on_ack(event)
    return state


def reno_on_loss(state: RenoController, signal: LossSignal) -> RenoController:
    state.on_loss(signal)
    return state


class VegasController(RenoController):
    """Delay-based: hold the estimated backlog between alpha and beta packets."""

    name = "vegas"

    def __init__(self, alpha: float = 1.0, beta: float = 3.0, gamma: float = 1.0, **kw):
        super().__init__(**kw)
        if not alpha < beta:
            raise ValueError("Vegas needs alpha < beta")
        self.alpha_v = alpha
        self.beta_v = beta
        self.gamma_v = gamma
        self.delta = 0.0

    def on_ack(self, event: AckEvent) -> None:
        # congestion avoidance is driven once per round, not per ACK
        n = event.newly_acked_pkts
        while n > 0 and self.cwnd < self.ssthresh:
            self.cwnd = self.cwnd + 1
            n -= 1

    def on_round_end(self, s: RoundSummary) -> None:
        rtt = self.rtt
        if not rtt.has_samples or s.acked_pkts == 0:
            return
        round_rtt = s.rtt_mean or rtt.srtt
        self.delta = (self.cwnd / rtt.d_min - s.acked_pkts / round_rtt) * rtt.d_min
        if self.cwnd < self.ssthresh:
            if self.delta > self.gamma_v:
                self.ssthresh = self.cwnd
            return
        vegas_on_round(self, self.delta)


def vegas_on_round(state: VegasController, delta: float) -> VegasController:
    state.delta = delta
    if delta < state.alpha_v:
        state.cwnd = state.cwnd + 1
    elif delta > state.beta_v:
        state.cwnd = state.cwnd - 1
    return state


# Window (pkts), increase a(w) (pkts/round), decrease b(w): the standard
# HighSpeed response with Low_Window=38, High_Window=83000, High_P=1e-7,
# High_Decrease=0.1, sampled at 17 log-spaced windows.
HSTCP_TABLE = (
    (38, 1.00, 0.500),
    (61, 1.37, 0.475),
    (99, 1.87, 0.450),
    (161, 2.55, 0.425),
    (260, 3.47, 0.400),
    (420, 4.70, 0.375),
    (679, 6.34, 0.350),
    (1098, 8.50, 0.325),
    (1776, 11.35, 0.300),
    (2872, 15.03, 0.275),
    (4643, 19.76, 0.250),
    (7508, 25.72, 0.225),
    (12141, 33.07, 0.200),
    (19632, 41.86, 0.175),
    (31744, 51.92, 0.150),
    (51330, 62.62, 0.125),
    (83000, 72.52, 0.100),
)
HSTCP_LOW_WINDOW = HSTCP_TABLE[0][0]
_LOG_W = [math.log(w) for w, _, _ in HSTCP_TABLE]


def hstcp_params(w: float) -> tuple[float, float]:
    """(a, b) for window ``w``, linearly interpolated in log w."""
    if w < 1:
        raise ValueError("window must be >= 1")
    if w <= HSTCP_LOW_WINDOW:
        return 1.0, 0.5
    if w >= HSTCP_TABLE[-1][0]:
        return HSTCP_TABLE[-1][1], HSTCP_TABLE[-1][2]
    lw = math.log(w)
    i = min(bisect.bisect_right(_LOG_W, lw), len(_LOG_W) - 1)
    f = (lw - _LOG_W[i - 1]) / (_LOG_W[i] - _LOG_W[i - 1])
    (_, a0, b0), (_, a1, b1) = HSTCP_TABLE[i - 1], HSTCP_TABLE[i]
    return a0 + f * (a1 - a0), b0 + f * (b1 - b0)


class HstcpController(RenoController):
    name = "hstcp"

    def _increase(self, acked: int) -> None:
        a, _ = hstcp_params(self.cwnd)
        self.cwnd = self.cwnd + a * acked / self.cwnd

    def on_loss(self, signal: LossSignal) -> None:
        _, b = hstcp_params(self.cwnd)
        self.ssthresh = max(self.cwnd_min, (1 - b) * self.cwnd)
        self.cwnd = self.cwnd_min if signal.kind == TIMEOUT else self.ssthresh


CONTROLLERS = {
    "reno": RenoController,
    "vegas": VegasController,
    "hstcp": HstcpController,
}
