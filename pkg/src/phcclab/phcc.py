"""PHCC: joint delay/loss window estimation with a three-phase state machine.

Once per RTT round the controller

1. folds the round into the Bayesian estimator (delay/loss probabilities),
2. derives Vegas-style expected and actual rates, the backlog estimate and
   the delay thresholds that split the delay axis into light / congestion /
   critical phases,
3. acts according to the phase of the smoothed RTT:

   * light: multiplicative growth below ssthresh, +1 per round above;
   * congestion: the window moves toward the average of the
     probability-discounted delay and loss target windows, by
     ``step_gain`` of the gap and by at most ``max_increase_pkts`` per round;
   * critical: the smaller of cwnd and that estimate, decayed by 0.9.

Any loss or timeout halves the window. A loss that arrives with more than
``congestive_backlog * alpha_pkts`` packets of this flow queued also records
the loss reference window and the delay at which it occurred; above that
reference the window grows by at most ``probe_increase_pkts`` per round.
Until the first such loss the reference simply follows cwnd.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .bayes import COMBINE_CLAMP, THETA_D, WINDOW_ROUNDS, BayesEstimator, delay_hardness
from .errors import EstimatorError
from .tcp.controller import CWND_MAX, CWND_MIN, AckEvent, CongestionController, LossSignal, RoundSummary

ALPHA_PKTS = 16.0
INITIAL_SSTHRESH = 64.0
CRITICAL_DECAY = 0.9
QUEUE_GAIN = 1 / 8


class Phase(enum.Enum):
    LIGHT = "light"
    CONGESTION = "congestion"
    CRITICAL = "critical"


def vegas_bandwidths(cwnd: float, d_min: float, acked_in_round: int,
                     round_rtt: float) -> tuple[float, float]:
    """Expected (cwnd / base RTT) and actual (acked / round RTT) rates in pkts/s."""
    if not d_min > 0 or not round_rtt > 0:
        raise EstimatorError(f"need positive delays (d_min={d_min}, round_rtt={round_rtt})")
    return cwnd / d_min, acked_in_round / round_rtt


def min_delay_threshold(ssthresh: float, bw_expect: float, previous: float | None = None):
    if bw_expect <= 0:
        return previous
    return ssthresh / bw_expect


def backlog_estimate(bw_expect: float, bw_actual: float, d_min: float) -> float:
    """Packets this flow keeps queued in the network."""
    return max(0.0, (bw_expect - bw_actual) * d_min)


def delay_threshold(seqno: int, lastack: int, delay: float, d_min: float, bfs: float,
                    previous: float | None = None):
    """Outstanding packets times the queuing delay each backlogged packet adds."""
    if bfs < 1.0:
        return previous
    return (seqno - lastack) * (delay - d_min) / bfs


def max_delay_threshold(d_delay_tr: float | None, d_loss_tr: float, combiner: str = "min") -> float:
    if d_delay_tr is None:
        return d_loss_tr
    if combiner == "min":
        return min(d_delay_tr, d_loss_tr)
    if combiner == "max":
        return max(d_delay_tr, d_loss_tr)
    raise ValueError(f"unknown combiner {combiner!r}")


def classify_phase(delay: float, d_min_tr: float, d_max_tr: float, rto: float | None = None) -> Phase:
    lo, hi = (d_min_tr, d_max_tr) if d_min_tr <= d_max_tr else (d_max_tr, d_min_tr)
    if delay < lo:
        return Phase.LIGHT
    if delay <= hi:
        return Phase.CONGESTION
    return Phase.CRITICAL


def delay_target_window(d_i: float, d_queue: float, alpha: float, epsilon: float = 0.0,
                        cwnd_max: float = CWND_MAX) -> float:
    """Window that keeps ``alpha`` packets queued at the current delay."""
    q = max(d_queue, epsilon)
    if q <= 0:
        return cwnd_max
    return min(cwnd_max, d_i * alpha / q)


def estimate_window(p_d_est: float, p_l_est: float, w_d_tar: float, w_l_tar: float,
                    cwnd_min: float = CWND_MIN) -> float:
    w_delay = (1 - p_d_est) * w_d_tar
    w_loss = (1 - p_l_est) * w_l_tar
    return max(cwnd_min, (w_delay + w_loss) / 2)


@dataclass
class PhccParams:
    alpha_pkts: float = ALPHA_PKTS
    theta_d: float = THETA_D
    window_rounds: int = WINDOW_ROUNDS
    loss_prob_combine: str = COMBINE_CLAMP
    d_max_combiner: str = "max"
    critical_decay: float = CRITICAL_DECAY
    initial_ssthresh: float = INITIAL_SSTHRESH
    queue_gain: float = QUEUE_GAIN
    step_gain: float = 0.25
    max_increase_pkts: float | None = None  # None: alpha_pkts
    probe_increase_pkts: float = 1.0
    loss_ref_gain: float = 0.0
    congestive_backlog: float = 2.0  # in units of alpha_pkts


class PhccController(CongestionController):
    name = "phcc"

    def __init__(self, params: PhccParams | None = None, **kw):
        super().__init__(**kw)
        self.params = p = params or PhccParams()
        self.ssthresh = p.initial_ssthresh
        self.alpha = p.alpha_pkts
        self.w_loss_ref = p.initial_ssthresh
        self.d_min_tr: float | None = None
        self.d_delay_tr: float | None = None
        self.d_loss_tr: float | None = None  # falls back to rto until a loss
        self.d_max_tr: float | None = None
        self.bw_expect = 0.0
        self.bw_actual = 0.0
        self.d_queue = 0.0
        self.phase = Phase.LIGHT
        self.estimator = BayesEstimator(p.window_rounds, p.theta_d, p.loss_prob_combine)
        self._hardness: list[float] = []
        self._flight = None  # packets outstanding when the current round began
        self.phase_rounds = {ph: 0 for ph in Phase}

    @property
    def state_label(self) -> str:
        return self.phase.value

    @property
    def p_d_est(self) -> float:
        return self.estimator.p_d_est

    @property
    def p_l_est(self) -> float:
        return self.estimator.p_l_est

    def on_ack(self, event: AckEvent) -> None:
        sample = event.rtt_sample
        if sample is None:
            return
        rtt = self.rtt
        q = sample - rtt.d_min
        self.d_queue += self.params.queue_gain * (q - self.d_queue)
        if rtt.rto > rtt.d_min:
            self._hardness.append(delay_hardness(sample, rtt.d_min, rtt.rto))

    def on_round_end(self, s: RoundSummary) -> None:
        rtt = self.rtt
        self.estimator.observe(self._hardness, max(s.sent_pkts, s.acked_pkts, 1), s.lost_pkts)
        self._hardness = []
        if not rtt.has_samples:
            return
        d_min = rtt.d_min
        delay = max(rtt.srtt, d_min)
        round_rtt = s.rtt_mean or delay
        # the round's ACKs belong to the window that was in flight when it began
        window = self._flight if self._flight is not None else self.cwnd
        self._flight = s.seqno - s.lastack
        self.bw_expect, self.bw_actual = vegas_bandwidths(window, d_min, s.acked_pkts, round_rtt)
        bfs = backlog_estimate(self.bw_expect, self.bw_actual, d_min)
        self.d_delay_tr = delay_threshold(s.seqno, s.lastack, delay, d_min, bfs, self.d_delay_tr)
        self.d_min_tr = min_delay_threshold(self.ssthresh, self.bw_expect, self.d_min_tr)
        self.d_max_tr = max_delay_threshold(self.d_delay_tr, self._loss_ref_delay(),
                                            self.params.d_max_combiner)
        if self.d_min_tr is None:
            self.phase = Phase.LIGHT
        else:
            self.phase = classify_phase(delay, self.d_min_tr, self.d_max_tr, rtt.rto)
        self.phase_rounds[self.phase] += 1

        if self.phase is Phase.LIGHT:
            self.cwnd = self.cwnd * 2 if self.cwnd < self.ssthresh else self.cwnd + 1
            return
        if self.d_loss_tr is None:
            # no loss seen yet: the loss reference is the window itself
            self.w_loss_ref = self.cwnd
        elif self.cwnd < self.w_loss_ref:
            # an old loss window fades as the path changes underneath it
            self.w_loss_ref -= self.params.loss_ref_gain * (self.w_loss_ref - self.cwnd)
        est = estimate_window(self.p_d_est, self.p_l_est, self.delay_target(),
                              self.w_loss_ref, self.cwnd_min)
        if self.phase is Phase.CONGESTION:
            p = self.params
            cap = p.alpha_pkts if p.max_increase_pkts is None else p.max_increase_pkts
            if self.d_loss_tr is not None and self.cwnd >= self.w_loss_ref:
                # past the window that last overflowed the path: probe gently
                cap = min(cap, p.probe_increase_pkts)
            self.cwnd = self.cwnd + min(p.step_gain * (est - self.cwnd), cap)
        else:
            self.cwnd = min(self.cwnd, est) * self.params.critical_decay

    def delay_target(self) -> float:
        rtt = self.rtt
        # one packet time at the flow's measured rate bounds the queuing-delay denominator
        eps = 1.0 / self.bw_actual if self.bw_actual > 0 else 0.0
        return delay_target_window(rtt.srtt, self.d_queue, self.alpha, eps, self.cwnd_max)

    def on_loss(self, signal: LossSignal) -> None:
        # a timeout inside the same episode keeps the window that saw the loss
        if not signal.during_recovery and self.is_congestive(signal.delay_at_loss):
            self.w_loss_ref = self.cwnd
            self.d_loss_tr = signal.delay_at_loss
        self.cwnd = self.cwnd / 2
        self.ssthresh = self.cwnd
        if self.d_min_tr is not None:
            self.d_max_tr = max_delay_threshold(self.d_delay_tr, self._loss_ref_delay(),
                                                self.params.d_max_combiner)
            self.phase = classify_phase(signal.delay_at_loss, self.d_min_tr, self.d_max_tr)

    def is_congestive(self, delay_at_loss: float) -> bool:
        """Did the loss come with more backlog than this flow aims to keep queued?

        A loss with a near-empty queue says nothing about where the path
        overflows, so it does not move the loss reference.
        """
        if self.bw_actual <= 0:
            return True
        queued = (delay_at_loss - self.rtt.d_min) * self.bw_actual
        return queued >= self.params.congestive_backlog * self.alpha

    def _loss_ref_delay(self) -> float:
        return self.d_loss_tr if self.d_loss_tr is not None else self.rtt.rto
