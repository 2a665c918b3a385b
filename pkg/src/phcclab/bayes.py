"""Bayesian delay/loss probability estimation.

Each RTT round is reduced to a :class:`RoundObservation`: the mean
congestion hardness of its ACKs (0 = no queuing, 1 = timeout-level delay)
and the fraction of its packets that were lost. Consecutive rounds form
transitions; a sliding window of the last ``N`` transitions gives
Laplace-smoothed conditional likelihoods, which are combined with the
previous round's probabilities by total probability::

    P(D_est) = P(D_old) P(D | D_old) + (1 - P(D_old)) P(D | ~D_old)

    P(L_est) = P(L_old) P(L | L_old) + (1 - P(L_old)) P(L | ~L_old)
             + P(D_old) P(L | D_old) + (1 - P(D_old)) P(L | ~D_old)

The loss estimate sums two expansions and can exceed 1; it is clamped to
[0, 1] by default, or halved when ``combine="average"``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import EstimatorError

THETA_D = 0.5
WINDOW_ROUNDS = 32
COMBINE_CLAMP = "clamp"
COMBINE_AVERAGE = "average"


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def delay_hardness(rtt_sample: float, d_min: float, rto: float) -> float:
    """Position of an RTT sample between the base RTT (0) and the RTO (1)."""
    if not rto > d_min > 0:
        raise EstimatorError(f"need rto > d_min > 0 (rto={rto}, d_min={d_min})")
    return _clamp01((rtt_sample - d_min) / (rto - d_min))


@dataclass(frozen=True)
class RoundObservation:
    mean_hardness: float
    loss_fraction: float
    d_event: bool
    l_event: bool


def summarize_round(samples, sent: int, lost: int, theta_d: float = THETA_D) -> RoundObservation:
    if sent < 1:
        raise EstimatorError("cannot summarize a round with no packets sent")
    if not 0 <= lost <= sent:
        raise EstimatorError(f"lost={lost} must lie in [0, sent={sent}]")
    samples = list(samples)
    mean = sum(samples) / len(samples) if samples else 0.0
    return RoundObservation(mean, lost / sent, mean > theta_d, lost > 0)


@dataclass(frozen=True)
class Transition:
    prev_d: bool
    prev_l: bool
    cur_d: bool
    cur_l: bool


class LikelihoodTable:
    """Windowed, add-one smoothed conditional frequencies of round transitions.

    ``P(A | B) = (count(A and B) + 1) / (count(B) + 2)`` over the last
    ``window`` transitions. Counts are maintained incrementally; the raw
    transitions are kept in ``log`` so they can be recounted.
    """

    def __init__(self, window: int = WINDOW_ROUNDS):
        if window < 1:
            raise ValueError("window must hold at least one transition")
        self.window = window
        self.log: deque[Transition] = deque()
        # index: 0 prev_d, 1 not prev_d, 2 prev_l, 3 not prev_l
        self._given = [0, 0, 0, 0]
        self._d_and = [0, 0]   # cur_d with prev_d / not prev_d
        self._l_and_l = [0, 0]  # cur_l with prev_l / not prev_l
        self._l_and_d = [0, 0]  # cur_l with prev_d / not prev_d

    def _apply(self, t: Transition, step: int) -> None:
        di = 0 if t.prev_d else 1
        li = 0 if t.prev_l else 1
        self._given[di] += step
        self._given[2 + li] += step
        if t.cur_d:
            self._d_and[di] += step
        if t.cur_l:
            self._l_and_l[li] += step
            self._l_and_d[di] += step

    def add(self, t: Transition) -> None:
        self.log.append(t)
        self._apply(t, 1)
        if len(self.log) > self.window:
            self._apply(self.log.popleft(), -1)

    def update(self, prev: RoundObservation, cur: RoundObservation) -> "LikelihoodTable":
        self.add(Transition(prev.d_event, prev.l_event, cur.d_event, cur.l_event))
        return self

    def __len__(self) -> int:
        return len(self.log)

    @staticmethod
    def _ratio(hits: int, total: int) -> float:
        return (hits + 1) / (total + 2)

    @property
    def p_d_given_dold(self) -> float:
        return self._ratio(self._d_and[0], self._given[0])

    @property
    def p_d_given_not_dold(self) -> float:
        return self._ratio(self._d_and[1], self._given[1])

    @property
    def p_l_given_lold(self) -> float:
        return self._ratio(self._l_and_l[0], self._given[2])

    @property
    def p_l_given_not_lold(self) -> float:
        return self._ratio(self._l_and_l[1], self._given[3])

    @property
    def p_l_given_dold(self) -> float:
        return self._ratio(self._l_and_d[0], self._given[0])

    @property
    def p_l_given_not_dold(self) -> float:
        return self._ratio(self._l_and_d[1], self._given[1])

    def as_dict(self) -> dict[str, float]:
        names = ("p_d_given_dold", "p_d_given_not_dold", "p_l_given_lold",
                 "p_l_given_not_lold", "p_l_given_dold", "p_l_given_not_dold")
        return {n: getattr(self, n) for n in names}


def update_likelihoods(table: LikelihoodTable, prev: RoundObservation,
                       cur: RoundObservation) -> LikelihoodTable:
    return table.update(prev, cur)


@dataclass
class Likelihoods:
    """Fixed set of the six conditionals; lets the estimators run on given values."""

    p_d_given_dold: float = 0.5
    p_d_given_not_dold: float = 0.5
    p_l_given_lold: float = 0.5
    p_l_given_not_lold: float = 0.5
    p_l_given_dold: float = 0.5
    p_l_given_not_dold: float = 0.5


@dataclass
class ProbState:
    p_d_old: float = 0.0
    p_l_old: float = 0.0
    table: LikelihoodTable | Likelihoods = field(default_factory=LikelihoodTable)
    p_d_est: float = 0.0
    p_l_est: float = 0.0


def estimate_delay_prob(state: ProbState) -> float:
    t = state.table
    p = state.p_d_old
    state.p_d_est = p * t.p_d_given_dold + (1 - p) * t.p_d_given_not_dold
    return state.p_d_est


def raw_loss_prob(state: ProbState) -> float:
    """The four-term loss expansion before clamping (may exceed 1)."""
    t = state.table
    pl, pd = state.p_l_old, state.p_d_old
    return (pl * t.p_l_given_lold + (1 - pl) * t.p_l_given_not_lold
            + pd * t.p_l_given_dold + (1 - pd) * t.p_l_given_not_dold)


def estimate_loss_prob(state: ProbState, combine: str = COMBINE_CLAMP) -> float:
    raw = raw_loss_prob(state)
    if combine == COMBINE_CLAMP:
        state.p_l_est = _clamp01(raw)
    elif combine == COMBINE_AVERAGE:
        state.p_l_est = _clamp01(raw / 2)
    else:
        raise ValueError(f"unknown loss combine mode {combine!r}")
    return state.p_l_est


class BayesEstimator:
    """Per-flow driver: feeds each finished round into the table and estimates.

    Until two rounds have completed both estimates stay at 0. The
    previous-round probabilities are the last round's mean hardness and
    loss fraction.
    """

    def __init__(self, window: int = WINDOW_ROUNDS, theta_d: float = THETA_D,
                 combine: str = COMBINE_CLAMP):
        if combine not in (COMBINE_CLAMP, COMBINE_AVERAGE):
            raise ValueError(f"unknown loss combine mode {combine!r}")
        self.theta_d = theta_d
        self.combine = combine
        self.state = ProbState(table=LikelihoodTable(window))
        self.prev: RoundObservation | None = None
        self.rounds = 0

    def observe(self, hardness_samples, sent: int, lost: int) -> tuple[float, float]:
        obs = summarize_round(hardness_samples, sent, min(lost, sent), self.theta_d)
        st = self.state
        if self.prev is not None:
            st.table.update(self.prev, obs)
        self.prev = obs
        self.rounds += 1
        st.p_d_old = obs.mean_hardness
        st.p_l_old = obs.loss_fraction
        if self.rounds >= 2:
            estimate_delay_prob(st)
            estimate_loss_prob(st, self.combine)
        return st.p_d_est, st.p_l_est

    @property
    def p_d_est(self) -> float:
        return self.state.p_d_est

    @property
    def p_l_est(self) -> float:
        return self.state.p_l_est
