"""The congestion-controller contract shared by PHCC and the baselines."""

from __future__ import annotations

from dataclasses import dataclass

from .rtt import RttEstimator

TRIPLE_DUPACK = "triple-dupack"
TIMEOUT = "timeout"

CWND_MIN = 2.0
CWND_MAX = 100_000.0


@dataclass(frozen=True)
class AckEvent:
    newly_acked_pkts: int
    rtt_sample: float | None = None
    is_dupack: bool = False
    now: float = 0.0

    def __post_init__(self):
        if self.is_dupack != (self.newly_acked_pkts == 0):
            raise ValueError("is_dupack must hold exactly when nothing new is acked")


@dataclass(frozen=True)
class LossSignal:
    kind: str
    delay_at_loss: float
    now: float = 0.0
    # a timeout that interrupts an ongoing fast recovery (same loss episode)
    during_recovery: bool = False

    def __post_init__(self):
        if self.kind not in (TRIPLE_DUPACK, TIMEOUT):
            raise ValueError(f"unknown loss kind {self.kind!r}")


@dataclass(frozen=True)
class RoundSummary:
    """What happened during one RTT round (from one round boundary to the next)."""

    index: int
    start: float
    end: float
    acked_pkts: int
    sent_pkts: int
    lost_pkts: int
    rtt_samples: int
    rtt_mean: float | None
    rtt_min: float | None
    seqno: int  # next sequence number to send at round end
    lastack: int

    @property
    def duration(self) -> float:
        return self.end - self.start


class CongestionController:
    """Base class; subclasses override the hooks they care about.

    ``cwnd`` is real-valued and clamped to ``[cwnd_min, cwnd_max]`` on every
    assignment, so no hook can leave it out of bounds. The owning
    connection sets ``rtt`` before any hook runs.
    """

    name = "base"

    def __init__(self, cwnd_min: float = CWND_MIN, cwnd_max: float = CWND_MAX,
                 initial_cwnd: float = 2.0):
        if not 0 < cwnd_min <= cwnd_max:
            raise ValueError("need 0 < cwnd_min <= cwnd_max")
        self.cwnd_min = float(cwnd_min)
        self.cwnd_max = float(cwnd_max)
        self._cwnd = self.cwnd_min
        self.cwnd = initial_cwnd
        self.rtt = RttEstimator()

    @property
    def cwnd(self) -> float:
        return self._cwnd

    @cwnd.setter
    def cwnd(self, value: float) -> None:
        self._cwnd = min(self.cwnd_max, max(self.cwnd_min, float(value)))

    @property
    def state_label(self) -> str:
        """Short label written to the flows.csv ``phase`` column."""
        return ""

    def on_ack(self, event: AckEvent) -> None:
        pass

    def on_loss(self, signal: LossSignal) -> None:
        pass

    def on_round_end(self, summary: RoundSummary) -> None:
        pass
