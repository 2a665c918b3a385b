from .controller import (
    CWND_MAX, CWND_MIN, TIMEOUT, TRIPLE_DUPACK,
    AckEvent, CongestionController, LossSignal, RoundSummary,
)
from .connection import Connection, Sink, DUPACK_THRESHOLD
from .rtt import RttEstimator, update_rtt

__all__ = [
    "CWND_MAX", "CWND_MIN", "TIMEOUT", "TRIPLE_DUPACK",
    "AckEvent", "CongestionController", "LossSignal", "RoundSummary",
    "Connection", "Sink", "DUPACK_THRESHOLD", "RttEstimator", "update_rtt",
]
