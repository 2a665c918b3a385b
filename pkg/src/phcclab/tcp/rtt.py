from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import SimulationError

RTO_FLOOR_S = 0.2
RTO_CAP_S = 60.0
INITIAL_RTO_S = 1.0


@dataclass
class RttEstimator:
    """Jacobson/Karels smoothed RTT with an RTO floor and cap.

    ``d_min`` is the smallest sample ever seen (the base RTT) and
    ``last_sample`` the most recent one; both feed the delay-based parts
    of the controllers.
    """

    rto_floor: float = RTO_FLOOR_S
    rto_cap: float = RTO_CAP_S
    srtt: float = 0.0
    rttvar: float = 0.0
    rto: float = INITIAL_RTO_S
    d_min: float = math.inf
    last_sample: float = 0.0
    samples: int = 0

    def update(self, sample: float) -> None:
        if not sample > 0:
            raise SimulationError(f"non-positive RTT sample {sample}")
        if self.samples == 0:
            self.srtt = sample
            self.rttvar = sample / 2
        else:
            # rttvar uses the pre-update srtt
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - sample)
            self.srtt = 0.875 * self.srtt + 0.125 * sample
        self.samples += 1
        self.rto = min(self.rto_cap, max(self.rto_floor, self.srtt + 4 * self.rttvar))
        if sample < self.d_min:
            self.d_min = sample
        self.last_sample = sample

    def back_off(self) -> None:
        self.rto = min(self.rto_cap, 2 * self.rto)

    @property
    def has_samples(self) -> bool:
        return self.samples > 0


def update_rtt(est: RttEstimator, sample: float) -> RttEstimator:
    est.update(sample)
    return est
