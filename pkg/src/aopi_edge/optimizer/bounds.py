"""Long-run performance bounds of the drift-plus-penalty controller."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..errors import ParameterError


@dataclass(frozen=True)
class TheoremFourBound:
    """Analysis constants, estimated by whoever runs the experiment.

    A_opt_estimate: optimal long-run AoPI (the pooled relaxation gives a floor).
    A_max: worst slot AoPI. Phi_max: largest per-slot optimality gap of the
    one-slot solver. epsilon: accuracy surplus of some stationary policy.
    """

    A_opt_estimate: float | None = None
    A_max: float | None = None
    Phi_max: float | None = 0.0
    epsilon: float | None = None

    def __post_init__(self):
        if self.A_opt_estimate is not None and self.A_opt_estimate < 0:
            raise ParameterError("A_opt_estimate must be nonnegative")
        if None not in (self.A_max, self.A_opt_estimate) and self.A_max < self.A_opt_estimate:
            raise ParameterError("A_max must be at least A_opt_estimate")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")


@dataclass(frozen=True)
class BoundReport:
    slots: int
    mean_aopi: float | None
    aopi_bound: float | None
    aopi_ok: bool | None
    mean_accuracy: float | None
    accuracy_bound: float | None
    accuracy_ok: bool | None
    partial: bool

    def as_dict(self) -> dict:
        return asdict(self)


def theorem4_report(slot_aopi: Sequence[float], slot_accuracy: Sequence[float],
                    bound: TheoremFourBound, V: float, p_min: float) -> BoundReport:
    """Compare time averages against the O(1/V) AoPI gap and the accuracy floor."""
    if not V > 0:
        raise ParameterError("V must be positive")
    a = np.asarray(slot_aopi, float)
    p = np.asarray(slot_accuracy, float)
    if a.size == 0:
        return BoundReport(0, None, None, None, None, None, None, True)
    mean_a, mean_p = float(a.mean()), float(p.mean())
    partial = False
    a_bound = a_ok = p_bound = p_ok = None
    if bound.A_opt_estimate is None or bound.Phi_max is None:
        partial = True
    else:
        a_bound = bound.A_opt_estimate + (0.5 + bound.Phi_max) / V
        a_ok = mean_a <= a_bound
    if bound.epsilon is None or bound.A_max is None:
        partial = True
    else:
        p_bound = p_min - (0.5 + V * bound.A_max) / bound.epsilon
        p_ok = mean_p >= p_bound
    return BoundReport(int(a.size), mean_a, a_bound, a_ok, mean_p, p_bound, p_ok, partial)
