from .bcd import (
    BcdResult,
    LbcdParams,
    ObjectiveValue,
    Weights,
    bcd_solve,
    decision_aopi,
    initial_configs,
    optimize_bandwidth,
    optimize_compute,
    optimize_configs,
    pooled,
    slot_means,
)
from .bounds import BoundReport, TheoremFourBound, theorem4_report
from .lbcd import (
    LbcdController,
    StepResult,
    VirtualQueue,
    drift_bound_holds,
    fallback_decision,
    lbcd_step,
    queue_update,
)
from .selection import Selection, first_fit, select_servers
from .solvers import Allocation, allocate_bandwidth, allocate_compute, kkt_residual

__all__ = [
    "BcdResult", "LbcdParams", "ObjectiveValue", "Weights", "bcd_solve", "decision_aopi",
    "initial_configs", "optimize_bandwidth", "optimize_compute", "optimize_configs", "pooled",
    "slot_means", "BoundReport", "TheoremFourBound", "theorem4_report", "LbcdController",
    "StepResult", "VirtualQueue", "drift_bound_holds", "fallback_decision", "lbcd_step",
    "queue_update", "Selection", "first_fit", "select_servers", "Allocation",
    "allocate_bandwidth", "allocate_compute", "kkt_residual",
]
