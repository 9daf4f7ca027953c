"""Online controller: accuracy virtual queue plus per-slot drift-plus-penalty."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import AopiError, InfeasibleError, ParameterError
from ..model import Policy, ScenarioState, SlotDecision, VideoConfig, check_feasible, make_decision
from .bcd import (
    BcdResult,
    LbcdParams,
    ObjectiveValue,
    Weights,
    bcd_solve,
    equal_split,
    initial_configs,
    slot_means,
)
from .selection import Selection, select_servers

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VirtualQueue:
    """Accumulated accuracy shortfall against ``p_min``.

    ``history`` holds one (q before the update, slot accuracy) pair per slot.
    """

    p_min: float
    q: float = 0.0
    history: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not 0 <= self.p_min <= 1:
            raise ParameterError("p_min must be a probability")
        if self.q < 0:
            raise ParameterError("queue length cannot be negative")


def queue_update(vq: VirtualQueue, mean_accuracy: float) -> VirtualQueue:
    if not 0 <= mean_accuracy <= 1:
        raise ParameterError(f"mean accuracy must lie in [0, 1], got {mean_accuracy}")
    q = max(vq.q - mean_accuracy + vq.p_min, 0.0)
    return replace(vq, q=q, history=vq.history + ((vq.q, float(mean_accuracy)),))


def drift_bound_holds(q_before: float, q_after: float, mean_accuracy: float, p_min: float,
                      tol: float = 1e-12) -> bool:
    """Per-slot check of 0.5*(q'^2 - q^2) <= 0.5 + q*(p_min - P)."""
    lhs = 0.5 * (q_after ** 2 - q_before ** 2)
    return lhs <= 0.5 + q_before * (p_min - mean_accuracy) + tol * max(1.0, q_before ** 2)


@dataclass
class StepResult:
    """What one strategy decided in one slot, with its closed-form evaluation."""

    decision: SlotDecision
    mean_aopi: float
    mean_accuracy: float
    objective: ObjectiveValue
    q_before: float
    q_after: float
    traces: list[np.ndarray] = field(default_factory=list)
    fallback: bool = False
    flagged: np.ndarray | None = None
    servers: list | None = None


def rescale(state: ScenarioState, decision: SlotDecision, epsilon: float) -> SlotDecision:
    """Keep configs and assignment, scale resources to the current capacities.

    FCFS cameras whose stability margin breaks are switched to LCFSP.
    """
    b = np.array(decision.bandwidth, dtype=float)
    c = np.array(decision.compute, dtype=float)
    a = np.asarray(decision.assignment)
    eq_b, eq_c = equal_split(state, a)
    for s, cap in enumerate(state.servers):
        on = a == s
        if not on.any():
            continue
        used_b, used_c = b[on].sum(), c[on].sum()
        b[on] = b[on] * cap.bandwidth / used_b if used_b > 0 else eq_b[on]
        c[on] = c[on] * cap.compute / used_c if used_c > 0 else eq_c[on]
    trial = make_decision(state, a, decision.configs, b, c)
    configs = [VideoConfig(cfg.resolution, Policy.LCFSP, cfg.model)
               if cfg.policy is Policy.FCFS and not trial.lam[i] <= (1 - epsilon) * trial.mu[i] else cfg
               for i, cfg in enumerate(decision.configs)]
    return make_decision(state, a, configs, b, c)


def fallback_decision(state: ScenarioState, previous: SlotDecision | None,
                      epsilon: float) -> SlotDecision:
    """Previous slot's configs with rescaled resources, or the BCD starting point."""
    if previous is None or previous.n_cameras != state.n_cameras:
        a = np.arange(state.n_cameras) % max(state.n_servers, 1)
        b, c = equal_split(state, a)
        return make_decision(state, a, initial_configs(state), b, c)
    return rescale(state, previous, epsilon)


def solve_assigned(state: ScenarioState, assignment, weights: Weights, params: LbcdParams,
                   **bcd_kwargs) -> BcdResult:
    """Per-server descent; a server whose FCFS floors overflow is retried with LCFSP only."""
    try:
        return bcd_solve(state, assignment, weights, params, **bcd_kwargs)
    except InfeasibleError as exc:
        if exc.server is None or bcd_kwargs.get("policies") == (Policy.LCFSP,):
            raise
        log.info("server %s infeasible (%s); retrying with LCFSP", exc.server, exc)
        kwargs = dict(bcd_kwargs, policies=(Policy.LCFSP,))
        return bcd_solve(state, assignment, weights, params, **kwargs)


def lbcd_step(state: ScenarioState, vq: VirtualQueue, params: LbcdParams = LbcdParams(),
              previous: SlotDecision | None = None) -> tuple[StepResult, VirtualQueue]:
    """Select servers, descend per server, evaluate, and advance the queue."""
    weights = Weights.drift_penalty(vq.q, params.V, state.n_cameras)
    traces = []
    fallback = False
    try:
        sel: Selection = select_servers(state, weights, params)
        if sel.ideal is not None:
            traces.append(sel.ideal.trace)
        res = solve_assigned(state, sel.assignment, weights, params)
        traces.append(res.trace)
        decision = res.decision
    except AopiError as exc:
        log.warning("slot solve failed (%s); using fallback decision", exc)
        decision = fallback_decision(state, previous, params.epsilon_stability)
        fallback = True
    a_bar, p_bar = slot_means(decision)
    if state.n_cameras == 0:
        a_bar, p_bar = 0.0, vq.p_min
    nvq = queue_update(vq, p_bar)
    obj = ObjectiveValue.evaluate(vq.q, params.V, a_bar, p_bar)
    return StepResult(decision, a_bar, p_bar, obj, vq.q, nvq.q, traces, fallback), nvq


class LbcdController:
    """Carries the queue and the last decision across slots."""

    def __init__(self, p_min: float, params: LbcdParams = LbcdParams()):
        self.params = params
        self.queue = VirtualQueue(p_min)
        self.previous: SlotDecision | None = None

    def step(self, state: ScenarioState) -> StepResult:
        result, self.queue = lbcd_step(state, self.queue, self.params, self.previous)
        self.previous = result.decision
        violations = check_feasible(result.decision, state.servers)
        if violations:
            raise InfeasibleError("; ".join(map(str, violations)))
        return result
