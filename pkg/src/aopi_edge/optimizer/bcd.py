"""Block coordinate descent over configurations, bandwidth and compute."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..analytics import aopi_array
from ..errors import InfeasibleError, ParameterError
from ..model import (
    EPSILON_STABILITY,
    EdgeServerCapacity,
    Policy,
    ScenarioState,
    SlotDecision,
    VideoConfig,
    make_decision,
)
from . import _kernels as K
from .solvers import allocate_bandwidth, allocate_compute


@dataclass(frozen=True)
class LbcdParams:
    V: float = 10.0
    max_bcd_iters: int = 10
    bcd_rel_tol: float = 1e-4
    solver_tol: float = 1e-6
    epsilon_stability: float = EPSILON_STABILITY
    refine_rounds: int = 2

    def __post_init__(self):
        for name in ("V", "max_bcd_iters", "bcd_rel_tol", "solver_tol", "epsilon_stability"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"LbcdParams.{name} must be positive")
        if not self.epsilon_stability < 1:
            raise ParameterError("epsilon_stability must be below 1")
        if self.refine_rounds < 0:
            raise ParameterError("refine_rounds cannot be negative")


@dataclass(frozen=True)
class ObjectiveValue:
    drift_penalty: float
    mean_aopi: float
    mean_accuracy: float

    @classmethod
    def evaluate(cls, q: float, V: float, mean_aopi: float, mean_accuracy: float) -> "ObjectiveValue":
        return cls(-q * mean_accuracy + V * mean_aopi, mean_aopi, mean_accuracy)


@dataclass(frozen=True)
class Weights:
    """Per-camera objective ``age * A_n - acc * p_n``."""

    age: float
    acc: float

    @classmethod
    def drift_penalty(cls, q: float, V: float, n_cameras: int) -> "Weights":
        n = max(n_cameras, 1)
        return cls(V / n, q / n)


@dataclass
class BcdResult:
    decision: SlotDecision
    trace: np.ndarray
    iterations: int


def decision_aopi(decision: SlotDecision) -> np.ndarray:
    fcfs = np.array([c.policy is Policy.FCFS for c in decision.configs], dtype=bool)
    return aopi_array(decision.lam, decision.mu, decision.p, fcfs)


def slot_means(decision: SlotDecision) -> tuple[float, float]:
    """(mean AoPI, mean accuracy) across cameras; NaN for an empty decision."""
    if decision.n_cameras == 0:
        return float("nan"), float("nan")
    return float(np.mean(decision_aopi(decision))), float(np.mean(decision.p))


def initial_configs(state: ScenarioState) -> list[VideoConfig]:
    """Lowest resolution, LCFSP and the cheapest allowed model for every camera."""
    r0 = state.resolutions[0]
    kappa = np.array([m.flops_at_ref for m in state.models])
    out = []
    for cam in state.cameras:
        allowed = sorted(cam.models)
        out.append(VideoConfig(r0, Policy.LCFSP, min(allowed, key=lambda m: (kappa[m], m))))
    return out


def _config_arrays(state: ScenarioState, configs: Sequence[VideoConfig]):
    r = np.array([state.resolutions.index(c.resolution) for c in configs], dtype=np.int64)
    pol = np.array([int(c.policy) for c in configs], dtype=np.int64)
    m = np.array([c.model for c in configs], dtype=np.int64)
    return r, pol, m


def _members(assignment, s):
    return np.flatnonzero(np.asarray(assignment) == s)


def _policy_mask(policies) -> np.ndarray:
    mask = np.zeros(2, dtype=np.bool_)
    for p in policies:
        mask[int(Policy.parse(p))] = True
    if not mask.any():
        raise ParameterError("at least one policy must be enabled")
    return mask


def optimize_configs(state: ScenarioState, decision: SlotDecision, weights: Weights,
                     epsilon: float = EPSILON_STABILITY,
                     policies=(Policy.FCFS, Policy.LCFSP)) -> list[VideoConfig]:
    """Per-camera exhaustive search with resources held fixed."""
    g = state.grids
    r, pol, m = _config_arrays(state, decision.configs)
    K.best_configs(np.asarray(decision.bandwidth, float), np.asarray(decision.compute, float),
                   g.lam_per_hz, g.xi, g.p, g.allowed, weights.age, weights.acc, epsilon,
                   r, pol, m, _policy_mask(policies))
    return [VideoConfig(state.resolutions[ri], Policy(pi), int(mi)) for ri, pi, mi in zip(r, pol, m)]


def optimize_bandwidth(state: ScenarioState, decision: SlotDecision,
                       epsilon: float = EPSILON_STABILITY) -> np.ndarray:
    """Optimal bandwidth per camera, server by server, at fixed configs and compute."""
    g = state.grids
    r, pol, _ = _config_arrays(state, decision.configs)
    out = np.zeros(decision.n_cameras)
    for s, cap in enumerate(state.servers):
        idx = _members(decision.assignment, s)
        if idx.size == 0:
            continue
        try:
            alloc = allocate_bandwidth(g.lam_per_hz[idx, r[idx]], decision.p[idx], decision.mu[idx],
                                       pol[idx], cap.bandwidth, epsilon)
        except InfeasibleError as exc:
            raise InfeasibleError(str(exc), server=s) from None
        out[idx] = alloc.amounts
    return out


def optimize_compute(state: ScenarioState, decision: SlotDecision,
                     epsilon: float = EPSILON_STABILITY) -> np.ndarray:
    g = state.grids
    r, pol, m = _config_arrays(state, decision.configs)
    out = np.zeros(decision.n_cameras)
    for s, cap in enumerate(state.servers):
        idx = _members(decision.assignment, s)
        if idx.size == 0:
            continue
        try:
            alloc = allocate_compute(1.0 / g.xi[r[idx], m[idx]], decision.p[idx], decision.lam[idx],
                                     pol[idx], cap.compute, epsilon)
        except InfeasibleError as exc:
            raise InfeasibleError(str(exc), server=s) from None
        out[idx] = alloc.amounts
    return out


def equal_split(state: ScenarioState, assignment) -> tuple[np.ndarray, np.ndarray]:
    assignment = np.asarray(assignment)
    b = np.zeros(len(assignment))
    c = np.zeros(len(assignment))
    for s, cap in enumerate(state.servers):
        idx = _members(assignment, s)
        if idx.size:
            b[idx] = cap.bandwidth / idx.size
            c[idx] = cap.compute / idx.size
    return b, c


def bcd_solve(state: ScenarioState, assignment, weights: Weights,
              params: LbcdParams = LbcdParams(), *,
              policies=(Policy.FCFS, Policy.LCFSP), allowed: np.ndarray | None = None,
              configs: Sequence[VideoConfig] | None = None,
              search_configs: bool = True) -> BcdResult:
    """Alternate exact block minimisations until the objective stalls.

    Servers are independent once the assignment is fixed, so each runs its
    own descent; ``trace`` is the summed objective per iteration. ``allowed``
    narrows the model catalog per camera and ``configs`` overrides the
    starting configurations.
    """
    n = state.n_cameras
    assignment = np.asarray(assignment, dtype=np.int64)
    if assignment.shape != (n,):
        raise ParameterError("assignment needs one server per camera")
    if n and (assignment.min() < 0 or assignment.max() >= state.n_servers):
        raise ParameterError("assignment refers to a nonexistent server")
    g = state.grids
    allowed = g.allowed if allowed is None else np.asarray(allowed, dtype=np.bool_) & g.allowed
    init = list(configs) if configs is not None else initial_configs(state)
    r, pol, m = _config_arrays(state, init)
    b, c = equal_split(state, assignment)
    mask = _policy_mask(policies)
    traces, iters = [], 0
    for s, cap in enumerate(state.servers):
        idx = _members(assignment, s)
        if idx.size == 0:
            continue
        rs, ps, ms, bs, cs = r[idx], pol[idx], m[idx], b[idx], c[idx]
        args = (np.ascontiguousarray(g.lam_per_hz[idx]), g.xi, np.ascontiguousarray(g.p[idx]),
                np.ascontiguousarray(allowed[idx]), float(cap.bandwidth), float(cap.compute),
                weights.age, weights.acc, params.epsilon_stability, params.max_bcd_iters, params.bcd_rel_tol)
        trace = np.full(params.max_bcd_iters + 1, np.nan)
        it, status = K.bcd(*args, rs, ps, ms, bs, cs, trace, mask, search_configs)
        _raise_status(status, s, idx.size)
        pieces = [trace[:it + 1]]
        total_it = it
        # swaps that only pay off once resources move are out of reach of single blocks
        for _ in range(params.refine_rounds if search_configs else 0):
            found = np.empty(idx.size * 6)
            k = K.refine(*args, rs, ps, ms, bs, cs, mask, found)
            if k == 0:
                break
            trace = np.full(params.max_bcd_iters + 1, np.nan)
            it, status = K.bcd(*args, rs, ps, ms, bs, cs, trace, mask, True)
            _raise_status(status, s, idx.size)
            pieces += [found[:k], trace[1:it + 1]]
            total_it += k + it
        r[idx], pol[idx], m[idx], b[idx], c[idx] = rs, ps, ms, bs, cs
        traces.append(np.concatenate(pieces))
        iters = max(iters, total_it)
    final = [VideoConfig(state.resolutions[ri], Policy(pi), int(mi)) for ri, pi, mi in zip(r, pol, m)]
    decision = make_decision(state, assignment, final, b, c)
    return BcdResult(decision, _merge_traces(traces), iters)


def _raise_status(status: int, server: int, count: int) -> None:
    if status == K.INFEASIBLE_BANDWIDTH:
        raise InfeasibleError(f"server {server} has no bandwidth for {count} camera(s)", server=server)
    if status == K.INFEASIBLE_COMPUTE:
        raise InfeasibleError(f"server {server} has no compute for {count} camera(s)", server=server)


def _merge_traces(traces) -> np.ndarray:
    if not traces:
        return np.zeros(1)
    length = max(len(t) for t in traces)
    total = np.zeros(length)
    for t in traces:
        total += np.concatenate([t, np.full(length - len(t), t[-1])])
    return total


def pooled(state: ScenarioState) -> ScenarioState:
    """The same cameras facing one server holding every server's capacity."""
    return state.with_servers([EdgeServerCapacity(sum(s.bandwidth for s in state.servers),
                                                  sum(s.compute for s in state.servers))])
