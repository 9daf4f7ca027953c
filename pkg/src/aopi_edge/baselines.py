"""Comparison strategies: DOS, JCAB and the pooled MIN lower bound."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .analytics import best_policy
from .errors import ParameterError
from .model import (
    EdgeServerCapacity,
    Policy,
    ScenarioState,
    SlotDecision,
    VideoConfig,
    make_decision,
)
from .optimizer.bcd import LbcdParams, ObjectiveValue, Weights, pooled, slot_means
from .optimizer.lbcd import StepResult, solve_assigned
from .optimizer.selection import first_fit, select_servers
from .optimizer.solvers import allocate_bandwidth


class BaselineKind(enum.Enum):
    DOS = "dos"
    JCAB = "jcab"
    MIN = "min"


@dataclass(frozen=True)
class BaselineConfig:
    kind: BaselineKind
    jcab_latency_budget: float = 0.5

    def __post_init__(self):
        if not self.jcab_latency_budget > 0:
            raise ParameterError("latency budget must be positive")


def _step(decision: SlotDecision, q: float, V: float, traces=(), flagged=None,
          servers=None) -> StepResult:
    a_bar, p_bar = slot_means(decision)
    return StepResult(decision, a_bar, p_bar, ObjectiveValue.evaluate(q, V, a_bar, p_bar), 0.0, 0.0,
                      list(traces), False, flagged, servers)


# ---------------------------------------------------------------- DOS


def lightest_models(state: ScenarioState) -> np.ndarray:
    """Mask keeping only each camera's cheapest allowed model."""
    g = state.grids
    kappa = np.array([m.flops_at_ref for m in state.models])
    mask = np.zeros_like(g.allowed)
    for n in range(state.n_cameras):
        ids = np.flatnonzero(g.allowed[n])
        mask[n, ids[np.argmin(kappa[ids])]] = True
    return mask


def pick_policies(state: ScenarioState, decision: SlotDecision) -> SlotDecision:
    """Fresher policy per camera with everything else fixed."""
    configs = []
    for n, cfg in enumerate(decision.configs):
        choice = best_policy(float(decision.lam[n]), float(decision.mu[n]), float(decision.p[n]))
        configs.append(VideoConfig(cfg.resolution, choice.policy, cfg.model))
    return make_decision(state, decision.assignment, configs, decision.bandwidth, decision.compute)


def dos_step(state: ScenarioState, params: LbcdParams = LbcdParams()) -> StepResult:
    """Maximise accuracy minus AoPI over resolution and resources, then pick the policy.

    The strategy adapts resolution only, so every camera keeps its lightest
    model; the descent runs under LCFSP and the policy is set afterwards.
    """
    weights = Weights(1.0, 1.0)
    kw = dict(allowed=lightest_models(state), policies=(Policy.LCFSP,))
    sel = select_servers(state, weights, params, **kw)
    res = solve_assigned(state, sel.assignment, weights, params, **kw)
    decision = pick_policies(state, res.decision)
    traces = ([sel.ideal.trace] if sel.ideal is not None else []) + [res.trace]
    return _step(decision, 1.0, 1.0, traces)


# ---------------------------------------------------------------- JCAB


def jcab_allocate(state: ScenarioState, assignment, budget: float):
    """Accuracy-first configuration under a per-frame latency budget.

    Returns (configs, bandwidth, compute, flagged). Bandwidth minimises the
    summed transmission delay per server, compute is split in proportion to
    per-frame FLOPs. Violators step down one accuracy level at a time; a
    camera that exhausts its list gets its fastest configuration and is
    flagged.
    """
    g = state.grids
    n_cam = state.n_cameras
    assignment = np.asarray(assignment, dtype=np.int64)
    ladders = []
    for n in range(n_cam):
        cands = [(ri, m) for ri in range(len(state.resolutions)) for m in np.flatnonzero(g.allowed[n])]
        # highest accuracy first; cheaper frames first among equals
        cands.sort(key=lambda rm: (-g.p[n, rm[0], rm[1]], g.xi[rm[0], rm[1]], rm[0], rm[1]))
        ladders.append(cands)
    fastest = [min(l, key=lambda rm: (state.resolutions[rm[0]], g.xi[rm[0], rm[1]], rm[1])) for l in ladders]
    level = np.zeros(n_cam, dtype=int)
    flagged = np.zeros(n_cam, dtype=bool)

    def current():
        return [fastest[n] if flagged[n] else ladders[n][level[n]] for n in range(n_cam)]

    while True:
        chosen = current()
        r = np.array([rm[0] for rm in chosen], dtype=int)
        m = np.array([rm[1] for rm in chosen], dtype=int)
        b = np.zeros(n_cam)
        c = np.zeros(n_cam)
        for s, cap in enumerate(state.servers):
            idx = np.flatnonzero(assignment == s)
            if idx.size == 0:
                continue
            ones = np.ones(idx.size)
            b[idx] = allocate_bandwidth(g.lam_per_hz[idx, r[idx]], ones, np.ones(idx.size),
                                        [Policy.LCFSP] * idx.size, cap.bandwidth).amounts
            xi = g.xi[r[idx], m[idx]]
            c[idx] = cap.compute * xi / xi.sum()
        lam = b * g.lam_per_hz[np.arange(n_cam), r]
        mu = c / g.xi[r, m]
        with np.errstate(divide="ignore"):
            latency = 1.0 / lam + 1.0 / mu
        late = (latency > budget) & ~flagged
        if not late.any():
            break
        for n in np.flatnonzero(late):
            if level[n] + 1 < len(ladders[n]):
                level[n] += 1
            else:
                flagged[n] = True
    configs = []
    for n in range(n_cam):
        choice = best_policy(float(lam[n]), float(mu[n]), float(g.p[n, r[n], m[n]]))
        configs.append(VideoConfig(state.resolutions[r[n]], choice.policy, int(m[n])))
    return configs, b, c, flagged


def jcab_step(state: ScenarioState, latency_budget: float = 0.5) -> StepResult:
    if not latency_budget > 0:
        raise ParameterError("latency budget must be positive")
    n = state.n_cameras
    if state.n_servers > 1 and n:
        pool = pooled(state)
        _, b_hat, c_hat, _ = jcab_allocate(pool, np.zeros(n, dtype=np.int64), latency_budget)
        assignment, _ = first_fit(b_hat, c_hat, [s.bandwidth for s in state.servers],
                                  [s.compute for s in state.servers])
    else:
        assignment = np.zeros(n, dtype=np.int64)
    configs, b, c, flagged = jcab_allocate(state, assignment, latency_budget)
    decision = make_decision(state, assignment, configs, b, c)
    return _step(decision, 1.0, 0.0, flagged=flagged)


# ---------------------------------------------------------------- MIN


def min_step(state: ScenarioState, params: LbcdParams = LbcdParams()) -> StepResult:
    """Freshest decision on the pooled server with the accuracy target dropped."""
    pool = pooled(state)
    n = state.n_cameras
    res = solve_assigned(pool, np.zeros(n, dtype=np.int64), Weights.drift_penalty(0.0, 1.0, n), params)
    return _step(res.decision, 0.0, 1.0, [res.trace], servers=list(pool.servers))


def pooled_capacity(state: ScenarioState) -> list[EdgeServerCapacity]:
    return list(pooled(state).servers)
