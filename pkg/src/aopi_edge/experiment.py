"""Slot loop across strategies and seeds, metric aggregation and file output."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .baselines import dos_step, jcab_step, min_step
from .errors import AopiError, InfeasibleError
from .model import ScenarioState, SlotDecision, check_feasible
from .optimizer.bcd import LbcdParams, decision_aopi
from .optimizer.bounds import TheoremFourBound, theorem4_report
from .optimizer.lbcd import (
    StepResult,
    VirtualQueue,
    drift_bound_holds,
    fallback_decision,
    lbcd_step,
    queue_update,
)
from .scenario import STRATEGY_NAMES, ScenarioSpec, content_walk, scenario_traces, slot_state, spec_summary
from .sim.slot import simulate_slot

log = logging.getLogger(__name__)

SLOT_COLUMNS = ("seed", "strategy", "slot", "mean_aopi", "mean_accuracy", "q", "objective", "status",
                "sim_mean_aopi", "sim_mean_accuracy")
DECISION_COLUMNS = ("strategy", "seed", "slot", "camera", "server", "resolution", "policy", "model",
                    "bandwidth_hz", "compute_flops", "lambda", "mu", "p", "aopi_closed_form", "q_after")
_STRATEGY_CODE = {name: i for i, name in enumerate(STRATEGY_NAMES)}
_TRACE_TOL = 1e-9


@dataclass
class SlotMetrics:
    seed: int
    strategy: str
    slot: int
    mean_aopi: float
    mean_accuracy: float
    q: float
    objective: float
    status: str = "ok"
    sim_mean_aopi: float | None = None
    sim_mean_accuracy: float | None = None
    q_before: float = 0.0
    trace_increases: int = 0
    infeasible: int = 0

    def row(self) -> list[str]:
        return [str(self.seed), self.strategy, str(self.slot), _fmt(self.mean_aopi),
                _fmt(self.mean_accuracy), _fmt(self.q), _fmt(self.objective), self.status,
                _fmt(self.sim_mean_aopi), _fmt(self.sim_mean_accuracy)]


@dataclass
class RunLog:
    spec: ScenarioSpec
    mode: str
    strategies: tuple[str, ...]
    seeds: tuple[int, ...]
    slots: list[SlotMetrics] = field(default_factory=list)
    decisions: list[list[str]] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _monotone_violations(trace: np.ndarray) -> int:
    t = np.asarray(trace, float)
    if t.size < 2:
        return 0
    scale = np.maximum(np.abs(t[:-1]), 1.0)
    return int(np.sum(np.diff(t) > _TRACE_TOL * scale))


class _Strategy:
    """One strategy's state within one seed: its queue and last decision."""

    def __init__(self, name: str, spec: ScenarioSpec, params: LbcdParams):
        self.name = name
        self.spec = spec
        self.params = params
        self.queue = VirtualQueue(spec.p_min)
        self.previous: SlotDecision | None = None

    def step(self, state: ScenarioState) -> tuple[StepResult, str]:
        status = "ok"
        if self.name == "lbcd":
            res, self.queue = lbcd_step(state, self.queue, self.params, self.previous)
            status = "fallback" if res.fallback else "ok"
        else:
            try:
                if self.name == "dos":
                    res = dos_step(state, self.params)
                elif self.name == "jcab":
                    res = jcab_step(state, self.spec.jcab_latency_budget)
                else:
                    res = min_step(state, self.params)
            except AopiError as exc:
                log.warning("%s failed (%s); using fallback decision", self.name, exc)
                d = fallback_decision(state, self.previous, self.params.epsilon_stability)
                a = decision_aopi(d)
                res = StepResult(d, float(np.mean(a)), float(np.mean(d.p)), None, 0.0, 0.0, fallback=True)
                status = "fallback"
            # baselines carry a shadow queue so their accuracy deficit is comparable
            res.q_before = self.queue.q
            self.queue = queue_update(self.queue, min(max(res.mean_accuracy, 0.0), 1.0))
            res.q_after = self.queue.q
        self.previous = res.decision
        return res, status


def run_experiment(spec: ScenarioSpec, strategies: Sequence[str] | None = None, mode: str = "analytic",
                   seeds: Sequence[int] | None = None, slots: int | None = None,
                   record_decisions: bool = False,
                   progress: Callable[[int, str, int], None] | None = None) -> RunLog:
    """Run every strategy on identical per-slot inputs for each seed.

    Strategies never share state, so a strategy's rows do not depend on which
    other strategies run alongside it.
    """
    if mode not in ("analytic", "simulate"):
        raise ValueError(f"unknown mode {mode!r}")
    strategies = tuple(strategies or spec.strategies)
    for s in strategies:
        if s not in STRATEGY_NAMES:
            raise ValueError(f"unknown strategy {s!r}")
    seeds = tuple(seeds or spec.seeds)
    if slots is not None:
        spec = spec.with_overrides(slots=int(slots))
    params = LbcdParams(spec.V, spec.max_bcd_iters, spec.bcd_rel_tol, spec.solver_tol, spec.epsilon_stability,
                         spec.refine_rounds)
    run = RunLog(spec, mode, strategies, seeds)
    for seed in seeds:
        trace = scenario_traces(spec, seed)
        betas = content_walk(spec, seed)
        runners = {name: _Strategy(name, spec, params) for name in strategies}
        for t in range(spec.slots):
            servers = trace.servers_at(t)
            if sum(s.bandwidth for s in servers) <= 0 or sum(s.compute for s in servers) <= 0:
                raise InfeasibleError(f"slot {t}: no server has any bandwidth or compute")
            state = slot_state(spec, betas[t], servers)
            for name in strategies:
                run.slots.append(_one(run, runners[name], state, seed, t, mode, record_decisions))
            if progress is not None:
                progress(seed, "slot", t)
    return run


def _one(run: RunLog, runner: _Strategy, state: ScenarioState, seed: int, t: int, mode: str,
         record: bool) -> SlotMetrics:
    spec = run.spec
    name = runner.name
    try:
        res, status = runner.step(state)
    except AopiError as exc:
        run.errors.append(f"seed {seed}, slot {t}, {name}: {exc}")
        return SlotMetrics(seed, name, t, math.nan, math.nan, runner.queue.q, math.nan, "error",
                           q_before=runner.queue.q)
    caps = res.servers if res.servers is not None else state.servers
    infeasible = len(check_feasible(res.decision, caps))
    if infeasible:
        run.errors.append(f"seed {seed}, slot {t}, {name}: decision violates {infeasible} constraint(s)")
    objective = res.objective.drift_penalty if res.objective is not None else math.nan
    m = SlotMetrics(seed, name, t, res.mean_aopi, res.mean_accuracy, res.q_after, objective, status,
                    q_before=res.q_before, trace_increases=sum(_monotone_violations(x) for x in res.traces),
                    infeasible=infeasible)
    if mode == "simulate" and res.decision.n_cameras:
        sim_state = state if res.servers is None else state.with_servers(res.servers)
        frames = spec.sim_frames or None
        try:
            sims = simulate_slot(res.decision, sim_state, seed, horizon_frames=frames,
                                 slot_length=spec.slot_length, warmup_fraction=spec.warmup_fraction,
                                 key=(t, _STRATEGY_CODE[name]))
            m.sim_mean_aopi = float(np.mean([s.mean_aopi for s in sims]))
            m.sim_mean_accuracy = float(np.mean([s.empirical_accuracy for s in sims]))
        except AopiError as exc:
            run.errors.append(f"seed {seed}, slot {t}, {name}: simulation failed: {exc}")
    if record:
        d = res.decision
        a = decision_aopi(d)
        for n, cfg in enumerate(d.configs):
            run.decisions.append([name, str(seed), str(t), str(n), str(int(d.assignment[n])),
                                  str(cfg.resolution), cfg.policy.name, state.models[cfg.model].name,
                                  _fmt(d.bandwidth[n]), _fmt(d.compute[n]), _fmt(d.lam[n]), _fmt(d.mu[n]),
                                  _fmt(d.p[n]), _fmt(a[n]), _fmt(res.q_after)])
    return m


# ---------------------------------------------------------------- summaries


def time_to_reach(accuracy: Sequence[float], threshold: float) -> int | None:
    """First slot from which the running-average accuracy stays >= threshold to the end."""
    p = np.asarray(accuracy, float)
    if p.size == 0:
        return None
    running = np.cumsum(p) / np.arange(1, p.size + 1)
    below = np.flatnonzero(~(running >= threshold))
    if below.size == 0:
        return 0
    last = int(below[-1])
    return None if last == p.size - 1 else last + 1


def _mean(xs) -> float | None:
    xs = [x for x in xs if x is not None and not math.isnan(x)]
    return float(np.mean(xs)) if xs else None


def summarize(rows: Iterable[SlotMetrics], p_min: float, V: float, margin: float = 0.01,
              phi_max: float = 0.0) -> dict:
    """Long-run means, convergence slots, AoPI ratios, bound checks and invariant counts."""
    rows = list(rows)
    groups: dict[str, dict[int, list[SlotMetrics]]] = {}
    for r in rows:
        groups.setdefault(r.strategy, {}).setdefault(r.seed, []).append(r)
    per_run: dict = {}
    overall: dict = {}
    for name in sorted(groups, key=lambda s: _STRATEGY_CODE.get(s, 99)):
        per_run[name] = {}
        for seed, rs in sorted(groups[name].items()):
            rs.sort(key=lambda r: r.slot)
            acc = [r.mean_accuracy for r in rs]
            clean = [a for a in acc if not math.isnan(a)]
            per_run[name][str(seed)] = {
                "slots": len(rs),
                "mean_aopi": _mean(r.mean_aopi for r in rs),
                "mean_accuracy": _mean(acc),
                "final_q": rs[-1].q if rs else None,
                "time_to_reach": time_to_reach(clean, p_min - margin) if clean else None,
                "sim_mean_aopi": _mean(r.sim_mean_aopi for r in rs),
                "sim_mean_accuracy": _mean(r.sim_mean_accuracy for r in rs),
                "fallback_slots": sum(r.status == "fallback" for r in rs),
                "error_slots": sum(r.status == "error" for r in rs),
            }
        runs = per_run[name].values()
        overall[name] = {k: _mean(v[k] for v in runs)
                         for k in ("mean_aopi", "mean_accuracy", "sim_mean_aopi", "sim_mean_accuracy")}
    ratios = {}
    for a in overall:
        for b in overall:
            if a != b and overall[a]["mean_aopi"] and overall[b]["mean_aopi"]:
                ratios[f"{a}/{b}"] = overall[a]["mean_aopi"] / overall[b]["mean_aopi"]
    bounds = {}
    if "lbcd" in groups:
        for seed, rs in sorted(groups["lbcd"].items()):
            a_opt = per_run.get("min", {}).get(str(seed), {}).get("mean_aopi")
            slot_a = [r.mean_aopi for r in rs if not math.isnan(r.mean_aopi)]
            a_max = max(slot_a) if slot_a else None
            if a_opt is not None and a_max is not None and a_max < a_opt:
                a_max = a_opt
            rep = theorem4_report(slot_a, [r.mean_accuracy for r in rs if not math.isnan(r.mean_accuracy)],
                                  TheoremFourBound(a_opt, a_max, phi_max, None), V, p_min)
            bounds[str(seed)] = rep.as_dict()
    drift = sum(1 for r in rows if not math.isnan(r.mean_accuracy)
                and not drift_bound_holds(r.q_before, r.q, r.mean_accuracy, p_min))
    return {
        "p_min": p_min,
        "V": V,
        "convergence_threshold": p_min - margin,
        "strategies": overall,
        "runs": per_run,
        "ratios": ratios,
        "bounds": bounds,
        "invariants": {
            "drift_violations": drift,
            "bcd_trace_increases": sum(r.trace_increases for r in rows),
            "infeasible_decisions": sum(r.infeasible for r in rows),
        },
    }


def run_summary(run: RunLog) -> dict:
    out = summarize(run.slots, run.spec.p_min, run.spec.V, run.spec.convergence_margin)
    out["scenario"] = spec_summary(run.spec)
    out["mode"] = run.mode
    out["errors"] = list(run.errors)
    return out


# ---------------------------------------------------------------- files


def write_slots(rows: Iterable[SlotMetrics], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SLOT_COLUMNS)
        for r in sorted(rows, key=lambda r: (r.seed, _STRATEGY_CODE.get(r.strategy, 99), r.slot)):
            w.writerow(r.row())


def read_slots(path) -> list[SlotMetrics]:
    """Parse ``slots.csv`` back; the queue before each slot is rebuilt from the previous row."""
    out = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SLOT_COLUMNS:
            raise ValueError(f"unexpected slots.csv header {reader.fieldnames}")
        prev_q: dict[tuple[int, str], float] = {}
        for row in reader:
            f = lambda k: float(row[k]) if row[k] != "" else None
            key = (int(row["seed"]), row["strategy"])
            m = SlotMetrics(key[0], key[1], int(row["slot"]), f("mean_aopi"), f("mean_accuracy"), f("q"),
                            f("objective"), row["status"], f("sim_mean_aopi"), f("sim_mean_accuracy"),
                            q_before=prev_q.get(key, 0.0))
            prev_q[key] = m.q
            out.append(m)
    return out


def write_decisions(run: RunLog, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DECISION_COLUMNS)
        w.writerows(run.decisions)


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return _json_safe(x.item())
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n")


def emit_results(run: RunLog, out_dir, decisions: bool = True, curves: bool = True) -> dict:
    """Write slots.csv, decisions.csv, summary.json and the curves/ directory."""
    from .curves import write_all_curves

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_slots(run.slots, out / "slots.csv")
    if decisions:
        write_decisions(run, out / "decisions.csv")
    summary = run_summary(run)
    write_json(summary, out / "summary.json")
    if curves:
        write_all_curves(out / "curves")
    return summary
