"""Acceptance checks, one PASS/FAIL line per criterion.

Run with ``pytest -v tests/test_acceptance.py`` (lines show up in the
output) or ``python3 tests/test_acceptance.py``. The long scenario runs are
shared through module-scoped fixtures; the whole file takes a few minutes.
"""
import math
import sys
import time

import numpy as np
import pytest

from aopi_edge import AopiInputs, Policy, aopi_fcfs, aopi_lcfsp, policy_threshold
from aopi_edge.analytics import aopi_array
from aopi_edge.baselines import dos_step, lightest_models
from aopi_edge.cli import main as cli_main
from aopi_edge.experiment import run_experiment, summarize, time_to_reach
from aopi_edge.optimizer import (
    LbcdParams,
    Weights,
    allocate_bandwidth,
    allocate_compute,
    bcd_solve,
    decision_aopi,
)
from aopi_edge.scenario import TEMPLATE, content_walk, parse_scenario, scenario_traces, slot_state
from aopi_edge.sim import SimConfig, diagnostics_check, simulate_single
from aopi_edge.sim.validation import validation_grid

from conftest import make_state
from test_bcd import joint_brute
from test_solvers import brute_bandwidth, brute_compute

F, L = Policy.FCFS, Policy.LCFSP
SEEDS = (1, 2, 3)
SLOTS = 2000
V_SWEEP = (1.0, 10.0, 100.0)
THRESHOLD = 0.69


def report(capsys, number: int, ok: bool, detail: str):
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


# ---------------------------------------------------------------- shared runs


@pytest.fixture(scope="module")
def spec():
    return parse_scenario(TEMPLATE)


@pytest.fixture(scope="module")
def baseline_run(spec):
    """All four strategies at V = 10; its LBCD rows double as the V = 10 sweep point."""
    t0 = time.perf_counter()
    run = run_experiment(spec, ("lbcd", "dos", "jcab", "min"), seeds=SEEDS, slots=SLOTS)
    return run, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sweep_runs(spec, baseline_run):
    runs = {}
    for V in V_SWEEP:
        if V == spec.V:
            rows = [r for r in baseline_run[0].slots if r.strategy == "lbcd"]
        else:
            rows = run_experiment(spec.with_overrides(V=V), ("lbcd",), seeds=SEEDS, slots=SLOTS).slots
        runs[V] = rows
    return runs


# ---------------------------------------------------------------- criteria


def test_criterion_01_simulator_matches_closed_forms(capsys):
    t0 = time.perf_counter()
    rows = validation_grid(frames=1_000_000, seed=0)
    elapsed = time.perf_counter() - t0
    worst = max(rows, key=lambda r: r.rel_error)
    post_warmup = int(0.9 * rows[0].frames)
    ok = len(rows) == 24 and worst.rel_error <= 0.02 and elapsed < 60 and post_warmup >= 500_000
    report(capsys, 1, ok, f"{len(rows)} cases, worst {100 * worst.rel_error:.2f}% "
                          f"({worst.policy.name} rho={worst.rho} p={worst.p}), {elapsed:.1f} s")


def test_criterion_02_pinned_values(capsys):
    a = aopi_fcfs(AopiInputs(2, 4, 1, F))
    b = aopi_lcfsp(AopiInputs(2, 4, 0.5, L))
    c = aopi_fcfs(AopiInputs(2, 4, 0.6, F))
    d = aopi_lcfsp(AopiInputs(2, 4, 0.6, L))
    ok = abs(a - 1.41667) <= 1e-5 and b == 2.0 and abs(c - 1.75) <= 1e-9 and abs(d - 1.75) <= 1e-9
    report(capsys, 2, ok, f"A_F(2,4,1)={a:.6f} A_L(2,4,0.5)={b!r} A_F(2,4,0.6)={c!r} A_L(2,4,0.6)={d!r}")


def test_criterion_03_threshold_sign(capsys):
    rng = np.random.default_rng(2024)
    rho = rng.uniform(0, 1, 10_000)
    rho[rho == 0] = 0.5
    p = rng.uniform(0, 1, 10_000)
    p[p == 0] = 0.5
    mu = 4.0
    exceptions = ties = 0
    for r, q in zip(rho, p):
        lam = r * mu
        diff = aopi_fcfs(AopiInputs(lam, mu, q, F)) - aopi_lcfsp(AopiInputs(lam, mu, q, L))
        if abs(diff) < 1e-12:
            ties += 1
            continue
        if np.sign(diff) != np.sign(q - policy_threshold(r).p_star):
            exceptions += 1
    report(capsys, 3, exceptions == 0, f"10000 pairs, {exceptions} exceptions, {ties} ties")


def test_criterion_04_proof_diagnostics(capsys):
    f = diagnostics_check(simulate_single(SimConfig(AopiInputs(2, 4, 1, F), 1_000_000, 0.1, 1)))
    l = diagnostics_check(simulate_single(SimConfig(AopiInputs(2, 4, 1, L), 1_000_000, 0.1, 1)))
    tw, rate, y2 = f["e_t_w_next"], l["effective_rate"], l["e_y2"]
    ok = (abs(tw.expected - 0.08333) < 1e-5 and tw.rel_error < 0.03
          and abs(rate.expected - 1.3333) < 1e-4 and rate.rel_error < 0.01
          and y2.expected == pytest.approx(0.875) and y2.rel_error < 0.03)
    report(capsys, 4, ok, f"E[TW]={tw.empirical:.5f} ({100 * tw.rel_error:.2f}%), "
                          f"lambda_e={rate.empirical:.5f} ({100 * rate.rel_error:.2f}%), "
                          f"E[Y^2]={y2.empirical:.5f} ({100 * y2.rel_error:.2f}%)")


def test_criterion_05_property_suites(capsys):
    rng = np.random.default_rng(7)
    n, tol = 10_000, 1e-9
    mu = rng.uniform(0.5, 20, n)
    p = rng.uniform(0.05, 1, n)

    def bad(lo, hi):
        # counts pairs where hi exceeds lo beyond tolerance
        return int(np.sum(hi - lo > tol * np.maximum(1.0, np.abs(lo))))

    # midpoint convexity of A_F in lambda
    l1, l2 = rng.uniform(0.01, 0.99, n) * mu, rng.uniform(0.01, 0.99, n) * mu
    mid = aopi_array(0.5 * (l1 + l2), mu, p, True)
    avg = 0.5 * (aopi_array(l1, mu, p, True) + aopi_array(l2, mu, p, True))
    convex = bad(avg, mid)
    # A_F decreasing in mu
    lam = rng.uniform(0.01, 0.99, n) * mu
    mu2 = mu * rng.uniform(1, 3, n)
    f_mu = bad(aopi_array(lam, mu, p, True), aopi_array(lam, mu2, p, True))
    # A_L decreasing in lambda, mu and p
    lam = rng.uniform(0.01, 30, n)
    l_lam = bad(aopi_array(lam, mu, p, False), aopi_array(lam * rng.uniform(1, 3, n), mu, p, False))
    l_mu = bad(aopi_array(lam, mu, p, False), aopi_array(lam, mu2, p, False))
    p2 = np.minimum(1.0, p * rng.uniform(1, 3, n))
    l_p = bad(aopi_array(lam, mu, p, False), aopi_array(lam, mu, p2, False))
    counts = dict(convex_F=convex, F_mu=f_mu, L_lam=l_lam, L_mu=l_mu, L_p=l_p)
    report(capsys, 5, not any(counts.values()), f"{n} tuples per suite, violations {counts}")


def test_criterion_06_lyapunov_invariants(capsys, spec, baseline_run, sweep_runs):
    rows = list(baseline_run[0].slots)
    for V, rs in sweep_runs.items():
        if V != spec.V:
            rows += rs
    inv = summarize(rows, spec.p_min, spec.V)["invariants"]
    errors = len(baseline_run[0].errors)
    ok = inv["drift_violations"] == 0 and inv["bcd_trace_increases"] == 0 and errors == 0
    report(capsys, 6, ok, f"{len(rows)} slot rows, drift violations {inv['drift_violations']}, "
                          f"trace increases {inv['bcd_trace_increases']}, slot errors {errors}")


def test_criterion_07_constraint_convergence(capsys, spec, sweep_runs):
    final, reach = {}, {}
    for V, rows in sweep_runs.items():
        per_seed_acc, per_seed_reach = [], []
        for seed in SEEDS:
            acc = [r.mean_accuracy for r in sorted(rows, key=lambda r: r.slot) if r.seed == seed]
            per_seed_acc.append(float(np.mean(acc)))
            t = time_to_reach(acc, THRESHOLD)
            per_seed_reach.append(math.inf if t is None else t)
        final[V] = per_seed_acc
        reach[V] = float(np.mean(per_seed_reach))
    at_default = min(final[spec.V])
    order = [reach[V] for V in V_SWEEP]
    ok = at_default >= THRESHOLD and all(a <= b for a, b in zip(order, order[1:]))
    shown = ", ".join(f"V={V:g}: {reach[V]:.0f}" for V in V_SWEEP)
    report(capsys, 7, ok, f"V=10 running accuracy at T per seed {[round(x, 4) for x in final[spec.V]]}; "
                          f"mean time-to-reach {THRESHOLD} ({shown}; inf means never)")


def test_criterion_08_baseline_ordering(capsys, spec, baseline_run):
    run, elapsed = baseline_run
    s = summarize(run.slots, spec.p_min, spec.V)["strategies"]
    a = {k: v["mean_aopi"] for k, v in s.items()}
    ratio = a["lbcd"] / a["min"]
    ordering = a["min"] <= a["lbcd"] <= min(a["dos"], a["jcab"]) and ratio <= 1.5
    # DOS failure mode: every camera at the lowest resolution with its lightest model
    traces = scenario_traces(spec, 1)
    betas = content_walk(spec, 1)
    dos_low = True
    for t in range(0, SLOTS, 200):
        state = slot_state(spec, betas[t], traces.servers_at(t))
        mask = lightest_models(state)
        d = dos_step(state).decision
        dos_low &= all(c.resolution == spec.resolutions[0] and mask[n, c.model] for n, c in enumerate(d.configs))
    # JCAB failure mode: accuracy drops when the latency budget tightens
    horizon = 200
    tight = run_experiment(spec.with_overrides(jcab_latency_budget=0.2), ("jcab",), seeds=SEEDS, slots=horizon)
    acc_tight = float(np.mean([r.mean_accuracy for r in tight.slots]))
    acc_loose = float(np.mean([r.mean_accuracy for r in run.slots if r.strategy == "jcab" and r.slot < horizon]))
    ok = ordering and dos_low and acc_tight < acc_loose
    shown = " ".join(f"{k}={v:.4f}" for k, v in a.items())
    report(capsys, 8, ok, f"mean AoPI {shown}; LBCD/MIN={ratio:.3f}; DOS lowest/lightest={dos_low}; "
                          f"JCAB accuracy 0.5 s {acc_loose:.4f} -> 0.2 s {acc_tight:.4f}; run {elapsed:.0f} s")


def test_criterion_09_solver_oracles(capsys):
    eps = 0.01
    gaps = []
    rng = np.random.default_rng(11)
    for _ in range(6):
        s, p, mu = rng.uniform(0.3, 3, 2), rng.uniform(0.3, 1, 2), rng.uniform(2, 10, 2)
        pols = [Policy(int(x)) for x in rng.integers(0, 2, 2)]
        budget = float(rng.uniform(2, 12))
        got = allocate_bandwidth(s, p, mu, pols, budget, eps).amounts
        val = float(np.sum(aopi_array(got * s, mu, p, np.array(pols) == F)))
        gaps.append(val / brute_bandwidth(s, p, mu, pols, budget) - 1)
        t, lam = rng.uniform(0.5, 2, 2), rng.uniform(0.5, 3, 2)
        need = float(np.sum(np.where(np.array(pols) == F, lam / ((1 - eps) * t), 0)))
        budget = need + float(rng.uniform(2, 12))
        got = allocate_compute(t, p, lam, pols, budget, eps).amounts
        val = float(np.sum(aopi_array(lam, got * t, p, np.array(pols) == F)))
        gaps.append(val / brute_compute(t, p, lam, pols, budget) - 1)
    worst_block = max(abs(g) for g in gaps)
    joint = []
    for acc in (0.0, 0.5, 2.0):
        st = make_state(n_cameras=2, beta=[2.5, 3.5], servers=((2e6, 1e12),), resolutions=(384, 640))
        w = Weights(1.0, acc)
        res = bcd_solve(st, [0, 0], w, LbcdParams(max_bcd_iters=50, bcd_rel_tol=1e-9))
        got = float(np.sum(w.age * decision_aopi(res.decision) - w.acc * res.decision.p))
        ref = joint_brute(st, w, n_grid=60)
        joint.append(abs(got - ref) / abs(ref))
    ok = worst_block <= 0.005 and max(joint) <= 0.01
    report(capsys, 9, ok, f"block solvers worst gap {100 * worst_block:.4f}% over 12 instances; "
                          f"BCD vs joint brute force worst {100 * max(joint):.3f}%")


def test_criterion_10_determinism(capsys, tmp_path):
    spec_path = tmp_path / "scenario.toml"
    spec_path.write_text(TEMPLATE)
    outs = [tmp_path / "a", tmp_path / "b"]
    codes = [cli_main(["run", "--spec", str(spec_path), "--out", str(o), "--slots", "30", "--seeds", "2",
                       "--no-decisions"]) for o in outs]
    same = (outs[0] / "slots.csv").read_bytes() == (outs[1] / "slots.csv").read_bytes()
    report(capsys, 10, codes == [0, 0] and same, f"two CLI runs, slots.csv byte-identical={same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
