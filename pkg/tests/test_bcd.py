import itertools

import numpy as np
import pytest

from aopi_edge.analytics import aopi_array, optimal_lambda_fcfs
from aopi_edge.model import Policy, VideoConfig, check_feasible, make_decision
from aopi_edge.optimizer import (
    LbcdParams,
    Weights,
    allocate_bandwidth,
    bcd_solve,
    decision_aopi,
    initial_configs,
    optimize_configs,
)

from conftest import make_state

F, L = Policy.FCFS, Policy.LCFSP
EPS = 0.01
TIGHT = ((2e6, 1e12),)


def objective(d, w):
    return float(np.sum(w.age * decision_aopi(d) - w.acc * d.p))


def test_initial_configs():
    st = make_state()
    cfg = initial_configs(st)
    assert all(c == VideoConfig(384, L, 0) for c in cfg)


@pytest.mark.parametrize("seed", range(5))
def test_trace_is_non_increasing(seed):
    rng = np.random.default_rng(seed)
    st = make_state(n_cameras=6, beta=list(rng.uniform(2, 4, 6)), servers=((5e6, 3e12), (3e6, 2e12)),
                    resolutions=(384, 512, 640, 768))
    w = Weights(rng.uniform(0.1, 2), rng.uniform(0, 3))
    res = bcd_solve(st, rng.integers(0, 2, 6), w, LbcdParams(max_bcd_iters=20))
    assert np.all(np.diff(res.trace) <= 1e-12 * np.abs(res.trace[:-1]))
    assert check_feasible(res.decision, st.servers) == []
    assert objective(res.decision, w) == pytest.approx(res.trace[-1], rel=1e-9)


def exhaustive_single(st, w):
    """Every config of a lone camera, each given the whole server."""
    cap = st.servers[0]
    g = st.grids
    best = (np.inf, None)
    for ri, r in enumerate(st.resolutions):
        for m in range(len(st.models)):
            for pol in (F, L):
                mu = cap.compute / g.xi[ri, m]
                p = g.p[0, ri, m]
                b = allocate_bandwidth([g.lam_per_hz[0, ri]], [p], [mu], [pol], cap.bandwidth, EPS).amounts[0]
                a = aopi_array(b * g.lam_per_hz[0, ri], mu, p, pol == F)
                val = w.age * a - w.acc * p
                if val < best[0]:
                    best = (val, VideoConfig(r, pol, m))
    return best


@pytest.mark.parametrize("acc_weight", [0.0, 0.3, 1.0, 5.0])
def test_single_camera_matches_exhaustive(acc_weight):
    st = make_state(n_cameras=1, servers=TIGHT, resolutions=(384, 512, 640, 768))
    w = Weights(1.0, acc_weight)
    res = bcd_solve(st, [0], w)
    val, cfg = exhaustive_single(st, w)
    assert res.iterations <= 2
    assert res.decision.configs[0] == cfg
    assert objective(res.decision, w) == pytest.approx(val, rel=1e-6)


def joint_brute(st, w, n_grid=200):
    """All config pairs; bandwidth and compute gridded jointly on their budget lines."""
    cap = st.servers[0]
    g = st.grids
    frac = np.linspace(0, 1, n_grid + 2)[1:-1]
    B1, C1 = np.meshgrid(frac * cap.bandwidth, frac * cap.compute, indexing="ij")
    best = np.inf
    choices = [(ri, m, pol) for ri in range(len(st.resolutions)) for m in range(len(st.models)) for pol in (F, L)]
    for pair in itertools.product(choices, repeat=2):
        total = 0.0
        for n, (ri, m, pol) in enumerate(pair):
            b = B1 if n == 0 else cap.bandwidth - B1
            c = C1 if n == 0 else cap.compute - C1
            mu = c / g.xi[ri, m]
            p = g.p[n, ri, m]
            lam = b * g.lam_per_hz[n, ri]
            if pol == F:
                opt = mu * optimal_lambda_fcfs(1.0, p)  # the optimum scales with mu
                lam = np.minimum(lam, np.minimum(opt, (1 - EPS) * mu))
            total = total + w.age * aopi_array(lam, mu, p, pol == F) - w.acc * p
        best = min(best, float(np.min(total)))
    return best


@pytest.mark.parametrize("acc_weight", [0.0, 0.5, 2.0])
def test_two_cameras_match_joint_brute_force(acc_weight):
    st = make_state(n_cameras=2, beta=[2.5, 3.5], servers=TIGHT, resolutions=(384, 640))
    w = Weights(1.0, acc_weight)
    res = bcd_solve(st, [0, 0], w, LbcdParams(max_bcd_iters=50, bcd_rel_tol=1e-9))
    got = objective(res.decision, w)
    ref = joint_brute(st, w, n_grid=60)
    assert abs(got - ref) <= 0.01 * abs(ref)


def test_policy_restriction_and_allowed_mask():
    st = make_state(n_cameras=3, servers=TIGHT)
    allowed = np.array([[True, False]] * 3)
    res = bcd_solve(st, [0, 0, 0], Weights(1, 2), policies=(L,), allowed=allowed)
    assert all(c.policy is L and c.model == 0 for c in res.decision.configs)


def test_optimize_configs_is_per_camera_argmin():
    st = make_state(n_cameras=2, servers=TIGHT)
    g = st.grids
    d = make_decision(st, [0, 0], initial_configs(st), [1e6, 1e6], [0.5e12, 0.5e12])
    w = Weights(1.0, 0.7)
    cfg = optimize_configs(st, d, w)
    for n in range(2):
        best, arg = np.inf, None
        for ri in range(2):
            for pol in (F, L):
                for m in range(2):
                    lam = d.bandwidth[n] * g.lam_per_hz[n, ri]
                    mu = d.compute[n] / g.xi[ri, m]
                    if pol == F and lam > (1 - EPS) * mu:
                        continue
                    val = w.age * float(aopi_array(lam, mu, g.p[n, ri, m], pol == F)) - w.acc * g.p[n, ri, m]
                    if val < best:
                        best, arg = val, VideoConfig(st.resolutions[ri], pol, m)
        assert cfg[n] == arg


def test_larger_V_keeps_argmin_when_queue_empty():
    st = make_state(n_cameras=3, beta=[2.5, 3.0, 3.5], servers=TIGHT)
    decisions = [bcd_solve(st, [0, 0, 0], Weights.drift_penalty(0.0, V, 3)).decision for V in (1, 10, 100)]
    for d in decisions[1:]:
        assert d.configs == decisions[0].configs
        assert np.allclose(d.bandwidth, decisions[0].bandwidth, rtol=1e-6)


def test_deterministic():
    st = make_state(n_cameras=4, servers=((5e6, 3e12), (3e6, 2e12)))
    a = bcd_solve(st, [0, 1, 0, 1], Weights(1, 1))
    b = bcd_solve(st, [0, 1, 0, 1], Weights(1, 1))
    assert a.decision.configs == b.decision.configs
    assert np.array_equal(a.decision.bandwidth, b.decision.bandwidth)
    assert np.array_equal(a.trace, b.trace)
