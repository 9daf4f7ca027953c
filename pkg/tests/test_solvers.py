import numpy as np
import pytest

from aopi_edge.analytics import aopi_array, optimal_lambda_fcfs
from aopi_edge.errors import InfeasibleError
from aopi_edge.model import Policy, VideoConfig, make_decision
from aopi_edge.optimizer import allocate_bandwidth, allocate_compute, optimize_bandwidth, optimize_compute

from conftest import make_state

F, L = Policy.FCFS, Policy.LCFSP
EPS = 0.01
GRID = 10_000


def total_aopi(lam, mu, p, pols):
    return float(np.sum(aopi_array(lam, mu, p, np.asarray(pols) == F)))


def brute_bandwidth(s, p, mu, pols, budget):
    """Budget line b1 + b2 = B; cameras may leave bandwidth unused past their own optimum."""
    s, p, mu = map(np.asarray, (s, p, mu))
    cap = np.array([min(optimal_lambda_fcfs(m, q), (1 - EPS) * m) / r if pol == F else np.inf
                    for r, q, m, pol in zip(s, p, mu, pols)])
    b1 = np.linspace(0, budget, GRID + 2)[1:-1]
    b = np.stack([b1, budget - b1], axis=1)
    b = np.minimum(b, cap)
    vals = aopi_array(b * s, mu, p, np.asarray(pols) == F).sum(axis=1)
    return float(vals.min())


def brute_compute(t, p, lam, pols, budget):
    t, p, lam = map(np.asarray, (t, p, lam))
    floor = np.where(np.asarray(pols) == F, lam / ((1 - EPS) * t), 0.0)
    c1 = np.linspace(floor[0], budget - floor[1], GRID + 2)[1:-1]
    c = np.stack([c1, budget - c1], axis=1)
    vals = aopi_array(lam, c * t, p, np.asarray(pols) == F).sum(axis=1)
    return float(vals.min())


CASES = [
    ((1.0, 0.5), (0.6, 0.9), (4.0, 8.0), (L, L), 10.0),
    ((1.0, 2.0), (0.5, 0.8), (6.0, 3.0), (F, L), 8.0),
    ((1.0, 1.0), (0.3, 0.95), (5.0, 5.0), (F, F), 6.0),
    ((0.2, 3.0), (1.0, 0.4), (2.0, 9.0), (F, F), 40.0),  # loose: FCFS optima leave budget unused
]


@pytest.mark.parametrize("s,p,mu,pols,budget", CASES)
def test_bandwidth_matches_grid(s, p, mu, pols, budget):
    alloc = allocate_bandwidth(s, p, mu, pols, budget, EPS)
    got = total_aopi(alloc.amounts * np.asarray(s), mu, p, pols)
    ref = brute_bandwidth(s, p, mu, pols, budget)
    assert abs(got - ref) / ref <= 0.005
    assert got <= ref * (1 + 1e-9)
    assert alloc.residual <= 1e-6
    assert alloc.amounts.sum() <= budget * (1 + 1e-12)


@pytest.mark.parametrize("t,p,lam,pols,budget", [
    ((1.0, 0.5), (0.6, 0.9), (4.0, 2.0), (L, L), 12.0),
    ((1.0, 2.0), (0.5, 0.8), (3.0, 3.0), (F, L), 8.0),
    ((1.0, 1.0), (0.3, 0.95), (2.0, 1.0), (F, F), 6.0),
])
def test_compute_matches_grid(t, p, lam, pols, budget):
    alloc = allocate_compute(t, p, lam, pols, budget, EPS)
    got = total_aopi(lam, alloc.amounts * np.asarray(t), p, pols)
    ref = brute_compute(t, p, lam, pols, budget)
    assert abs(got - ref) / ref <= 0.005
    assert alloc.residual <= 1e-6
    assert alloc.amounts.sum() == pytest.approx(budget, rel=1e-9)


def test_symmetric_cameras_split_evenly():
    for pols in ((L, L, L), (F, F, F)):
        a = allocate_bandwidth([1.0] * 3, [0.7] * 3, [2.0] * 3, pols, 3.0, EPS)
        assert np.allclose(a.amounts, 1.0, rtol=1e-9)
        c = allocate_compute([1.0] * 3, [0.7] * 3, [1.0] * 3, pols, 9.0, EPS)
        assert np.allclose(c.amounts, 3.0, rtol=1e-9)


def test_single_camera():
    a = allocate_bandwidth([2.0], [0.8], [5.0], [L], 7.0, EPS)
    assert a.amounts[0] == pytest.approx(7.0)
    # FCFS stops at its own optimum when the budget is loose
    a = allocate_bandwidth([1.0], [0.8], [5.0], [F], 100.0, EPS)
    assert a.amounts[0] == pytest.approx(optimal_lambda_fcfs(5.0, 0.8), rel=1e-6)
    c = allocate_compute([1.0], [0.8], [2.0], [F], 3.0, EPS)
    assert c.amounts[0] == pytest.approx(3.0)


def test_fcfs_bandwidth_cap_respected():
    a = allocate_bandwidth([1.0, 1.0], [1.0, 1.0], [1.0, 10.0], [F, L], 50.0, EPS)
    assert a.amounts[0] <= (1 - EPS) * 1.0 + 1e-12


def test_infeasible_compute_floor():
    with pytest.raises(InfeasibleError):
        allocate_compute([1.0, 1.0], [0.5, 0.5], [5.0, 5.0], [F, F], 6.0, EPS)


def test_zero_bandwidth_infeasible():
    with pytest.raises(InfeasibleError):
        allocate_bandwidth([1.0], [0.5], [5.0], [L], 0.0, EPS)


def _state_decision(pols):
    st = make_state(beta=[2.5, 3.5], servers=((8e6, 10e12),))
    cfg = [VideoConfig(384, pols[0], 0), VideoConfig(640, pols[1], 1)]
    d = make_decision(st, [0, 0], cfg, [4e6, 4e6], [5e12, 5e12])
    return st, d


@pytest.mark.parametrize("pols", [(L, L), (L, F), (F, L)])
def test_block_optimizers_match_grid(pols):
    st, d = _state_decision(pols)
    g = st.grids
    s = np.array([g.lam_per_hz[0, 0], g.lam_per_hz[1, 1]])
    t = np.array([1 / g.xi[0, 0], 1 / g.xi[1, 1]])
    b = optimize_bandwidth(st, d, EPS)
    got = total_aopi(b * s, d.mu, d.p, pols)
    ref = brute_bandwidth(s, d.p, d.mu, pols, 8e6)
    assert abs(got - ref) / ref <= 0.005
    d2 = make_decision(st, d.assignment, d.configs, b, d.compute)
    c = optimize_compute(st, d2, EPS)
    got = total_aopi(d2.lam, c * t, d.p, pols)
    ref = brute_compute(t, d.p, d2.lam, pols, 10e12)
    assert abs(got - ref) / ref <= 0.005
