import math

import numpy as np
import pytest

from aopi_edge.errors import CatalogError, ParameterError, StructuralError
from aopi_edge.model import (
    AccuracyProfile,
    ComplexityProfile,
    EdgeServerCapacity,
    Policy,
    VideoConfig,
    accuracy,
    check_feasible,
    computation_rate,
    make_decision,
    transmission_rate,
)

from conftest import LINK, make_state


def test_spectral_efficiency_and_rate():
    assert LINK.spectral_efficiency == pytest.approx(2.0)
    # 1 MHz * 2 bit/s/Hz over 3 * 640^2 bits per frame
    assert transmission_rate(1e6, LINK, 640) == pytest.approx(2e6 / (3 * 640 ** 2))


def test_rate_is_linear_in_bandwidth_and_inverse_square_in_resolution():
    assert transmission_rate(2e6, LINK, 640) == pytest.approx(2 * transmission_rate(1e6, LINK, 640))
    assert transmission_rate(1e6, LINK, 320) == pytest.approx(4 * transmission_rate(1e6, LINK, 640))


def test_negative_bandwidth_rejected():
    with pytest.raises(ParameterError):
        transmission_rate(-1.0, LINK, 640)


def test_computation_rate():
    prof = ComplexityProfile((1e12, 2e12), 640)
    cfg = VideoConfig(1280, Policy.LCFSP, 1)
    assert prof.xi(1280, 1) == pytest.approx(8e12)
    assert computation_rate(16e12, cfg, prof) == pytest.approx(2.0)


def test_accuracy_curve():
    prof = AccuracyProfile((0.9,), 3.0, 640)
    assert accuracy(VideoConfig(640, "LCFSP", 0), prof) == pytest.approx(0.9 * (1 - math.exp(-3)))
    lo, hi = prof.zeta(384, 0), prof.zeta(1024, 0)
    assert 0 < lo < hi < 0.9


def test_unknown_model_is_catalog_error():
    with pytest.raises(CatalogError):
        ComplexityProfile((1e12,), 640).xi(640, 3)


def test_table_must_be_monotone():
    with pytest.raises(ParameterError):
        ComplexityProfile((1e12,), 640, {(384, 0): 2.0, (640, 0): 1.0})


def test_profile_tables_override_formula():
    prof = AccuracyProfile((0.9,), 3.0, 640, {(384, 0): 0.5, (640, 0): 0.6})
    assert prof.zeta(640, 0) == 0.6


def test_policy_parse():
    assert Policy.parse("fcfs") is Policy.FCFS
    assert Policy.parse(1) is Policy.LCFSP
    with pytest.raises(ParameterError):
        Policy.parse("fifo")


def test_grids_match_scalar_mappings():
    st = make_state(beta=[2.0, 4.0])
    g = st.grids
    prof = st.accuracy_profile(1)
    assert g.p[1, 0, 1] == pytest.approx(prof.zeta(384, 1))
    assert g.xi[1, 0] == pytest.approx(st.complexity.xi(640, 0))
    assert g.lam_per_hz[0, 1] == pytest.approx(transmission_rate(1.0, LINK, 640))


def _decision(state, assignment, configs, b, c):
    return make_decision(state, assignment, configs, b, c)


def test_check_feasible_accepts_valid_split():
    st = make_state()
    cfg = [VideoConfig(384, Policy.LCFSP, 0)] * 2
    d = _decision(st, [0, 0], cfg, [15e6, 15e6], [25e12, 25e12])
    assert check_feasible(d, st.servers) == []


def test_check_feasible_reports_each_kind():
    st = make_state()
    cfg = [VideoConfig(384, Policy.FCFS, 1), VideoConfig(384, Policy.LCFSP, 0)]
    # camera 0: lambda huge, mu tiny -> FCFS unstable; budgets overrun
    d = _decision(st, [0, 0], cfg, [40e6, 1e6], [1e9, 60e12])
    kinds = sorted(v.kind for v in check_feasible(d, st.servers))
    assert kinds == ["bandwidth", "compute", "stability"]


def test_check_feasible_bad_server_and_negative():
    st = make_state()
    cfg = [VideoConfig(384, Policy.LCFSP, 0)] * 2
    d = _decision(st, [0, 3], cfg, [-1.0, 1e6], [1e12, 1e12])
    kinds = sorted(v.kind for v in check_feasible(d, st.servers))
    assert kinds == ["assignment", "bandwidth"]


def test_check_feasible_structural_error():
    st = make_state()
    d = _decision(st, [0, 0], [VideoConfig(384, Policy.LCFSP, 0)] * 2, [1e6, 1e6], [1e12, 1e12])
    d.bandwidth = np.array([1e6])
    with pytest.raises(StructuralError):
        check_feasible(d, st.servers)


def test_unknown_resolution_in_decision():
    st = make_state()
    with pytest.raises(CatalogError):
        _decision(st, [0, 0], [VideoConfig(500, Policy.LCFSP, 0)] * 2, [1, 1], [1, 1])


def test_scenario_state_validation():
    with pytest.raises(CatalogError):
        make_state(resolutions=())
    with pytest.raises(ParameterError):
        EdgeServerCapacity(-1, 1)


def test_subset_reuses_grids():
    st = make_state(n_cameras=3, beta=[2.0, 3.0, 4.0])
    sub = st.subset([2, 0], EdgeServerCapacity(1e6, 1e12))
    assert np.allclose(sub.grids.p[0], st.grids.p[2])
    assert sub.n_servers == 1
