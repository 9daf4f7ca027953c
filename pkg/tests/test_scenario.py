import numpy as np
import pytest

from aopi_edge.errors import SpecError
from aopi_edge.scenario import (
    TEMPLATE,
    TraceParams,
    content_walk,
    gen_traces,
    load_scenario,
    load_trace,
    parse_scenario,
    scenario_traces,
    slot_state,
    write_trace,
)

MINIMAL = """
schema_version = 1
[catalog]
resolutions = [320, 640]
[[catalog.models]]
flops_at_ref = 1e12
accuracy_ceiling = 0.9
"""


def test_template_defaults():
    spec = parse_scenario(TEMPLATE)
    assert spec.n_cameras == 30 and spec.n_servers == 3
    assert spec.p_min == 0.7 and spec.V == 10
    assert spec.refine_rounds == 2 and spec.jcab_latency_budget == 0.5
    tasks = [c.task for c in spec.cameras]
    assert tasks[:10] == ["detection"] * 10 and tasks[-1] == "instance"
    for c in spec.cameras:
        assert all(spec.models[m].task == c.task for m in c.models)


def test_minimal_spec():
    spec = parse_scenario(MINIMAL)
    assert spec.n_cameras == 1 and spec.n_servers == 1
    assert spec.resolutions == (320, 640) and spec.ref_resolution == 640
    assert spec.strategies == ("lbcd", "dos", "jcab", "min")
    assert spec.traces == TraceParams()


@pytest.mark.parametrize("patch,field,line", [
    ("p_min = 1.5\n", "p_min", 2),
    ("V = -1.0\n", "V", 2),
    ("slots = 'many'\n", "slots", 2),
    ("bogus = 1\n", "bogus", 2),
])
def test_errors_name_field_and_line(patch, field, line):
    text = "schema_version = 1\n" + patch + MINIMAL.split("schema_version = 1\n", 1)[1]
    with pytest.raises(SpecError) as info:
        parse_scenario(text)
    assert info.value.field == field
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_nested_errors():
    with pytest.raises(SpecError) as info:
        parse_scenario(MINIMAL + "[solver]\nrefine_rounds = -1\n")
    assert info.value.field == "solver.refine_rounds" and info.value.line == 9
    with pytest.raises(SpecError) as info:
        parse_scenario(MINIMAL.replace("0.9", "1.9"))
    assert info.value.field == "catalog.models[0].accuracy_ceiling"
    with pytest.raises(SpecError):
        parse_scenario("schema_version = 2\n")
    with pytest.raises(SpecError) as info:
        parse_scenario("schema_version = 1\nV = = 2\n")
    assert info.value.line == 2


def test_explicit_camera_list(tmp_path):
    text = MINIMAL + """
[[catalog.models]]
name = "big"
flops_at_ref = 2e12
accuracy_ceiling = 0.95
[cameras]
list = [{models = ["big"], beta = 2.5}, {models = [0], tx_power = 0.2}]
"""
    spec = parse_scenario(text)
    assert [c.models for c in spec.cameras] == [(1,), (0,)]
    assert spec.cameras[0].beta == 2.5 and spec.cameras[1].link.tx_power == 0.2
    with pytest.raises(SpecError) as info:
        parse_scenario(text.replace('"big"]', '"huge"]'))
    assert info.value.field == "cameras.list[0].models"


def test_trace_roundtrip_and_negative_value(tmp_path):
    tr = gen_traces(TraceParams(10e6, 1e12, 0.3, 0.3), 5, 2, seed=3)
    path = tmp_path / "cap.csv"
    write_trace(tr, path)
    back = load_trace(path)
    assert np.array_equal(back.bandwidth, tr.bandwidth) and np.array_equal(back.compute, tr.compute)
    lines = path.read_text().splitlines()
    lines[4] = "1,1,-5.0,1e12"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SpecError) as info:
        load_trace(path)
    assert "slot 1, server 1" in str(info.value) and info.value.line == 5


def test_trace_missing_row(tmp_path):
    path = tmp_path / "cap.csv"
    path.write_text("slot,server,bandwidth_hz,compute_flops\n0,0,1,1\n1,1,1,1\n")
    with pytest.raises(SpecError, match="slot 0, server 1"):
        load_trace(path)


def test_spec_trace_file_resolved_relative(tmp_path):
    write_trace(gen_traces(TraceParams(), 3, 1, seed=1), tmp_path / "cap.csv")
    (tmp_path / "s.toml").write_text(MINIMAL + '[servers]\ntrace = "cap.csv"\n')
    spec = load_scenario(tmp_path / "s.toml")
    assert spec.trace_file == tmp_path / "cap.csv"
    assert scenario_traces(spec.with_overrides(slots=3), 1).n_slots == 3
    with pytest.raises(SpecError):
        scenario_traces(spec.with_overrides(slots=10), 1)


def test_gen_traces_zero_cv_is_constant():
    tr = gen_traces(TraceParams(10e6, 2e12, 0.0, 0.0), 50, 3, seed=1)
    assert np.all(tr.bandwidth == 10e6) and np.all(tr.compute == 2e12)


def test_gen_traces_mean_and_reproducibility():
    p = TraceParams(30e6, 50e12, 0.2, 0.2)
    tr = gen_traces(p, 10_000, 2, seed=7)
    assert tr.bandwidth.mean() == pytest.approx(30e6, rel=0.02)
    assert tr.compute.mean() == pytest.approx(50e12, rel=0.02)
    assert np.all(tr.bandwidth >= 0.05 * 30e6)
    again = gen_traces(p, 10_000, 2, seed=7)
    assert np.array_equal(tr.bandwidth, again.bandwidth)
    assert not np.array_equal(tr.bandwidth, gen_traces(p, 10_000, 2, seed=8).bandwidth)


def test_content_walk_bounded_and_reproducible():
    spec = parse_scenario(TEMPLATE).with_overrides(slots=500)
    b = content_walk(spec, 1)
    assert b.shape == (500, 30)
    assert b.min() >= 2.7 - 1e-12 and b.max() <= 3.3 + 1e-12
    assert np.array_equal(b, content_walk(spec, 1))
    assert b.std() > 0


def test_slot_state_carries_betas():
    spec = parse_scenario(TEMPLATE)
    betas = content_walk(spec, 1)[0]
    st = slot_state(spec, betas, scenario_traces(spec, 1).servers_at(0))
    assert [c.beta for c in st.cameras] == list(betas)
    assert st.n_servers == 3
