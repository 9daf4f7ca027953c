from __future__ import annotations

import pytest

from aopi_edge.model import Camera, EdgeServerCapacity, LinkParams, ModelSpec, ScenarioState

LINK = LinkParams(0.1, 3e-9, 1e-10, 3.0)  # 2 bit/s/Hz


def make_state(n_cameras=2, servers=((30e6, 50e12),), resolutions=(384, 640),
               models=(("small", 0.2e12, 0.6), ("large", 1.0e12, 0.9)), beta=3.0,
               ref_resolution=640) -> ScenarioState:
    specs = tuple(ModelSpec(n, k, a) for n, k, a in models)
    betas = beta if isinstance(beta, (list, tuple)) else [beta] * n_cameras
    cams = [Camera(LINK, tuple(range(len(specs))), float(b)) for b in betas]
    return ScenarioState(tuple(resolutions), specs, ref_resolution, cams,
                         [EdgeServerCapacity(b, c) for b, c in servers])


@pytest.fixture
def toy_state():
    return make_state()
