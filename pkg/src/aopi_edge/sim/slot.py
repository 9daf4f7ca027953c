"""Per-slot simulation of every camera under a fixed decision."""
from __future__ import annotations

import math
from typing import Sequence

from ..errors import AopiError, CameraError
from ..model import AopiInputs, ScenarioState, SlotDecision
from .core import MIN_HORIZON, SimConfig, SimResult, simulate_single


def simulate_slot(decision: SlotDecision, scenario: ScenarioState, seed: int,
                  horizon_frames: int | None = None, slot_length: float | None = None,
                  camera_seeds: Sequence[int] | None = None,
                  warmup_fraction: float = 0.1, key: Sequence[int] = ()) -> list[SimResult]:
    """Simulate each camera independently with its (lambda, mu, p, policy).

    Horizon per camera: ``horizon_frames`` if given, otherwise the number of
    frames a camera transmits during ``slot_length`` seconds (at least 1000).
    Camera ``n`` draws from streams keyed ``key + (n,)`` under ``seed``
    unless explicit ``camera_seeds`` are supplied, in which case the key is
    just ``key``.
    """
    if decision.n_cameras != scenario.n_cameras:
        raise ValueError("decision and scenario disagree on camera count")
    out = []
    for n, cfg in enumerate(decision.configs):
        lam, mu, p = float(decision.lam[n]), float(decision.mu[n]), float(decision.p[n])
        if horizon_frames is not None:
            frames = horizon_frames
        elif slot_length is not None:
            frames = max(MIN_HORIZON, int(math.ceil(lam * slot_length)))
        else:
            frames = 100_000
        if camera_seeds is not None:
            s, skey = int(camera_seeds[n]), tuple(key)
        else:
            s, skey = int(seed), tuple(key) + (n,)
        try:
            inputs = AopiInputs(lam, mu, p, cfg.policy)
            out.append(simulate_single(SimConfig(inputs, frames, warmup_fraction, s, skey)))
        except AopiError as exc:
            raise CameraError(n, exc) from exc
    return out
