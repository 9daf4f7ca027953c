"""Camera-to-server assignment by first-fit decreasing on two resources."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..model import ScenarioState
from .bcd import BcdResult, LbcdParams, Weights, bcd_solve, pooled


@dataclass
class Selection:
    assignment: np.ndarray
    demand_bandwidth: np.ndarray
    demand_compute: np.ndarray
    overflow: np.ndarray
    ideal: BcdResult | None


def first_fit(demand_b, demand_c, cap_b, cap_c) -> tuple[np.ndarray, np.ndarray]:
    """Pack cameras into servers; returns (assignment, overflow flags).

    Cameras are taken in decreasing normalised size and servers in decreasing
    normalised volume (ties by lowest index). A camera goes to the first
    server whose remaining bandwidth and compute both cover its demand;
    otherwise to the server with the largest normalised remainder.
    """
    demand_b = np.asarray(demand_b, float)
    demand_c = np.asarray(demand_c, float)
    cap_b = np.asarray(cap_b, float)
    cap_c = np.asarray(cap_c, float)
    if cap_b.size == 0:
        raise ParameterError("need at least one server")
    tot_b = cap_b.sum() or 1.0
    tot_c = cap_c.sum() or 1.0
    size = demand_b / tot_b + demand_c / tot_c
    volume = cap_b / tot_b + cap_c / tot_c
    cams = np.lexsort((np.arange(size.size), -size))
    servers = np.lexsort((np.arange(volume.size), -volume))
    rem_b, rem_c = cap_b.copy(), cap_c.copy()
    out = np.zeros(size.size, dtype=np.int64)
    overflow = np.zeros(size.size, dtype=bool)
    for n in cams:
        for s in servers:
            if demand_b[n] <= rem_b[s] and demand_c[n] <= rem_c[s]:
                break
        else:
            left = rem_b / tot_b + rem_c / tot_c
            s = int(np.argmax(left))
            overflow[n] = True
        out[n] = s
        rem_b[s] -= demand_b[n]
        rem_c[s] -= demand_c[n]
    return out, overflow


def select_servers(state: ScenarioState, weights: Weights, params: LbcdParams = LbcdParams(),
                   **bcd_kwargs) -> Selection:
    """Size cameras on the pooled server, then pack them onto the real ones."""
    if state.n_servers < 1:
        raise ParameterError("need at least one server")
    n = state.n_cameras
    if state.n_servers == 1 or n == 0:
        zeros = np.zeros(n)
        return Selection(np.zeros(n, dtype=np.int64), zeros, zeros, np.zeros(n, dtype=bool), None)
    ideal = bcd_solve(pooled(state), np.zeros(n, dtype=np.int64), weights, params, **bcd_kwargs)
    d = ideal.decision
    assignment, overflow = first_fit(d.bandwidth, d.compute,
                                     [s.bandwidth for s in state.servers],
                                     [s.compute for s in state.servers])
    return Selection(assignment, d.bandwidth, d.compute, overflow, ideal)
