"""Heap-driven event loop over pre-drawn transmission/service/accuracy samples."""
from __future__ import annotations

import heapq
from collections import deque

import numpy as np

from ..model import Policy
from .core import SamplePath

_ARRIVE, _DEPART = 0, 1


def run_events(policy, t: np.ndarray, o: np.ndarray, acc: np.ndarray) -> SamplePath:
    """Process arrivals and departures in time order until the last arrival."""
    policy = Policy.parse(policy)
    n = len(t)
    gen = np.empty(n)
    arrive = np.empty(n)
    start = np.full(n, np.nan)
    complete = np.full(n, np.nan)
    preempted = np.zeros(n, dtype=bool)

    events: list[tuple[float, int, int, int]] = []
    seq = 0

    def push(time, kind, frame):
        nonlocal seq
        heapq.heappush(events, (time, seq, kind, frame))
        seq += 1

    gen[0] = 0.0
    push(t[0], _ARRIVE, 0)
    queue: deque[int] = deque()
    in_service = -1
    horizon = np.inf

    while events:
        now, _, kind, i = heapq.heappop(events)
        if now > horizon:
            break
        if kind == _ARRIVE:
            arrive[i] = now
            if i + 1 < n:
                gen[i + 1] = now
                push(now + t[i + 1], _ARRIVE, i + 1)
            else:
                horizon = now
            if in_service < 0:
                in_service = i
                start[i] = now
                push(now + o[i], _DEPART, i)
            elif policy is Policy.LCFSP:
                preempted[in_service] = True
                in_service = i
                start[i] = now
                push(now + o[i], _DEPART, i)
            else:
                queue.append(i)
        else:
            if i != in_service or preempted[i]:
                continue  # stale departure of a preempted frame
            complete[i] = now
            if queue:
                j = queue.popleft()
                in_service = j
                start[j] = now
                push(now + o[j], _DEPART, j)
            else:
                in_service = -1

    if policy is Policy.FCFS:
        # frames still waiting at the horizon: report their eventual start for wait statistics
        last = np.nanmax(complete) if np.any(~np.isnan(complete)) else 0.0
        pending = [in_service] if in_service >= 0 else []
        pending += list(queue)
        clock = last
        for j in pending:
            if np.isnan(start[j]):
                start[j] = max(clock, arrive[j])
            clock = start[j] + o[j]
    else:
        start = arrive.copy()
    return SamplePath(policy, t, o, gen, arrive, start, complete, acc, preempted, float(horizon))
