"""Per-frame records, their delimited-text export, and area bookkeeping."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ..model import Policy
from .core import SamplePath, accurate_deliveries, integrate_age

FRAME_LOG_COLUMNS = ("index", "gen_time", "arrive_time", "complete_time", "accurate", "policy")


@dataclass(frozen=True)
class FrameRecord:
    index: int
    gen_time: float
    arrive_time: float
    complete_time: float | None
    accurate: bool


def write_frame_log(path: SamplePath, out) -> int:
    """Write one row per frame; unfinished frames get ``NA`` as completion time."""
    out = Path(out)
    rows = 0
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRAME_LOG_COLUMNS)
        for rec in path.records():
            w.writerow([rec.index, repr(rec.gen_time), repr(rec.arrive_time),
                        "NA" if rec.complete_time is None else repr(rec.complete_time),
                        int(rec.accurate), path.policy.name])
            rows += 1
    return rows


def read_frame_log(src) -> tuple[Policy | None, list[FrameRecord]]:
    records = []
    policy = None
    with Path(src).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != FRAME_LOG_COLUMNS:
            raise ValueError(f"unexpected frame log header {reader.fieldnames}")
        for row in reader:
            policy = Policy.parse(row["policy"])
            c = row["complete_time"]
            records.append(FrameRecord(int(row["index"]), float(row["gen_time"]),
                                       float(row["arrive_time"]), None if c == "NA" else float(c),
                                       bool(int(row["accurate"]))))
    return policy, records


def _completed_in_order(path: SamplePath):
    idx = np.flatnonzero(path.completed)
    idx = idx[np.argsort(path.complete[idx], kind="stable")]
    return idx


def direct_area(path: SamplePath, first: int, last: int) -> float:
    """AoPI integral between the completions of frames ``first`` and ``last``."""
    times, gens = accurate_deliveries(path)
    return integrate_age(times, gens, float(path.complete[first]), float(path.complete[last]))


def segment_area_fcfs(path: SamplePath, first: int, last: int) -> float:
    """Same integral assembled from the FCFS trapezoid/rectangle segments.

    ``first`` must be an accurately recognised frame. Uses T_i (transmission),
    Z_i (time at server) and D_i (inter-departure) of the frame sequence.
    """
    if path.policy is not Policy.FCFS:
        raise ValueError("FCFS decomposition needs an FCFS path")
    if not path.accurate[first]:
        raise ValueError("window must start at an accurate completion")
    t = path.transmission
    z = path.complete - path.arrive
    total = 0.0
    misses = 0
    for i in range(first, last):
        q0 = 0.5 * t[i] ** 2 + t[i] * t[i + 1] + t[i] * z[i + 1]
        d = path.complete[i + 1] - path.complete[i]
        misses = 0 if path.accurate[i] else misses + 1
        # frames i-j+1..i inaccurate -> rectangle D_i * T_{i-j}
        for j in range(1, misses + 1):
            q0 += d * t[i - j]
        total += q0
    l_first = path.complete[first] - path.gen[first]
    l_last = path.complete[last] - path.gen[last]
    return total + 0.5 * l_last ** 2 - 0.5 * l_first ** 2


def segment_area_lcfsp(path: SamplePath, first: int, last: int) -> float:
    """LCFSP counterpart over non-preempted frames, using L_k and Y_k."""
    if path.policy is not Policy.LCFSP:
        raise ValueError("LCFSP decomposition needs an LCFSP path")
    order = _completed_in_order(path)
    pos = {int(f): k for k, f in enumerate(order)}
    a, b = pos[first], pos[last]
    if not path.accurate[first]:
        raise ValueError("window must start at an accurate completion")
    frames = order[a:b + 1]
    lat = path.complete[frames] - path.gen[frames]
    y = np.diff(path.complete[frames])
    acc = path.accurate[frames]
    total = 0.0
    misses = 0
    for k in range(len(frames) - 1):
        total += 0.5 * (lat[k] + y[k]) ** 2 - 0.5 * lat[k + 1] ** 2
        misses = 0 if acc[k] else misses + 1
        for j in range(1, misses + 1):
            total += (lat[k - j] + y[k - j] - lat[k - j + 1]) * y[k]
    return total + 0.5 * lat[-1] ** 2 - 0.5 * lat[0] ** 2


def segment_area(path: SamplePath, first: int, last: int) -> float:
    if path.policy is Policy.FCFS:
        return segment_area_fcfs(path, first, last)
    return segment_area_lcfsp(path, first, last)


def age_breakpoints(path: SamplePath, t0: float, t1: float):
    """Times where the AoPI jumps (accurate completions) within (t0, t1]."""
    times, _ = accurate_deliveries(path)
    return times[(times > t0) & (times <= t1)]


def records_to_path(policy, records: Iterable[FrameRecord], horizon: float | None = None) -> SamplePath:
    """Rebuild enough of a :class:`SamplePath` from a frame log to recompute areas."""
    recs = list(records)
    gen = np.array([r.gen_time for r in recs])
    arrive = np.array([r.arrive_time for r in recs])
    complete = np.array([math.nan if r.complete_time is None else r.complete_time for r in recs])
    acc = np.array([r.accurate for r in recs], dtype=bool)
    t = arrive - gen
    nan = np.full(len(recs), math.nan)
    return SamplePath(Policy.parse(policy), t, nan, gen, arrive, nan, complete, acc,
                      np.zeros(len(recs), dtype=bool),
                      float(arrive[-1]) if horizon is None else horizon)
