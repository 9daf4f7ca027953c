"""Scenario files, capacity traces and per-slot state construction.

A scenario is a TOML document with a ``schema_version`` key; see
``TEMPLATE`` for every field and its default. Capacity traces are CSV files
with the header ``slot,server,bandwidth_hz,compute_flops``.
"""
from __future__ import annotations

import csv
import math
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import AopiError, SpecError
from .model import (
    EPSILON_STABILITY,
    Camera,
    EdgeServerCapacity,
    LinkParams,
    ModelSpec,
    ScenarioState,
)

SCHEMA_VERSION = 1
TRACE_COLUMNS = ("slot", "server", "bandwidth_hz", "compute_flops")
TRACE_FLOOR = 0.05
STRATEGY_NAMES = ("lbcd", "dos", "jcab", "min")

# stream ids under each run seed
_STREAM_BANDWIDTH, _STREAM_COMPUTE, _STREAM_CONTENT = 10, 11, 12


@dataclass(frozen=True)
class CameraSpec:
    link: LinkParams
    models: tuple[int, ...]
    beta: float
    task: str | None = None


@dataclass(frozen=True)
class ContentParams:
    """Bounded multiplicative random walk of the content difficulty beta."""

    beta_min: float = 3.0
    beta_max: float = 3.0
    step: float = 0.0

    def __post_init__(self):
        if not 0 < self.beta_min <= self.beta_max:
            raise SpecError("need 0 < beta_min <= beta_max", field="content.beta_min")
        if self.step < 0:
            raise SpecError("step must be nonnegative", field="content.step")


@dataclass(frozen=True)
class TraceParams:
    bandwidth_hz: float = 30e6
    compute_flops: float = 50e12
    bandwidth_cv: float = 0.0
    compute_cv: float = 0.0

    def __post_init__(self):
        for name in ("bandwidth_hz", "compute_flops"):
            if not getattr(self, name) > 0:
                raise SpecError("mean capacity must be positive", field=f"servers.{name}")
        for name in ("bandwidth_cv", "compute_cv"):
            if getattr(self, name) < 0:
                raise SpecError("coefficient of variation must be nonnegative", field=f"servers.{name}")


@dataclass(frozen=True)
class ScenarioSpec:
    resolutions: tuple[int, ...]
    ref_resolution: float
    models: tuple[ModelSpec, ...]
    cameras: tuple[CameraSpec, ...]
    n_servers: int
    slots: int = 100
    slot_length: float = 300.0
    p_min: float = 0.7
    V: float = 10.0
    seeds: tuple[int, ...] = (1,)
    strategies: tuple[str, ...] = STRATEGY_NAMES
    content: ContentParams = field(default_factory=ContentParams)
    traces: TraceParams = field(default_factory=TraceParams)
    trace_file: Path | None = None
    epsilon_stability: float = EPSILON_STABILITY
    max_bcd_iters: int = 10
    bcd_rel_tol: float = 1e-4
    solver_tol: float = 1e-6
    refine_rounds: int = 2
    jcab_latency_budget: float = 0.5
    sim_frames: int = 0
    warmup_fraction: float = 0.1
    convergence_margin: float = 0.01
    name: str = "scenario"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.n_servers < 1:
            raise SpecError("need at least one server", field="servers.count")
        if not self.cameras:
            raise SpecError("need at least one camera", field="cameras.count")
        if self.slots < 1:
            raise SpecError("need at least one slot", field="slots")
        if not 0 <= self.p_min <= 1:
            raise SpecError("p_min must be a probability", field="p_min")
        if not self.V > 0:
            raise SpecError("V must be positive", field="V")
        if not self.slot_length > 0:
            raise SpecError("slot_length must be positive", field="slot_length")
        for s in self.strategies:
            if s not in STRATEGY_NAMES:
                raise SpecError(f"unknown strategy {s!r}", field="strategies")
        if not self.seeds:
            raise SpecError("need at least one seed", field="seeds")

    @property
    def n_cameras(self) -> int:
        return len(self.cameras)

    def with_overrides(self, **kw) -> "ScenarioSpec":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# ---------------------------------------------------------------- template

TEMPLATE = """\
# Scenario for the edge video analytics controller.
schema_version = 1
name = "stationary-30x3"
slots = 2000
slot_length = 300.0        # seconds per control slot
p_min = 0.7                # long-term accuracy target
V = 10.0                   # AoPI weight in the drift-plus-penalty objective
seeds = [1, 2, 3]
strategies = ["lbcd", "dos", "jcab", "min"]

[catalog]
resolutions = [384, 512, 640, 768, 896, 1024]
ref_resolution = 640

# flops_at_ref: FLOPs per frame at ref_resolution; accuracy_ceiling: a_m
[[catalog.models]]
name = "yolov5n"
flops_at_ref = 0.06e12
accuracy_ceiling = 0.35
task = "detection"

[[catalog.models]]
name = "yolov5s"
flops_at_ref = 0.2e12
accuracy_ceiling = 0.62
task = "detection"

[[catalog.models]]
name = "yolov5m"
flops_at_ref = 0.6e12
accuracy_ceiling = 0.80
task = "detection"

[[catalog.models]]
name = "yolov5l"
flops_at_ref = 1.3e12
accuracy_ceiling = 0.87
task = "detection"

[[catalog.models]]
name = "yolov5x"
flops_at_ref = 2.5e12
accuracy_ceiling = 0.91
task = "detection"

[[catalog.models]]
name = "fpn"
flops_at_ref = 0.3e12
accuracy_ceiling = 0.40
task = "semantic"

[[catalog.models]]
name = "unet"
flops_at_ref = 1.2e12
accuracy_ceiling = 0.86
task = "semantic"

[[catalog.models]]
name = "yolact"
flops_at_ref = 0.3e12
accuracy_ceiling = 0.38
task = "instance"

[[catalog.models]]
name = "maskrcnn"
flops_at_ref = 1.5e12
accuracy_ceiling = 0.88
task = "instance"

[cameras]
count = 30
tasks = ["detection", "semantic", "instance"]   # split into equal contiguous groups
tx_power = 0.1             # W
channel_gain = 3e-9
noise_power = 1e-10        # W; log2(1 + SNR) = 2 bit/s/Hz
bits_per_pixel_sq = 3.0    # encoded bits per frame = bits_per_pixel_sq * r^2

[content]
beta_min = 2.7
beta_max = 3.3
step = 0.02                # log-scale step of the difficulty random walk

[servers]
count = 3
bandwidth_hz = 30e6
compute_flops = 50e12
bandwidth_cv = 0.2
compute_cv = 0.2
# trace = "capacity.csv"   # replay a trace instead of the synthetic series

[solver]
max_bcd_iters = 10
bcd_rel_tol = 1e-4
solver_tol = 1e-6
refine_rounds = 2          # single-camera swap sweeps after each descent (0 disables)
epsilon_stability = 0.01

[baselines]
jcab_latency_budget = 0.5

[simulation]
frames_per_slot = 0        # 0: frames sent during one slot at the decided rate
warmup_fraction = 0.1

[report]
convergence_margin = 0.01  # accuracy counts as converged at p_min - margin
"""


# ---------------------------------------------------------------- loading

_TOP = {"schema_version", "name", "slots", "slot_length", "p_min", "V", "seeds", "strategies",
        "catalog", "cameras", "content", "servers", "solver", "baselines", "simulation", "report"}
_SECTIONS = {
    "catalog": {"resolutions", "ref_resolution", "models"},
    "cameras": {"count", "tasks", "tx_power", "channel_gain", "noise_power", "bits_per_pixel_sq",
                "beta", "list"},
    "content": {"beta_min", "beta_max", "step"},
    "servers": {"count", "bandwidth_hz", "compute_flops", "bandwidth_cv", "compute_cv", "trace"},
    "solver": {"max_bcd_iters", "bcd_rel_tol", "solver_tol", "epsilon_stability", "refine_rounds"},
    "baselines": {"jcab_latency_budget"},
    "simulation": {"frames_per_slot", "warmup_fraction"},
    "report": {"convergence_margin"},
}
_MODEL_KEYS = {"name", "flops_at_ref", "accuracy_ceiling", "task"}
_CAMERA_KEYS = {"task", "models", "beta", "tx_power", "channel_gain", "noise_power", "bits_per_pixel_sq"}
_LINK_DEFAULTS = {"tx_power": 0.1, "channel_gain": 3e-9, "noise_power": 1e-10, "bits_per_pixel_sq": 3.0}


class _Doc:
    """Typed access to a parsed document with line lookup for error messages."""

    def __init__(self, data: dict, text: str, path: Path | None):
        self.data = data
        self.lines = text.splitlines()
        self.path = path

    def line_of(self, dotted: str) -> int | None:
        key = dotted.split(".")[-1].split("[")[0]
        pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
        for i, line in enumerate(self.lines, 1):
            if pat.match(line):
                return i
        section = dotted.split(".")[0]
        pat = re.compile(rf"^\s*\[+\s*{re.escape(section)}\b")
        for i, line in enumerate(self.lines, 1):
            if pat.match(line):
                return i
        return None

    def fail(self, dotted: str, msg: str) -> SpecError:
        return SpecError(msg, field=dotted, line=self.line_of(dotted), path=str(self.path) if self.path else None)

    def get(self, table: dict, key: str, dotted: str, kind, default=None, required=False):
        if key not in table:
            if required:
                raise self.fail(dotted, "required field is missing")
            return default
        value = table[key]
        try:
            if kind is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise TypeError
                out = float(value)
                if not math.isfinite(out):
                    raise ValueError
                return out
            if kind is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise TypeError
                return int(value)
            if kind is str:
                if not isinstance(value, str):
                    raise TypeError
                return value
            if kind is list:
                if not isinstance(value, list):
                    raise TypeError
                return value
            if kind is dict:
                if not isinstance(value, dict):
                    raise TypeError
                return value
        except (TypeError, ValueError):
            raise self.fail(dotted, f"expected {kind.__name__}, got {value!r}") from None
        raise AssertionError(kind)

    def check_keys(self, table: dict, allowed: set, prefix: str):
        for k in table:
            if k not in allowed:
                raise self.fail(f"{prefix}{k}", "unknown field")


def parse_scenario(text: str, path: Path | None = None) -> ScenarioSpec:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise SpecError(f"not valid TOML: {exc}", line=int(m.group(1)) if m else None,
                        path=str(path) if path else None) from None
    doc = _Doc(data, text, path)
    try:
        return _build_spec(doc)
    except SpecError as exc:
        if exc.line is None and exc.field:
            raise SpecError(exc.message, field=exc.field, line=doc.line_of(exc.field),
                            path=str(path) if path else None) from None
        raise
    except AopiError as exc:
        raise SpecError(str(exc), path=str(path) if path else None) from None


def load_scenario(path) -> ScenarioSpec:
    path = Path(path)
    return parse_scenario(path.read_text(), path)


def _build_spec(doc: _Doc) -> ScenarioSpec:
    d = doc.data
    doc.check_keys(d, _TOP, "")
    version = doc.get(d, "schema_version", "schema_version", int, required=True)
    if version != SCHEMA_VERSION:
        raise doc.fail("schema_version", f"unsupported schema version {version}")
    sections = {}
    for name, keys in _SECTIONS.items():
        table = doc.get(d, name, name, dict, default={})
        doc.check_keys(table, keys, f"{name}.")
        sections[name] = table

    cat = sections["catalog"]
    res = doc.get(cat, "resolutions", "catalog.resolutions", list, required=True)
    if not res or any(isinstance(r, bool) or not isinstance(r, int) or r <= 0 for r in res):
        raise doc.fail("catalog.resolutions", "resolutions must be a nonempty list of positive integers")
    if len(set(res)) != len(res):
        raise doc.fail("catalog.resolutions", "duplicate resolution")
    ref = doc.get(cat, "ref_resolution", "catalog.ref_resolution", float, default=float(max(res)))
    if not ref > 0:
        raise doc.fail("catalog.ref_resolution", "must be positive")
    raw_models = doc.get(cat, "models", "catalog.models", list, required=True)
    if not raw_models:
        raise doc.fail("catalog.models", "model catalog is empty")
    models = []
    for i, mt in enumerate(raw_models):
        where = f"catalog.models[{i}]"
        if not isinstance(mt, dict):
            raise doc.fail("catalog.models", f"{where} must be a table")
        doc.check_keys(mt, _MODEL_KEYS, f"{where}.")
        name = doc.get(mt, "name", f"{where}.name", str, default=f"model{i}")
        kappa = doc.get(mt, "flops_at_ref", f"{where}.flops_at_ref", float, required=True)
        ceiling = doc.get(mt, "accuracy_ceiling", f"{where}.accuracy_ceiling", float, required=True)
        task = doc.get(mt, "task", f"{where}.task", str)
        if not kappa > 0:
            raise doc.fail(f"{where}.flops_at_ref", "must be positive")
        if not 0 < ceiling <= 1:
            raise doc.fail(f"{where}.accuracy_ceiling", "must lie in (0, 1]")
        models.append(ModelSpec(name, kappa, ceiling, task))

    content = sections["content"]
    cam_t = sections["cameras"]
    beta_default = doc.get(cam_t, "beta", "cameras.beta", float)
    c_min = doc.get(content, "beta_min", "content.beta_min", float,
                    default=beta_default if beta_default is not None else 3.0)
    c_max = doc.get(content, "beta_max", "content.beta_max", float, default=max(c_min, beta_default or c_min))
    content_params = ContentParams(c_min, c_max, doc.get(content, "step", "content.step", float, default=0.0))
    beta0 = beta_default if beta_default is not None else math.sqrt(c_min * c_max)
    cameras = _build_cameras(doc, cam_t, models, beta0)

    srv = sections["servers"]
    n_servers = doc.get(srv, "count", "servers.count", int, default=1)
    trace_params = TraceParams(
        doc.get(srv, "bandwidth_hz", "servers.bandwidth_hz", float, default=30e6),
        doc.get(srv, "compute_flops", "servers.compute_flops", float, default=50e12),
        doc.get(srv, "bandwidth_cv", "servers.bandwidth_cv", float, default=0.0),
        doc.get(srv, "compute_cv", "servers.compute_cv", float, default=0.0),
    )
    trace_file = doc.get(srv, "trace", "servers.trace", str)
    if trace_file is not None:
        trace_file = Path(trace_file)
        if not trace_file.is_absolute() and doc.path is not None:
            trace_file = doc.path.parent / trace_file

    seeds = doc.get(d, "seeds", "seeds", list, default=[1])
    if not seeds or any(isinstance(s, bool) or not isinstance(s, int) or s < 0 for s in seeds):
        raise doc.fail("seeds", "seeds must be a nonempty list of nonnegative integers")
    strategies = doc.get(d, "strategies", "strategies", list, default=list(STRATEGY_NAMES))
    for s in strategies:
        if s not in STRATEGY_NAMES:
            raise doc.fail("strategies", f"unknown strategy {s!r}")

    sol = sections["solver"]
    sim = sections["simulation"]
    spec = ScenarioSpec(
        resolutions=tuple(sorted(int(r) for r in res)),
        ref_resolution=ref,
        models=tuple(models),
        cameras=tuple(cameras),
        n_servers=n_servers,
        slots=doc.get(d, "slots", "slots", int, default=100),
        slot_length=doc.get(d, "slot_length", "slot_length", float, default=300.0),
        p_min=doc.get(d, "p_min", "p_min", float, default=0.7),
        V=doc.get(d, "V", "V", float, default=10.0),
        seeds=tuple(int(s) for s in seeds),
        strategies=tuple(strategies),
        content=content_params,
        traces=trace_params,
        trace_file=trace_file,
        epsilon_stability=doc.get(sol, "epsilon_stability", "solver.epsilon_stability", float,
                                  default=EPSILON_STABILITY),
        max_bcd_iters=doc.get(sol, "max_bcd_iters", "solver.max_bcd_iters", int, default=10),
        bcd_rel_tol=doc.get(sol, "bcd_rel_tol", "solver.bcd_rel_tol", float, default=1e-4),
        solver_tol=doc.get(sol, "solver_tol", "solver.solver_tol", float, default=1e-6),
        refine_rounds=doc.get(sol, "refine_rounds", "solver.refine_rounds", int, default=2),
        jcab_latency_budget=doc.get(sections["baselines"], "jcab_latency_budget",
                                    "baselines.jcab_latency_budget", float, default=0.5),
        sim_frames=doc.get(sim, "frames_per_slot", "simulation.frames_per_slot", int, default=0),
        warmup_fraction=doc.get(sim, "warmup_fraction", "simulation.warmup_fraction", float, default=0.1),
        convergence_margin=doc.get(sections["report"], "convergence_margin", "report.convergence_margin",
                                   float, default=0.01),
        name=doc.get(d, "name", "name", str, default="scenario"),
    )
    for name, dotted in (("epsilon_stability", "solver.epsilon_stability"),
                         ("max_bcd_iters", "solver.max_bcd_iters"), ("bcd_rel_tol", "solver.bcd_rel_tol"),
                         ("solver_tol", "solver.solver_tol"),
                         ("jcab_latency_budget", "baselines.jcab_latency_budget")):
        if not getattr(spec, name) > 0:
            raise doc.fail(dotted, "must be positive")
    if not spec.epsilon_stability < 1:
        raise doc.fail("solver.epsilon_stability", "must be below 1")
    if spec.refine_rounds < 0:
        raise doc.fail("solver.refine_rounds", "must be nonnegative")
    if spec.sim_frames < 0:
        raise doc.fail("simulation.frames_per_slot", "must be nonnegative")
    if not 0 <= spec.warmup_fraction < 1:
        raise doc.fail("simulation.warmup_fraction", "must lie in [0, 1)")
    return spec


def _link(doc: _Doc, table: dict, prefix: str, base: dict) -> LinkParams:
    vals = {k: doc.get(table, k, f"{prefix}{k}", float, default=base[k]) for k in _LINK_DEFAULTS}
    for k, v in vals.items():
        if not v > 0:
            raise doc.fail(f"{prefix}{k}", "must be positive")
    return LinkParams(**vals)


def _models_for_task(models: Sequence[ModelSpec], task: str | None) -> tuple[int, ...]:
    if task is None:
        return tuple(range(len(models)))
    return tuple(i for i, m in enumerate(models) if m.task in (task, None))


def _build_cameras(doc: _Doc, cam_t: dict, models, beta0: float) -> list[CameraSpec]:
    base_link = {k: doc.get(cam_t, k, f"cameras.{k}", float, default=v) for k, v in _LINK_DEFAULTS.items()}
    link = _link(doc, cam_t, "cameras.", _LINK_DEFAULTS)
    explicit = doc.get(cam_t, "list", "cameras.list", list)
    out = []
    if explicit:
        for i, ct in enumerate(explicit):
            where = f"cameras.list[{i}]"
            if not isinstance(ct, dict):
                raise doc.fail("cameras.list", f"{where} must be a table")
            doc.check_keys(ct, _CAMERA_KEYS, f"{where}.")
            task = doc.get(ct, "task", f"{where}.task", str)
            ids = doc.get(ct, "models", f"{where}.models", list)
            if ids is None:
                ids = _models_for_task(models, task)
            names = [m.name for m in models]
            resolved = []
            for m in ids:
                if isinstance(m, str) and m in names:
                    resolved.append(names.index(m))
                elif isinstance(m, int) and not isinstance(m, bool) and 0 <= m < len(models):
                    resolved.append(m)
                else:
                    raise doc.fail(f"{where}.models", f"unknown model {m!r}")
            if not resolved:
                raise doc.fail(f"{where}.models", "camera has no usable model")
            beta = doc.get(ct, "beta", f"{where}.beta", float, default=beta0)
            if not beta > 0:
                raise doc.fail(f"{where}.beta", "must be positive")
            out.append(CameraSpec(_link(doc, ct, f"{where}.", base_link), tuple(resolved), beta, task))
        return out
    count = doc.get(cam_t, "count", "cameras.count", int, default=1)
    if count < 1:
        raise doc.fail("cameras.count", "need at least one camera")
    tasks = doc.get(cam_t, "tasks", "cameras.tasks", list)
    for n in range(count):
        task = tasks[n * len(tasks) // count] if tasks else None
        ids = _models_for_task(models, task)
        if not ids:
            raise doc.fail("cameras.tasks", f"no model in the catalog serves task {task!r}")
        out.append(CameraSpec(link, ids, beta0, task))
    return out


# ---------------------------------------------------------------- traces


@dataclass(frozen=True)
class TraceSeries:
    """Per-slot, per-server capacities, arrays shaped [slot, server]."""

    bandwidth: np.ndarray
    compute: np.ndarray

    def __post_init__(self):
        if self.bandwidth.shape != self.compute.shape or self.bandwidth.ndim != 2:
            raise ValueError("bandwidth and compute must share a [slot, server] shape")
        if np.any(self.bandwidth < 0) or np.any(self.compute < 0):
            raise ValueError("capacities must be nonnegative")

    @property
    def n_slots(self) -> int:
        return self.bandwidth.shape[0]

    @property
    def n_servers(self) -> int:
        return self.bandwidth.shape[1]

    def servers_at(self, slot: int) -> list[EdgeServerCapacity]:
        return [EdgeServerCapacity(float(b), float(c))
                for b, c in zip(self.bandwidth[slot], self.compute[slot])]


def _stream(seed: int, which: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(which,))))


def _lognormal(rng: np.random.Generator, mean: float, cv: float, shape) -> np.ndarray:
    if cv == 0:
        return np.full(shape, float(mean))
    sigma2 = math.log1p(cv * cv)
    x = rng.lognormal(math.log(mean) - 0.5 * sigma2, math.sqrt(sigma2), size=shape)
    return np.maximum(x, TRACE_FLOOR * mean)


def gen_traces(params: TraceParams, n_slots: int, n_servers: int, seed: int) -> TraceSeries:
    """Independent log-normal capacities with the given means and CVs, floored at 5% of the mean."""
    shape = (n_slots, n_servers)
    return TraceSeries(_lognormal(_stream(seed, _STREAM_BANDWIDTH), params.bandwidth_hz, params.bandwidth_cv, shape),
                       _lognormal(_stream(seed, _STREAM_COMPUTE), params.compute_flops, params.compute_cv, shape))


def write_trace(trace: TraceSeries, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t in range(trace.n_slots):
            for s in range(trace.n_servers):
                w.writerow([t, s, repr(float(trace.bandwidth[t, s])), repr(float(trace.compute[t, s]))])


def load_trace(path, n_servers: int | None = None) -> TraceSeries:
    """Read a capacity trace; every (slot, server) pair must appear exactly once."""
    path = Path(path)
    where = str(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_COLUMNS:
            raise SpecError(f"trace header must be {','.join(TRACE_COLUMNS)}", line=1, path=where)
        rows = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise SpecError("expected 4 columns", line=lineno, path=where)
            try:
                slot, server = int(row[0]), int(row[1])
            except ValueError:
                raise SpecError("slot and server must be integers", line=lineno, path=where) from None
            ctx = f"slot {slot}, server {server}"
            try:
                b, c = float(row[2]), float(row[3])
            except ValueError:
                raise SpecError(f"{ctx}: capacities must be numbers", line=lineno, path=where) from None
            if slot < 0 or server < 0:
                raise SpecError(f"{ctx}: indices must be nonnegative", line=lineno, path=where)
            if not (math.isfinite(b) and b >= 0):
                raise SpecError(f"{ctx}: negative or invalid bandwidth {row[2]}", field="bandwidth_hz",
                                line=lineno, path=where)
            if not (math.isfinite(c) and c >= 0):
                raise SpecError(f"{ctx}: negative or invalid compute {row[3]}", field="compute_flops",
                                line=lineno, path=where)
            if (slot, server) in rows:
                raise SpecError(f"{ctx}: duplicate row", line=lineno, path=where)
            rows[(slot, server)] = (b, c)
    if not rows:
        raise SpecError("trace has no rows", path=where)
    n_t = max(k[0] for k in rows) + 1
    n_s = max(k[1] for k in rows) + 1 if n_servers is None else n_servers
    bw = np.full((n_t, n_s), np.nan)
    cp = np.full((n_t, n_s), np.nan)
    for (t, s), (b, c) in rows.items():
        if s >= n_s:
            raise SpecError(f"slot {t}, server {s}: scenario has only {n_s} servers", path=where)
        bw[t, s], cp[t, s] = b, c
    missing = np.argwhere(np.isnan(bw))
    if missing.size:
        t, s = missing[0]
        raise SpecError(f"slot {t}, server {s}: row missing", path=where)
    return TraceSeries(bw, cp)


def scenario_traces(spec: ScenarioSpec, seed: int) -> TraceSeries:
    if spec.trace_file is not None:
        trace = load_trace(spec.trace_file, spec.n_servers)
        if trace.n_slots < spec.slots:
            raise SpecError(f"trace covers {trace.n_slots} slots but the run needs {spec.slots}",
                            field="servers.trace", path=str(spec.trace_file))
        return trace
    return gen_traces(spec.traces, spec.slots, spec.n_servers, seed)


# ---------------------------------------------------------------- content


def content_walk(spec: ScenarioSpec, seed: int) -> np.ndarray:
    """beta[slot, camera]; each camera takes a log-normal step per slot, reflected into bounds."""
    n, t = spec.n_cameras, spec.slots
    lo, hi = math.log(spec.content.beta_min), math.log(spec.content.beta_max)
    start = np.clip(np.log([c.beta for c in spec.cameras]), lo, hi)
    if spec.content.step == 0 or hi == lo:
        return np.tile(np.exp(start), (t, 1))
    steps = _stream(seed, _STREAM_CONTENT).standard_normal((t, n)) * spec.content.step
    out = np.empty((t, n))
    x = start.copy()
    for k in range(t):
        x = x + steps[k] if k else x
        # reflect at the bounds so the walk stays inside [lo, hi]
        x = np.where(x > hi, 2 * hi - x, x)
        x = np.where(x < lo, 2 * lo - x, x)
        x = np.clip(x, lo, hi)
        out[k] = np.exp(x)
    return out


def slot_state(spec: ScenarioSpec, betas: np.ndarray, servers: list[EdgeServerCapacity]) -> ScenarioState:
    cams = [Camera(c.link, c.models, float(b), c.task) for c, b in zip(spec.cameras, betas)]
    return ScenarioState(spec.resolutions, spec.models, spec.ref_resolution, cams, servers,
                         epsilon_stability=spec.epsilon_stability)


def spec_summary(spec: ScenarioSpec) -> dict[str, Any]:
    return {"name": spec.name, "cameras": spec.n_cameras, "servers": spec.n_servers,
            "slots": spec.slots, "p_min": spec.p_min, "V": spec.V, "seeds": list(spec.seeds),
            "slot_length": spec.slot_length}
