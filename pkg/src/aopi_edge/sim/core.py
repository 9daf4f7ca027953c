"""Single camera -> single server AoPI simulation.

The camera is a zero-wait source: frame i+1 starts transmitting the moment
frame i reaches the server, so arrivals form a Poisson stream of rate lambda
and a frame's generation time is its transmission start. Sample paths are
produced in bulk with numpy; :mod:`aopi_edge.sim.events` replays the same
draws through an explicit event queue for cross-checking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..errors import InstabilityError, ParameterError, SampleSizeError
from ..model import AopiInputs, Policy

N_BATCHES = 50
MIN_HORIZON = 1000
STREAM_TRANSMISSION, STREAM_SERVICE, STREAM_ACCURACY = 0, 1, 2


@dataclass(frozen=True)
class SimConfig:
    inputs: AopiInputs
    horizon_frames: int = 100_000
    warmup_fraction: float = 0.1
    rng_seed: int = 0
    stream_key: tuple[int, ...] = ()

    def __post_init__(self):
        if self.horizon_frames < MIN_HORIZON:
            raise ParameterError(f"horizon_frames must be >= {MIN_HORIZON}")
        if not 0 <= self.warmup_fraction < 1:
            raise ParameterError("warmup_fraction must lie in [0, 1)")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ParameterError("rng_seed must be a 64-bit unsigned integer")


def stream(seed: int, key: tuple[int, ...], which: int) -> np.random.Generator:
    """Counter-based (Philox) generator for one of the three per-camera streams."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key) + (which,))
    return np.random.Generator(np.random.Philox(ss))


def draw(cfg: SimConfig):
    """Transmission times, service times and accuracy flags for ``cfg``."""
    n = cfg.horizon_frames
    inp = cfg.inputs
    t = stream(cfg.rng_seed, cfg.stream_key, STREAM_TRANSMISSION).exponential(1 / inp.lam, n)
    o = stream(cfg.rng_seed, cfg.stream_key, STREAM_SERVICE).exponential(1 / inp.mu, n)
    acc = stream(cfg.rng_seed, cfg.stream_key, STREAM_ACCURACY).random(n) < inp.accuracy
    return t, o, acc


@dataclass
class SamplePath:
    """Per-frame timeline; ``complete`` is NaN for preempted/unfinished frames."""

    policy: Policy
    transmission: np.ndarray
    service: np.ndarray
    gen: np.ndarray
    arrive: np.ndarray
    start: np.ndarray
    complete: np.ndarray
    accurate: np.ndarray
    preempted: np.ndarray
    horizon: float

    @property
    def n(self) -> int:
        return len(self.gen)

    @property
    def completed(self) -> np.ndarray:
        return ~np.isnan(self.complete)

    def records(self):
        from .framelog import FrameRecord

        for i in range(self.n):
            c = self.complete[i]
            yield FrameRecord(i, float(self.gen[i]), float(self.arrive[i]),
                              None if math.isnan(c) else float(c), bool(self.accurate[i]))


def build_path(policy: Policy, t: np.ndarray, o: np.ndarray, acc: np.ndarray) -> SamplePath:
    policy = Policy.parse(policy)
    arrive = np.cumsum(t)
    gen = arrive - t
    horizon = float(arrive[-1])
    if policy is Policy.FCFS:
        s = np.cumsum(o)
        s_prev = s - o
        # Lindley recursion d_i = max(a_i, d_{i-1}) + o_i in closed form
        finish = s + np.maximum.accumulate(arrive - s_prev)
        start = finish - o
        done = finish <= horizon
        preempted = np.zeros(len(t), dtype=bool)
    else:
        start = arrive.copy()
        finish = arrive + o
        nxt = np.empty_like(t)
        nxt[:-1] = t[1:]
        nxt[-1] = np.inf
        survives = o < nxt
        preempted = ~survives
        preempted[-1] = False
        done = survives & (finish <= horizon)
    complete = np.where(done, finish, np.nan)
    return SamplePath(policy, t, o, gen, arrive, start, complete, acc, preempted, horizon)


def sample_path(cfg: SimConfig) -> SamplePath:
    inp = cfg.inputs
    if inp.policy is Policy.FCFS and not inp.lam < inp.mu:
        raise InstabilityError(f"FCFS unstable: lambda={inp.lam} >= mu={inp.mu}")
    t, o, acc = draw(cfg)
    return build_path(inp.policy, t, o, acc)


# --------------------------------------------------------------------------
# Age integration


def accurate_deliveries(path: SamplePath):
    """Completion times and generation times of accurately recognised frames, time-ordered."""
    mask = path.completed & path.accurate
    times = path.complete[mask]
    gens = path.gen[mask]
    order = np.argsort(times, kind="stable")
    return times[order], gens[order]


def _age_breakpoints(times, gens, t0, t1):
    """Breakpoints u and the held generation time on each [u_j, u_{j+1})."""
    # fictitious accurate frame generated and delivered at t = 0
    k0 = np.searchsorted(times, t0, side="right")
    k1 = np.searchsorted(times, t1, side="right")
    g_init = gens[k0 - 1] if k0 > 0 else 0.0
    u = np.concatenate(([t0], times[k0:k1], [t1]))
    g = np.concatenate(([g_init], gens[k0:k1]))
    return u, g


def integrate_age(times, gens, t0: float, t1: float) -> float:
    """Integral of the AoPI over [t0, t1] given accurate deliveries."""
    u, g = _age_breakpoints(times, gens, t0, t1)
    du = np.diff(u)
    return float(np.sum(du * (0.5 * (u[:-1] + u[1:]) - g)))


def _cumulative_area(u, g, points):
    du = np.diff(u)
    seg = du * (0.5 * (u[:-1] + u[1:]) - g)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    j = np.clip(np.searchsorted(u, points, side="right") - 1, 0, len(g) - 1)
    x = points - u[j]
    return cum[j] + x * (u[j] + 0.5 * x - g[j])


def age_at(path: SamplePath, t) -> np.ndarray:
    """Right-continuous AoPI evaluated at times ``t``."""
    times, gens = accurate_deliveries(path)
    t = np.asarray(t, dtype=float)
    k = np.searchsorted(times, t, side="right")
    held = np.where(k > 0, gens[np.maximum(k - 1, 0)], 0.0)
    return t - held


# --------------------------------------------------------------------------
# Results


@dataclass
class Diagnostics:
    mean_transmission: float
    mean_service: float | None
    e_t_w_next: float | None
    effective_rate: float
    e_y: float | None
    e_y2: float | None
    n_completed: int
    n_pairs: int


@dataclass
class SimResult:
    inputs: AopiInputs
    mean_aopi: float
    aopi_ci95: float
    empirical_accuracy: float
    frames_generated: int
    frames_completed: int
    frames_preempted: int
    frames_in_flight: int
    window: tuple[float, float]
    diagnostics: Diagnostics = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "policy": self.inputs.policy.name,
            "lambda": self.inputs.lam,
            "mu": self.inputs.mu,
            "p": self.inputs.accuracy,
            "mean_aopi": self.mean_aopi,
            "aopi_ci95": self.aopi_ci95,
            "empirical_accuracy": self.empirical_accuracy,
            "frames_generated": self.frames_generated,
            "frames_completed": self.frames_completed,
            "frames_preempted": self.frames_preempted,
            "frames_in_flight": self.frames_in_flight,
        }


def summarize(path: SamplePath, inputs: AopiInputs, warmup_fraction: float) -> SimResult:
    n = path.n
    w_idx = int(math.floor(warmup_fraction * n))
    t0 = float(path.arrive[w_idx - 1]) if w_idx > 0 else 0.0
    t1 = path.horizon
    times, gens = accurate_deliveries(path)
    u, g = _age_breakpoints(times, gens, t0, t1)

    edges = np.linspace(t0, t1, N_BATCHES + 1)
    cum = _cumulative_area(u, g, edges)
    total = float(cum[-1] - cum[0])
    mean = total / (t1 - t0)
    batch = np.diff(cum) / np.diff(edges)
    half = float(stats.t.ppf(0.975, N_BATCHES - 1) * batch.std(ddof=1) / math.sqrt(N_BATCHES))

    completed = path.completed
    in_win = completed & (path.complete > t0)
    n_done = int(in_win.sum())
    emp_acc = float(path.accurate[in_win].mean()) if n_done else math.nan

    dep = np.sort(path.complete[in_win])
    y = np.diff(dep)
    post = np.arange(n) >= w_idx
    if path.policy is Policy.FCFS:
        wait = path.start - path.arrive
        pair = post[:-1] & completed[1:]
        e_tw = float(np.mean(path.transmission[:-1][pair] * wait[1:][pair])) if pair.any() else math.nan
        served = post & completed
        mean_service = float(path.service[served].mean()) if served.any() else math.nan
        n_pairs = int(pair.sum())
    else:
        e_tw = None
        mean_service = None
        n_pairs = 0
    diag = Diagnostics(
        mean_transmission=float(path.transmission[post].mean()),
        mean_service=mean_service,
        e_t_w_next=e_tw,
        effective_rate=n_done / (t1 - t0),
        e_y=float(y.mean()) if len(y) else math.nan,
        e_y2=float(np.mean(y * y)) if len(y) else math.nan,
        n_completed=n_done,
        n_pairs=n_pairs,
    )
    n_complete_all = int(completed.sum())
    n_pre = int(path.preempted.sum())
    return SimResult(
        inputs=inputs,
        mean_aopi=mean,
        aopi_ci95=half,
        empirical_accuracy=emp_acc,
        frames_generated=n,
        frames_completed=n_complete_all,
        frames_preempted=n_pre,
        frames_in_flight=n - n_complete_all - n_pre,
        window=(t0, t1),
        diagnostics=diag,
    )


def simulate_single(cfg: SimConfig, engine: str = "vector") -> SimResult:
    """Simulate one camera/server pipeline and time-average its AoPI.

    ``engine="event"`` replays the identical draws through the heap-based
    event loop; both engines agree to floating-point rounding.
    """
    inp = cfg.inputs
    if inp.policy is Policy.FCFS and not inp.lam < inp.mu:
        raise InstabilityError(f"FCFS unstable: lambda={inp.lam} >= mu={inp.mu}")
    if engine == "vector":
        path = sample_path(cfg)
    elif engine == "event":
        from .events import run_events

        t, o, acc = draw(cfg)
        path = run_events(inp.policy, t, o, acc)
    else:
        raise ParameterError(f"unknown engine {engine!r}")
    return summarize(path, inp, cfg.warmup_fraction)


# --------------------------------------------------------------------------
# Proof-intermediate diagnostics


@dataclass(frozen=True)
class DiagnosticCheck:
    name: str
    empirical: float
    expected: float

    @property
    def rel_error(self) -> float:
        return abs(self.empirical - self.expected) / abs(self.expected)


MIN_DIAGNOSTIC_FRAMES = 100_000


def expected_moments(inputs: AopiInputs) -> dict[str, float]:
    lam, mu = inputs.lam, inputs.mu
    if inputs.policy is Policy.FCFS:
        return {
            "e_t_w_next": (2 * lam ** 2 + mu ** 2 - lam * mu) / (mu ** 4 - mu ** 2 * lam ** 2),
            "effective_rate": lam,
        }
    # second moment from the MGF lambda*mu / ((lambda - s)(mu - s))
    return {
        "effective_rate": lam * mu / (lam + mu),
        "e_y": (lam + mu) / (lam * mu),
        "e_y2": 2 / lam ** 2 + 2 / (lam * mu) + 2 / mu ** 2,
    }


def diagnostics_check(result: SimResult, inputs: AopiInputs | None = None) -> dict[str, DiagnosticCheck]:
    """Relative error of each empirical proof intermediate against its closed form."""
    inputs = inputs or result.inputs
    d = result.diagnostics
    if d.n_completed < MIN_DIAGNOSTIC_FRAMES:
        raise SampleSizeError(f"need >= {MIN_DIAGNOSTIC_FRAMES} completed frames, got {d.n_completed}")
    out = {}
    for name, expected in expected_moments(inputs).items():
        out[name] = DiagnosticCheck(name, float(getattr(d, name)), expected)
    return out
