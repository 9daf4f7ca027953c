"""Domain types and the physical-parameter to (lambda, mu, p) mappings.

All rates are per second; bandwidth in Hz, compute in FLOPS, frame sizes
in bits.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    CatalogError,
    DegenerateAccuracyError,
    ParameterError,
    StructuralError,
)

# FCFS stability is strict; solvers work on the closed set lambda <= (1 - eps) mu.
EPSILON_STABILITY = 0.01


class Policy(enum.IntEnum):
    FCFS = 0
    LCFSP = 1

    @classmethod
    def parse(cls, value) -> "Policy":
        if isinstance(value, Policy):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ParameterError(f"unknown policy {value!r}") from None
        return cls(int(value))


@dataclass(frozen=True)
class ModelSpec:
    name: str
    flops_at_ref: float
    accuracy_ceiling: float
    task: str | None = None

    def __post_init__(self):
        if not self.flops_at_ref > 0:
            raise ParameterError(f"model {self.name}: flops_at_ref must be > 0")
        if not 0 < self.accuracy_ceiling <= 1:
            raise ParameterError(f"model {self.name}: accuracy_ceiling must be in (0, 1]")


@dataclass(frozen=True)
class VideoConfig:
    resolution: int
    policy: Policy
    model: int

    def __post_init__(self):
        if self.resolution <= 0:
            raise ParameterError("resolution must be a positive integer")
        object.__setattr__(self, "policy", Policy.parse(self.policy))


@dataclass(frozen=True)
class LinkParams:
    tx_power: float
    channel_gain: float
    noise_power: float
    bits_per_pixel_sq: float

    def __post_init__(self):
        for name in ("tx_power", "channel_gain", "noise_power", "bits_per_pixel_sq"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ParameterError(f"LinkParams.{name} must be positive, got {value!r}")

    @property
    def spectral_efficiency(self) -> float:
        """log2(1 + SNR) in bit/s/Hz."""
        return math.log2(1.0 + self.tx_power * self.channel_gain / self.noise_power)

    def frame_bits(self, resolution) -> float:
        return self.bits_per_pixel_sq * np.asarray(resolution, dtype=float) ** 2


@dataclass(frozen=True)
class EdgeServerCapacity:
    bandwidth: float
    compute: float

    def __post_init__(self):
        if self.bandwidth < 0 or self.compute < 0:
            raise ParameterError("server capacities must be nonnegative")


def _check_monotone_table(table, increasing_convex: bool, what: str):
    by_model: dict[int, list[tuple[int, float]]] = {}
    for (r, m), v in table.items():
        by_model.setdefault(int(m), []).append((int(r), float(v)))
    for m, pts in by_model.items():
        pts.sort()
        rs = np.array([r for r, _ in pts], dtype=float)
        vs = np.array([v for _, v in pts])
        if np.any(np.diff(vs) <= 0):
            raise ParameterError(f"{what} table for model {m} is not strictly increasing in resolution")
        if len(pts) >= 3:
            slopes = np.diff(vs) / np.diff(rs)
            ok = np.all(np.diff(slopes) >= -1e-12 * np.abs(slopes[1:])) if increasing_convex \
                else np.all(np.diff(slopes) <= 1e-12 * np.abs(slopes[1:]))
            if not ok:
                shape = "convex" if increasing_convex else "concave"
                raise ParameterError(f"{what} table for model {m} is not {shape} in resolution")


@dataclass(frozen=True)
class ComplexityProfile:
    """FLOPs per frame, xi(r, m) = kappa_m * (r / r0)**2 unless a table is given."""

    flops_at_ref: tuple[float, ...]
    ref_resolution: float
    table: Mapping[tuple[int, int], float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "flops_at_ref", tuple(float(k) for k in self.flops_at_ref))
        if any(not k > 0 for k in self.flops_at_ref):
            raise ParameterError("flops_at_ref must be > 0 for every model")
        if not self.ref_resolution > 0:
            raise ParameterError("ref_resolution must be > 0")
        if self.table is not None:
            _check_monotone_table(self.table, True, "complexity")

    def xi(self, resolution, model: int):
        if not 0 <= model < len(self.flops_at_ref):
            raise CatalogError(f"unknown model id {model}")
        if self.table is not None:
            try:
                return float(self.table[(int(resolution), int(model))])
            except KeyError:
                raise CatalogError(f"no complexity entry for ({resolution}, {model})") from None
        return self.flops_at_ref[model] * (np.asarray(resolution, dtype=float) / self.ref_resolution) ** 2

    def grid(self, resolutions: Sequence[int]) -> np.ndarray:
        """xi over [resolution, model]."""
        return np.array([[self.xi(r, m) for m in range(len(self.flops_at_ref))] for r in resolutions],
                        dtype=float)


@dataclass(frozen=True)
class AccuracyProfile:
    """zeta(r, m) = a_m * (1 - exp(-beta * r / r0)), clamped to [0, 1]."""

    ceilings: tuple[float, ...]
    beta: float
    ref_resolution: float
    table: Mapping[tuple[int, int], float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "ceilings", tuple(float(a) for a in self.ceilings))
        if any(not 0 < a <= 1 for a in self.ceilings):
            raise ParameterError("accuracy ceilings must lie in (0, 1]")
        if not self.beta > 0:
            raise ParameterError("content difficulty beta must be > 0")
        if not self.ref_resolution > 0:
            raise ParameterError("ref_resolution must be > 0")
        if self.table is not None:
            _check_monotone_table(self.table, False, "accuracy")

    def zeta(self, resolution, model: int):
        if not 0 <= model < len(self.ceilings):
            raise CatalogError(f"unknown model id {model}")
        if self.table is not None:
            try:
                return float(self.table[(int(resolution), int(model))])
            except KeyError:
                raise CatalogError(f"no accuracy entry for ({resolution}, {model})") from None
        r = np.asarray(resolution, dtype=float)
        p = self.ceilings[model] * -np.expm1(-self.beta * r / self.ref_resolution)
        return np.clip(p, 0.0, 1.0)

    def grid(self, resolutions: Sequence[int]) -> np.ndarray:
        return np.array([[self.zeta(r, m) for m in range(len(self.ceilings))] for r in resolutions],
                        dtype=float)


@dataclass(frozen=True)
class AopiInputs:
    lam: float
    mu: float
    accuracy: float
    policy: Policy = Policy.LCFSP

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0):
            raise ParameterError(f"rates must be positive (lambda={self.lam}, mu={self.mu})")
        if self.accuracy == 0:
            raise DegenerateAccuracyError("accuracy p = 0 gives unbounded AoPI")
        if not 0 < self.accuracy <= 1:
            raise ParameterError(f"accuracy must lie in (0, 1], got {self.accuracy}")
        object.__setattr__(self, "policy", Policy.parse(self.policy))

    @property
    def load(self) -> float:
        return self.lam / self.mu

    @property
    def stable(self) -> bool:
        return self.policy is Policy.LCFSP or self.lam < self.mu


def transmission_rate(b, link: LinkParams, resolution):
    """Frames/s delivered over ``b`` Hz for frames of side ``resolution``."""
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ParameterError("bandwidth must be nonnegative")
    out = b * link.spectral_efficiency / link.frame_bits(resolution)
    return float(out) if out.ndim == 0 else out


def computation_rate(c, cfg: VideoConfig, prof: ComplexityProfile):
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise ParameterError("compute must be nonnegative")
    out = c / prof.xi(cfg.resolution, cfg.model)
    return float(out) if np.ndim(out) == 0 else out


def accuracy(cfg: VideoConfig, prof: AccuracyProfile) -> float:
    return float(prof.zeta(cfg.resolution, cfg.model))


# --------------------------------------------------------------------------
# Scenario state consumed by the optimizer and the slot simulator


@dataclass
class Camera:
    link: LinkParams
    models: tuple[int, ...]
    beta: float
    task: str | None = None


@dataclass
class ScenarioState:
    """Everything one slot's decision depends on."""

    resolutions: tuple[int, ...]
    models: tuple[ModelSpec, ...]
    ref_resolution: float
    cameras: list[Camera]
    servers: list[EdgeServerCapacity]
    complexity_table: Mapping[tuple[int, int], float] | None = None
    epsilon_stability: float = EPSILON_STABILITY
    _grids: "Grids | None" = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.resolutions:
            raise CatalogError("empty resolution catalog")
        if not self.models:
            raise CatalogError("empty model catalog")
        self.resolutions = tuple(sorted(int(r) for r in self.resolutions))
        for n, cam in enumerate(self.cameras):
            if not cam.models:
                raise CatalogError(f"camera {n} has no allowed models")
            for m in cam.models:
                if not 0 <= m < len(self.models):
                    raise CatalogError(f"camera {n}: unknown model id {m}")

    @property
    def n_cameras(self) -> int:
        return len(self.cameras)

    @property
    def n_servers(self) -> int:
        return len(self.servers)

    @property
    def complexity(self) -> ComplexityProfile:
        return ComplexityProfile(tuple(m.flops_at_ref for m in self.models), self.ref_resolution,
                                 self.complexity_table)

    def accuracy_profile(self, camera: int) -> AccuracyProfile:
        return AccuracyProfile(tuple(m.accuracy_ceiling for m in self.models),
                               self.cameras[camera].beta, self.ref_resolution)

    def with_servers(self, servers) -> "ScenarioState":
        """Same cameras and catalogs, different capacities (grids are reused)."""
        clone = ScenarioState(self.resolutions, self.models, self.ref_resolution, self.cameras,
                              list(servers), self.complexity_table, self.epsilon_stability)
        clone._grids = self._grids
        return clone

    def subset(self, cameras: Sequence[int], server: EdgeServerCapacity) -> "ScenarioState":
        idx = list(cameras)
        clone = ScenarioState(self.resolutions, self.models, self.ref_resolution,
                              [self.cameras[i] for i in idx], [server], self.complexity_table,
                              self.epsilon_stability)
        if self._grids is not None:
            clone._grids = self._grids.take(idx)
        return clone

    @property
    def grids(self) -> "Grids":
        if self._grids is None:
            self._grids = Grids.build(self)
        return self._grids


@dataclass
class Grids:
    """Per-camera lookup tables over (resolution, model).

    lam_per_hz[n, r]   frames/s per Hz of bandwidth
    xi[r, m]           FLOPs per frame
    p[n, r, m]         recognition accuracy
    allowed[n, m]      model availability per camera
    """

    resolutions: np.ndarray
    lam_per_hz: np.ndarray
    xi: np.ndarray
    p: np.ndarray
    allowed: np.ndarray

    @classmethod
    def build(cls, state: ScenarioState) -> "Grids":
        res = np.asarray(state.resolutions, dtype=float)
        n_m = len(state.models)
        lam_per_hz = np.array([[cam.link.spectral_efficiency / cam.link.frame_bits(r) for r in res]
                               for cam in state.cameras]).reshape(len(state.cameras), len(res))
        xi = state.complexity.grid(state.resolutions)
        ceil = np.array([m.accuracy_ceiling for m in state.models])
        beta = np.array([cam.beta for cam in state.cameras], dtype=float)
        if np.any(~(beta > 0)):
            raise ParameterError("content difficulty beta must be > 0")
        sat = -np.expm1(-beta[:, None] * res[None, :] / state.ref_resolution)
        p = np.clip(sat[:, :, None] * ceil[None, None, :], 0.0, 1.0)
        allowed = np.zeros((len(state.cameras), n_m), dtype=bool)
        for n, cam in enumerate(state.cameras):
            allowed[n, list(cam.models)] = True
        return cls(res, lam_per_hz, xi, p, allowed)

    def take(self, idx) -> "Grids":
        return Grids(self.resolutions, self.lam_per_hz[idx], self.xi, self.p[idx], self.allowed[idx])


# --------------------------------------------------------------------------
# Decisions and constraint checking


@dataclass
class SlotDecision:
    """Per-slot control vector; rates are derived and stored alongside."""

    assignment: np.ndarray
    configs: list[VideoConfig]
    bandwidth: np.ndarray
    compute: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    p: np.ndarray

    @property
    def n_cameras(self) -> int:
        return len(self.configs)


def derive_rates(state: ScenarioState, configs: Sequence[VideoConfig], bandwidth, compute):
    """(lambda, mu, p) arrays for ``configs`` under the given allocation."""
    g = state.grids
    r_idx = np.array([state.resolutions.index(c.resolution) for c in configs], dtype=int)
    m_idx = np.array([c.model for c in configs], dtype=int)
    n = np.arange(len(configs))
    if len(configs) == 0:
        empty = np.zeros(0)
        return empty, empty, empty
    lam = np.asarray(bandwidth, dtype=float) * g.lam_per_hz[n, r_idx]
    mu = np.asarray(compute, dtype=float) / g.xi[r_idx, m_idx]
    p = g.p[n, r_idx, m_idx]
    return lam, mu, p


def make_decision(state: ScenarioState, assignment, configs, bandwidth, compute) -> SlotDecision:
    configs = list(configs)
    bandwidth = np.asarray(bandwidth, dtype=float)
    compute = np.asarray(compute, dtype=float)
    for c in configs:
        if c.resolution not in state.resolutions:
            raise CatalogError(f"resolution {c.resolution} not in catalog")
        if not 0 <= c.model < len(state.models):
            raise CatalogError(f"unknown model id {c.model}")
    lam, mu, p = derive_rates(state, configs, bandwidth, compute)
    return SlotDecision(np.asarray(assignment, dtype=int), configs, bandwidth, compute, lam, mu, p)


@dataclass(frozen=True)
class Violation:
    """``kind`` is one of bandwidth, compute, assignment, stability."""

    kind: str
    index: int
    detail: str

    def __str__(self):
        return f"{self.kind} #{self.index}: {self.detail}"


def check_feasible(decision: SlotDecision, servers: Sequence[EdgeServerCapacity],
                   rtol: float = 1e-9) -> list[Violation]:
    """Every violated per-slot constraint; an empty list means feasible.

    The long-term accuracy target is not a per-slot constraint and is not
    checked here.
    """
    n = decision.n_cameras
    arrays = (decision.assignment, decision.bandwidth, decision.compute, decision.lam, decision.mu)
    if any(len(a) != n for a in arrays):
        raise StructuralError("decision arrays do not all have one entry per camera")
    s_count = len(servers)
    out: list[Violation] = []
    valid = np.zeros(n, dtype=bool)
    for i, s in enumerate(decision.assignment):
        if 0 <= s < s_count:
            valid[i] = True
        else:
            out.append(Violation("assignment", i, f"camera assigned to nonexistent server {s}"))
    for i in range(n):
        if decision.bandwidth[i] < 0:
            out.append(Violation("bandwidth", i, "negative bandwidth"))
        if decision.compute[i] < 0:
            out.append(Violation("compute", i, "negative compute"))
    for s, cap in enumerate(servers):
        on = valid & (decision.assignment == s)
        used_b = float(decision.bandwidth[on].sum())
        used_c = float(decision.compute[on].sum())
        if used_b > cap.bandwidth * (1 + rtol) + 1e-12:
            out.append(Violation("bandwidth", s, f"bandwidth {used_b:.6g} Hz exceeds {cap.bandwidth:.6g} Hz"))
        if used_c > cap.compute * (1 + rtol) + 1e-12:
            out.append(Violation("compute", s, f"compute {used_c:.6g} FLOPS exceeds {cap.compute:.6g} FLOPS"))
    for i, cfg in enumerate(decision.configs):
        if cfg.policy is Policy.FCFS and not decision.lam[i] < decision.mu[i]:
            out.append(Violation("stability", i, f"FCFS with lambda={decision.lam[i]:.6g} >= mu={decision.mu[i]:.6g}"))
    return out
