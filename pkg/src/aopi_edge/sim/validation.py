"""Simulation-versus-closed-form sweeps."""
from __future__ import annotations

from dataclasses import dataclass

from ..analytics import aopi
from ..model import AopiInputs, Policy
from .core import SimConfig, simulate_single

DEFAULT_FCFS_LOADS = (0.2, 0.5, 0.8)
DEFAULT_LCFSP_LOADS = (0.2, 0.5, 0.8, 1.0, 2.0)
DEFAULT_ACCURACIES = (0.4, 0.7, 1.0)


@dataclass(frozen=True)
class ValidationRow:
    policy: Policy
    rho: float
    p: float
    mu: float
    closed_form: float
    simulated: float
    ci95: float
    frames: int

    @property
    def rel_error(self) -> float:
        return abs(self.simulated - self.closed_form) / self.closed_form


def validation_grid(mu: float = 4.0, frames: int = 2_000_000, seed: int = 0,
                    fcfs_loads=DEFAULT_FCFS_LOADS, lcfsp_loads=DEFAULT_LCFSP_LOADS,
                    accuracies=DEFAULT_ACCURACIES) -> list[ValidationRow]:
    rows = []
    cases = [(Policy.FCFS, r) for r in fcfs_loads] + [(Policy.LCFSP, r) for r in lcfsp_loads]
    for k, (policy, rho) in enumerate(cases):
        for j, p in enumerate(accuracies):
            inputs = AopiInputs(rho * mu, mu, p, policy)
            res = simulate_single(SimConfig(inputs, frames, 0.1, seed, (k, j)))
            rows.append(ValidationRow(policy, rho, p, mu, aopi(inputs), res.mean_aopi,
                                      res.aopi_ci95, frames))
    return rows
