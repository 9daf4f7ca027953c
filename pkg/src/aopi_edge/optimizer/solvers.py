"""Resource allocation for one server with configurations held fixed.

Both problems minimise the summed AoPI of the server's cameras under one
budget. The objective is separable and convex on the feasible set, so the
KKT system reduces to a scalar search on the budget multiplier ``nu``:
every camera sets its marginal AoPI reduction equal to ``nu`` or sits at a
bound.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..analytics import aopi_array, dfcfs_dlam, dfcfs_dmu, dlcfsp_dlam, dlcfsp_dmu
from ..errors import InfeasibleError
from ..model import EPSILON_STABILITY, Policy
from . import _kernels as K

_AT_BOUND = 1e-10


@dataclass(frozen=True)
class Allocation:
    amounts: np.ndarray
    multiplier: float
    residual: float


def _policies(policies) -> np.ndarray:
    return np.array([int(Policy.parse(x)) for x in policies], dtype=np.int64)


def _arr(x):
    return np.ascontiguousarray(np.asarray(x, dtype=float))


def kkt_residual(x, marginal, lower, upper, budget, nu, values) -> float:
    """Dimensionless KKT violation of a separable budget allocation.

    ``marginal[i]`` is the objective decrease per unit of resource at x[i]
    and ``values[i]`` the camera's objective term. Stationarity gaps are
    weighted by x[i] and divided by the summed objective, which makes the
    measure independent of the resource units.
    """
    x = np.asarray(x, float)
    if x.size == 0:
        return 0.0
    marginal = np.asarray(marginal, float)
    scale = float(np.sum(values)) or 1.0
    at_hi = x >= upper * (1 - _AT_BOUND)
    at_lo = x <= lower * (1 + _AT_BOUND)
    gap = (marginal - nu) * x / scale
    viol = np.where(at_hi, np.maximum(-gap, 0.0),
                    np.where(at_lo, np.maximum(gap, 0.0), np.abs(gap)))
    used = float(x.sum())
    slack = abs(used - budget) / budget if nu > 0 else max(used - budget, 0.0) / budget
    return float(max(viol.max(), slack))


def allocate_bandwidth(rate_per_hz, accuracy, mu, policies, budget,
                       epsilon: float = EPSILON_STABILITY) -> Allocation:
    """Split ``budget`` Hz to minimise the summed AoPI at fixed service rates.

    FCFS cameras are capped at ``lambda <= (1 - epsilon) * mu``.
    """
    s, p, mu = _arr(rate_per_hz), _arr(accuracy), _arr(mu)
    pol = _policies(policies)
    b, nu, status = K.alloc_bandwidth(s, p, mu, pol, float(budget), float(epsilon))
    if status != K.OK:
        raise InfeasibleError(f"no bandwidth to share among {len(s)} camera(s)")
    lam = b * s
    fcfs = pol == K.FCFS
    with np.errstate(divide="ignore", invalid="ignore"):
        marginal = -s * np.where(fcfs, dfcfs_dlam(lam, mu, p), dlcfsp_dlam(lam, mu, p))
    upper = np.where(fcfs, (1 - epsilon) * mu / s, np.inf)
    values = aopi_array(lam, mu, p, fcfs)
    res = kkt_residual(b, marginal, np.zeros_like(b), upper, float(budget), nu, values)
    return Allocation(b, float(nu), res)


def allocate_compute(rate_per_flops, accuracy, lam, policies, budget,
                     epsilon: float = EPSILON_STABILITY) -> Allocation:
    """Split ``budget`` FLOPS; FCFS cameras need ``mu >= lambda / (1 - epsilon)``."""
    t, p, lam = _arr(rate_per_flops), _arr(accuracy), _arr(lam)
    pol = _policies(policies)
    c, nu, status = K.alloc_compute(t, p, lam, pol, float(budget), float(epsilon))
    if status != K.OK:
        need = float(np.sum(np.where(pol == K.FCFS, lam / ((1 - epsilon) * t), 0.0)))
        raise InfeasibleError(f"FCFS stability needs {need:.6g} FLOPS but only {budget:.6g} available")
    mu = c * t
    fcfs = pol == K.FCFS
    with np.errstate(divide="ignore", invalid="ignore"):
        marginal = -t * np.where(fcfs, dfcfs_dmu(lam, mu, p), dlcfsp_dmu(lam, mu, p))
    lower = np.where(fcfs, lam / ((1 - epsilon) * t), 0.0)
    values = aopi_array(lam, mu, p, fcfs)
    res = kkt_residual(c, marginal, lower, np.full_like(c, np.inf), float(budget), nu, values)
    return Allocation(c, float(nu), res)
