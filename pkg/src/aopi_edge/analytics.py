"""Closed-form average AoPI under FCFS and LCFSP service, and its inversions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAccuracyError, InstabilityError, ParameterError
from .model import AopiInputs, Policy

# Relative distance to the FCFS pole below which evaluation is refused.
POLE_GUARD = 1e-12
ROOT_TOL = 1e-9
GOLDEN_RTOL = 1e-8

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PolicyThreshold:
    rho: float
    p_star: float


@dataclass(frozen=True)
class PolicyChoice:
    policy: Policy
    aopi_fcfs: float
    aopi_lcfsp: float

    @property
    def aopi(self) -> float:
        return self.aopi_fcfs if self.policy is Policy.FCFS else self.aopi_lcfsp


def _check_p(p):
    if p == 0:
        raise DegenerateAccuracyError("accuracy p = 0 gives unbounded AoPI")
    if not 0 < p <= 1:
        raise ParameterError(f"accuracy must lie in (0, 1], got {p}")


def _fcfs(lam, mu, p):
    return ((1 + 1 / p) / lam + 1 / mu
            + (2 * lam ** 3 + lam * mu ** 2 - mu * lam ** 2) / (mu ** 4 - mu ** 2 * lam ** 2))


def _lcfsp(lam, mu, p):
    return (1 + 1 / p) / lam + 1 / (p * mu)


def aopi_fcfs(inputs: AopiInputs) -> float:
    """Average AoPI of a zero-wait camera feeding an FCFS M/M/1 server."""
    lam, mu, p = inputs.lam, inputs.mu, inputs.accuracy
    _check_p(p)
    if lam >= mu or (mu - lam) < POLE_GUARD * mu:
        raise InstabilityError(f"FCFS unstable: lambda={lam} >= mu={mu}")
    return float(_fcfs(lam, mu, p))


def aopi_lcfsp(inputs: AopiInputs) -> float:
    _check_p(inputs.accuracy)
    return float(_lcfsp(inputs.lam, inputs.mu, inputs.accuracy))


def aopi(inputs: AopiInputs) -> float:
    if inputs.policy is Policy.FCFS:
        return aopi_fcfs(inputs)
    return aopi_lcfsp(inputs)


def policy_threshold(rho: float) -> PolicyThreshold:
    """Accuracy above which LCFSP is at least as fresh as FCFS at load ``rho``."""
    if not rho > 0:
        raise ParameterError("load must be positive")
    if rho >= 1:
        return PolicyThreshold(rho, 0.0)
    p_star = (1 - rho ** 2) / (2 * rho ** 3 - 2 * rho ** 2 + rho + 1)
    return PolicyThreshold(rho, min(max(p_star, 0.0), 1.0))


def best_policy(lam: float, mu: float, p: float) -> PolicyChoice:
    """Fresher of the two policies; ties go to LCFSP, FCFS is excluded when unstable."""
    a_l = aopi_lcfsp(AopiInputs(lam, mu, p, Policy.LCFSP))
    try:
        a_f = aopi_fcfs(AopiInputs(lam, mu, p, Policy.FCFS))
    except InstabilityError:
        a_f = math.inf
    policy = Policy.FCFS if a_f < a_l else Policy.LCFSP
    return PolicyChoice(policy, a_f, a_l)


# --------------------------------------------------------------------------
# Vectorised forms used by the optimizer; unstable FCFS entries become +inf.


def aopi_array(lam, mu, p, fcfs):
    lam, mu, p, fcfs = np.broadcast_arrays(np.asarray(lam, float), np.asarray(mu, float),
                                           np.asarray(p, float), np.asarray(fcfs, bool))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.where(fcfs, _fcfs(lam, mu, p), _lcfsp(lam, mu, p))
        bad = (lam <= 0) | (mu <= 0) | (p <= 0) | (fcfs & ((mu - lam) < POLE_GUARD * mu))
    out = np.where(bad, np.inf, out)
    return out


def dfcfs_dlam(lam, mu, p):
    """Partial derivative of the FCFS AoPI in lambda (partial-fraction form)."""
    return -(1 + 1 / p) / lam ** 2 - 2 / mu ** 2 + 2 / (lam + mu) ** 2 + 1 / (mu - lam) ** 2


def dfcfs_dmu(lam, mu, p):
    return -2 / mu ** 2 + 4 * lam / mu ** 3 + 2 / (lam + mu) ** 2 - 1 / (mu - lam) ** 2


def dlcfsp_dlam(lam, mu, p):
    return -(1 + 1 / p) / lam ** 2


def dlcfsp_dmu(lam, mu, p):
    return -1 / (p * mu ** 2)


# --------------------------------------------------------------------------
# Inversions: minimum rate that keeps the average AoPI under a target.


def _golden_min(f, lo, hi, rtol=GOLDEN_RTOL, max_iter=500):
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if (b - a) <= rtol * (abs(c) + abs(d)) / 2:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (a + b) / 2


def optimal_lambda_fcfs(mu: float, p: float) -> float:
    """Transmission rate minimising the FCFS AoPI for fixed mu and p."""
    if not mu > 0:
        raise ParameterError("mu must be positive")
    _check_p(p)
    # The optimum sits well inside (0, mu); the guards keep f finite.
    return _golden_min(lambda x: _fcfs(x, mu, p), mu * 1e-9, mu * (1 - 1e-9))


def _bisect_decreasing(f, target, lo, hi, tol=ROOT_TOL, max_iter=400):
    """Smallest x in (lo, hi] with f(x) <= target for decreasing f, f(hi) <= target.

    Returns x with f(x) in [target - tol, target]; if float resolution runs
    out first the feasible end of the bracket is returned.
    """
    for _ in range(max_iter):
        f_hi = f(hi)
        if target - f_hi <= tol:
            return hi
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi
        if f(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def min_mu_for_target(policy, target: float, lam: float, p: float) -> float | None:
    """Smallest computation rate keeping AoPI <= target; None when no mu suffices."""
    policy = Policy.parse(policy)
    if not target > 0:
        raise ParameterError("target must be positive")
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    _check_p(p)
    floor = (1 + 1 / p) / lam
    if floor >= target:
        return None
    if policy is Policy.LCFSP:
        return 1.0 / (p * (target - floor))
    f = lambda mu: _fcfs(lam, mu, p)
    lo = lam
    hi = 2.0 * lam
    while f(hi) > target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return None
    return _bisect_decreasing(f, target, lo, hi)


def min_lambda_for_target(policy, target: float, mu: float, p: float) -> float | None:
    """Smallest transmission rate keeping AoPI <= target; None when infeasible."""
    policy = Policy.parse(policy)
    if not target > 0:
        raise ParameterError("target must be positive")
    if not mu > 0:
        raise ParameterError("mu must be positive")
    _check_p(p)
    if policy is Policy.LCFSP:
        slack = target - 1 / (p * mu)
        if slack <= 0:
            return None
        return (1 + 1 / p) / slack
    lam_star = optimal_lambda_fcfs(mu, p)
    f = lambda lam: _fcfs(lam, mu, p)
    if f(lam_star) > target:
        return None
    lo = lam_star
    while f(lo) <= target:
        lo *= 0.5
        if lo < 1e-300:
            return None
    return _bisect_decreasing(f, target, lo, lam_star)
