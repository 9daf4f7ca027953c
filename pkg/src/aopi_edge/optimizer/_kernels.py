"""Compiled inner loops: closed forms, KKT resource allocation, config argmin, BCD.

Status codes returned by the kernels: 0 ok, 1 infeasible bandwidth, 2 infeasible compute.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

OK, INFEASIBLE_BANDWIDTH, INFEASIBLE_COMPUTE = 0, 1, 2
FCFS, LCFSP = 0, 1

_INNER_ITERS = 200
_DUAL_ITERS = 400
_REFINE_ITERS = 3
_SCREEN_ITERS = 8


@njit(cache=True)
def aopi_scalar(lam, mu, p, policy):
    if lam <= 0.0 or mu <= 0.0 or p <= 0.0:
        return math.inf
    if policy == LCFSP:
        return (1.0 + 1.0 / p) / lam + 1.0 / (p * mu)
    if mu - lam < 1e-12 * mu:
        return math.inf
    return ((1.0 + 1.0 / p) / lam + 1.0 / mu
            + (2.0 * lam ** 3 + lam * mu ** 2 - mu * lam ** 2) / (mu ** 4 - mu ** 2 * lam ** 2))


@njit(cache=True)
def _dfdlam(lam, mu, p):
    return (-(1.0 + 1.0 / p) / lam ** 2 - 2.0 / mu ** 2 + 2.0 / (lam + mu) ** 2
            + 1.0 / (mu - lam) ** 2)


@njit(cache=True)
def _dfdmu(lam, mu, p):
    return -2.0 / mu ** 2 + 4.0 * lam / mu ** 3 + 2.0 / (lam + mu) ** 2 - 1.0 / (mu - lam) ** 2


# ---------------------------------------------------------------- bandwidth


@njit(cache=True)
def _d2fdlam2(lam, mu, p):
    return 2.0 * (1.0 + 1.0 / p) / lam ** 3 - 4.0 / (lam + mu) ** 3 + 2.0 / (mu - lam) ** 3


@njit(cache=True)
def _d2fdmu2(lam, mu, p):
    return 4.0 / mu ** 3 - 12.0 * lam / mu ** 4 - 4.0 / (lam + mu) ** 3 + 2.0 / (mu - lam) ** 3


@njit(cache=True)
def _newton_root(g_kind, lam_or_mu, p, target, lo, hi):
    """Root of an increasing derivative on [lo, hi]; Newton steps, bisection when they leave the bracket.

    g_kind 0 solves dA/dlam(x, mu) = target, 1 solves dA/dmu(lam, x) = target.
    """
    x = 0.5 * (lo + hi)
    for _ in range(_INNER_ITERS):
        if g_kind == 0:
            g = _dfdlam(x, lam_or_mu, p) - target
            dg = _d2fdlam2(x, lam_or_mu, p)
        else:
            g = _dfdmu(lam_or_mu, x, p) - target
            dg = _d2fdmu2(lam_or_mu, x, p)
        if g < 0.0:
            lo = x
        else:
            hi = x
        step_ok = dg > 0.0
        nx = x - g / dg if step_ok else 0.5 * (lo + hi)
        if not (lo < nx < hi):
            nx = 0.5 * (lo + hi)
        if abs(nx - x) <= 1e-15 * abs(x) or hi - lo <= 1e-15 * hi:
            return nx
        x = nx
    return x


@njit(cache=True)
def _band_one(nu, s, p, mu, pol, eps):
    """Minimiser of A(s*b) + nu*b over the camera's feasible interval."""
    if pol == LCFSP:
        return math.sqrt((1.0 + 1.0 / p) / (s * nu))
    cap = (1.0 - eps) * mu
    target = -nu / s
    if _dfdlam(cap, mu, p) <= target:
        return cap / s
    return _newton_root(0, mu, p, target, 0.0, cap) / s


@njit(cache=True)
def _band_total(nu, s, p, mu, pol, eps, out):
    tot = 0.0
    for i in range(s.shape[0]):
        out[i] = _band_one(nu, s[i], p[i], mu[i], pol[i], eps)
        tot += out[i]
    return tot


@njit(cache=True)
def _total(kind, nu, a, p, other, pol, eps, out):
    if kind == 0:
        return _band_total(nu, a, p, other, pol, eps, out)
    return _comp_total(nu, a, p, other, pol, eps, out)


@njit(cache=True)
def _dual(kind, a, p, other, pol, budget, eps, out):
    """Price nu with total(nu) <= budget, as close to saturation as float allows.

    total is nonincreasing in nu. Illinois false position on log(nu),
    stopping once the feasible end uses all but a 1e-13 share of the budget.
    """
    # start from the all-LCFSP price, where sum_i sqrt(k_i / nu) = budget
    root_sum = 0.0
    for i in range(a.shape[0]):
        k = (1.0 + 1.0 / p[i]) / a[i] if kind == 0 else 1.0 / (p[i] * a[i])
        root_sum += math.sqrt(k)
    hi = (root_sum / budget) ** 2
    if not (hi > 0.0 and hi < math.inf):
        hi = 1.0
    while _total(kind, hi, a, p, other, pol, eps, out) > budget:
        hi *= 4.0
    lo = hi
    while _total(kind, lo, a, p, other, pol, eps, out) < budget and lo > 1e-300:
        lo *= 0.25
    x_lo, x_hi = math.log(lo), math.log(hi)
    f_lo = _total(kind, lo, a, p, other, pol, eps, out) - budget
    f_hi = _total(kind, hi, a, p, other, pol, eps, out) - budget
    side = 0
    for _ in range(_DUAL_ITERS):
        if f_hi >= -1e-13 * budget or x_hi - x_lo <= 1e-15 * max(1.0, abs(x_hi)):
            break
        x = x_hi - f_hi * (x_hi - x_lo) / (f_hi - f_lo) if f_lo > f_hi else 0.5 * (x_lo + x_hi)
        if not (x_lo < x < x_hi):
            x = 0.5 * (x_lo + x_hi)
        f = _total(kind, math.exp(x), a, p, other, pol, eps, out) - budget
        if f > 0.0:
            x_lo, f_lo = x, f
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            x_hi, f_hi = x, f
            if side == 1:
                f_lo *= 0.5
            side = 1
    nu = math.exp(x_hi)
    # exp(log(nu)) may land a hair on the infeasible side
    while _total(kind, nu, a, p, other, pol, eps, out) > budget:
        nu *= 1.0 + 1e-15
    return nu


@njit(cache=True)
def alloc_bandwidth(s, p, mu, pol, budget, eps):
    """KKT allocation of ``budget`` Hz; returns (b, nu, status).

    s[i] is frames/s per Hz, mu[i] the fixed service rate. FCFS entries are
    capped at s*b <= (1 - eps) * mu.
    """
    n = s.shape[0]
    out = np.zeros(n)
    if n == 0:
        return out, 0.0, OK
    if budget <= 0.0:
        return out, math.inf, INFEASIBLE_BANDWIDTH
    # with every camera FCFS the unconstrained optimum may leave bandwidth idle
    all_fcfs = True
    for i in range(n):
        if pol[i] != FCFS:
            all_fcfs = False
    if all_fcfs and _band_total(0.0, s, p, mu, pol, eps, out) <= budget:
        return out, 0.0, OK
    hi = _dual(0, s, p, mu, pol, budget, eps, out)
    return out, hi, OK


# ---------------------------------------------------------------- compute


@njit(cache=True)
def _comp_floor(t, lam, pol, eps):
    if pol == FCFS:
        return lam / ((1.0 - eps) * t)
    return 0.0


@njit(cache=True)
def _comp_one(nu, t, p, lam, pol, eps):
    if pol == LCFSP:
        return math.sqrt(1.0 / (p * t * nu))
    mu_lo = lam / (1.0 - eps)
    target = -nu / t
    if _dfdmu(lam, mu_lo, p) >= target:
        return mu_lo / t
    lo, hi = mu_lo, 2.0 * mu_lo
    while _dfdmu(lam, hi, p) < target:
        lo = hi
        hi *= 2.0
    return _newton_root(1, lam, p, target, lo, hi) / t


@njit(cache=True)
def _comp_total(nu, t, p, lam, pol, eps, out):
    tot = 0.0
    for i in range(t.shape[0]):
        out[i] = _comp_one(nu, t[i], p[i], lam[i], pol[i], eps)
        tot += out[i]
    return tot


@njit(cache=True)
def alloc_compute(t, p, lam, pol, budget, eps):
    """KKT allocation of ``budget`` FLOPS; t[i] = 1/xi is frames/s per FLOPS."""
    n = t.shape[0]
    out = np.zeros(n)
    if n == 0:
        return out, 0.0, OK
    floor = 0.0
    for i in range(n):
        out[i] = _comp_floor(t[i], lam[i], pol[i], eps)
        floor += out[i]
    if budget <= 0.0 or floor > budget:
        return out, math.inf, INFEASIBLE_COMPUTE
    hi = _dual(1, t, p, lam, pol, budget, eps, out)
    _comp_total(hi, t, p, lam, pol, eps, out)
    return out, hi, OK


# ---------------------------------------------------------------- configs


@njit(cache=True)
def best_configs(b, c, lam_per_hz, xi, P, allowed, w_age, w_acc, eps, r_out, pol_out, m_out,
                 policy_mask):
    """Per-camera argmin of w_age*A - w_acc*p over resolution x policy x model.

    Enumeration order (resolution, policy, model) breaks ties towards the
    lowest index. ``policy_mask[k]`` enables policy k.
    """
    n_r = xi.shape[0]
    n_m = xi.shape[1]
    for n in range(b.shape[0]):
        best = math.inf
        br, bp, bm = -1, LCFSP, -1
        for r in range(n_r):
            lam = b[n] * lam_per_hz[n, r]
            for pol in range(2):
                if not policy_mask[pol]:
                    continue
                for m in range(n_m):
                    if not allowed[n, m]:
                        continue
                    mu = c[n] / xi[r, m]
                    if pol == FCFS and lam > (1.0 - eps) * mu:
                        continue
                    p = P[n, r, m]
                    a = aopi_scalar(lam, mu, p, pol)
                    if not math.isfinite(a):
                        continue
                    v = w_age * a - w_acc * p
                    if v < best:
                        best = v
                        br, bp, bm = r, pol, m
        if br >= 0:
            r_out[n], pol_out[n], m_out[n] = br, bp, bm


@njit(cache=True)
def objective(r, pol, m, b, c, lam_per_hz, xi, P, w_age, w_acc):
    tot = 0.0
    for n in range(r.shape[0]):
        lam = b[n] * lam_per_hz[n, r[n]]
        mu = c[n] / xi[r[n], m[n]]
        p = P[n, r[n], m[n]]
        tot += w_age * aopi_scalar(lam, mu, p, pol[n]) - w_acc * p
    return tot


@njit(cache=True)
def _gather(r, pol, m, b, c, lam_per_hz, xi, P):
    n = r.shape[0]
    s = np.empty(n)
    t = np.empty(n)
    p = np.empty(n)
    lam = np.empty(n)
    mu = np.empty(n)
    for i in range(n):
        s[i] = lam_per_hz[i, r[i]]
        t[i] = 1.0 / xi[r[i], m[i]]
        p[i] = P[i, r[i], m[i]]
        lam[i] = b[i] * s[i]
        mu[i] = c[i] * t[i]
    return s, t, p, lam, mu


@njit(cache=True)
def bcd(lam_per_hz, xi, P, allowed, B, C, w_age, w_acc, eps, max_iter, rel_tol,
        r, pol, m, b, c, trace, policy_mask, config_mask):
    """Block coordinate descent in place on (r, pol, m, b, c).

    ``trace[k]`` receives the objective after iteration k (trace[0] is the
    starting point). A block update is kept only if it does not raise the
    objective. ``config_mask`` disables the configuration block when false.
    Returns (iterations, status).
    """
    n = r.shape[0]
    if n == 0:
        trace[0] = 0.0
        return 0, OK
    if B <= 0.0:
        return 0, INFEASIBLE_BANDWIDTH
    if C <= 0.0:
        return 0, INFEASIBLE_COMPUTE
    obj = objective(r, pol, m, b, c, lam_per_hz, xi, P, w_age, w_acc)
    trace[0] = obj
    r2 = r.copy()
    pol2 = pol.copy()
    m2 = m.copy()
    it = 0
    for it in range(1, max_iter + 1):
        prev = obj
        if config_mask:
            best_configs(b, c, lam_per_hz, xi, P, allowed, w_age, w_acc, eps, r2, pol2, m2,
                         policy_mask)
            cand = objective(r2, pol2, m2, b, c, lam_per_hz, xi, P, w_age, w_acc)
            if cand <= obj:
                obj = cand
                r[:] = r2
                pol[:] = pol2
                m[:] = m2
            else:
                r2[:] = r
                pol2[:] = pol
                m2[:] = m
        s, t, p, lam, mu = _gather(r, pol, m, b, c, lam_per_hz, xi, P)
        nb, _, st = alloc_bandwidth(s, p, mu, pol, B, eps)
        if st != OK:
            return it, st
        cand = objective(r, pol, m, nb, c, lam_per_hz, xi, P, w_age, w_acc)
        if cand <= obj:
            obj = cand
            b[:] = nb
        s, t, p, lam, mu = _gather(r, pol, m, b, c, lam_per_hz, xi, P)
        nc, _, st = alloc_compute(t, p, lam, pol, C, eps)
        if st != OK:
            return it, st
        cand = objective(r, pol, m, b, nc, lam_per_hz, xi, P, w_age, w_acc)
        if cand <= obj:
            obj = cand
            c[:] = nc
        trace[it] = obj
        if prev - obj < rel_tol * abs(prev):
            break
    return it, OK


@njit(cache=True)
def _resources(lam_per_hz, xi, P, B, C, w_age, w_acc, eps, max_iter, rel_tol, r, pol, m, b, c):
    """Resource blocks only; returns (objective, status)."""
    dummy_allowed = np.ones((1, 1), dtype=np.bool_)
    dummy_mask = np.ones(2, dtype=np.bool_)
    trace = np.empty(max_iter + 1)
    it, st = bcd(lam_per_hz, xi, P, dummy_allowed, B, C, w_age, w_acc, eps, max_iter, rel_tol,
                 r, pol, m, b, c, trace, dummy_mask, False)
    return trace[it], st


@njit(cache=True)
def _priced(s, t, p, pol, nu_b, nu_c, w_ratio, eps, b, c):
    """min over (b, c) of A + nu_b*b + nu_c*c - w_ratio*p for one camera, by alternation."""
    for _ in range(_SCREEN_ITERS):
        mu = c * t
        if pol == FCFS and mu <= 0.0:
            c = 1.0 / t
            mu = 1.0
        b = _band_one(nu_b, s, p, mu, pol, eps)
        c = _comp_one(nu_c, t, p, b * s, pol, eps)
        if pol == LCFSP:
            break
    return aopi_scalar(b * s, c * t, p, pol) + nu_b * b + nu_c * c - w_ratio * p


@njit(cache=True)
def _prices(r, pol, m, b, c, lam_per_hz, xi, P, B, C, eps):
    s, t, p, lam, mu = _gather(r, pol, m, b, c, lam_per_hz, xi, P)
    _, nu_b, st_b = alloc_bandwidth(s, p, mu, pol, B, eps)
    _, nu_c, st_c = alloc_compute(t, p, lam, pol, C, eps)
    return nu_b, nu_c, st_b == OK and st_c == OK


@njit(cache=True)
def refine(lam_per_hz, xi, P, allowed, B, C, w_age, w_acc, eps, max_iter, rel_tol,
           r, pol, m, b, c, policy_mask, out):
    """One sweep of single-camera configuration swaps with the resources re-solved.

    Candidates for camera n: the other policy, and the neighbouring
    resolutions under either policy. A candidate is screened at the current
    resource prices and, if it looks cheaper there, gets a short resource
    descent; a swap is kept only when it strictly lowers the objective.
    Improved objectives are written to ``out``; returns how many were written.
    """
    n_cam = r.shape[0]
    n_res = xi.shape[0]
    obj = objective(r, pol, m, b, c, lam_per_hz, xi, P, w_age, w_acc)
    written = 0
    if w_age <= 0.0:
        return 0
    w_ratio = w_acc / w_age
    nu_b, nu_c, ok = _prices(r, pol, m, b, c, lam_per_hz, xi, P, B, C, eps)
    if not ok:
        return 0
    for n in range(n_cam):
        r0, m0 = r[n], m[n]
        t0 = 1.0 / xi[r0, m0]
        here = _priced(lam_per_hz[n, r0], t0, P[n, r0, m0], pol[n], nu_b, nu_c, w_ratio, eps, b[n], c[n])
        p0 = pol[n]
        moved = False
        for ri in range(r0 - 1, r0 + 2):
            for q in range(2):
                if moved or not policy_mask[q] or ri < 0 or ri >= n_res:
                    continue
                if ri == r0 and q == p0:
                    continue
                there = _priced(lam_per_hz[n, ri], 1.0 / xi[ri, m0], P[n, ri, m0], q, nu_b, nu_c,
                                w_ratio, eps, b[n], c[n])
                if not there < here:
                    continue
                r2, pol2, m2, b2, c2 = r.copy(), pol.copy(), m.copy(), b.copy(), c.copy()
                r2[n], pol2[n] = ri, q
                cand, st = _resources(lam_per_hz, xi, P, B, C, w_age, w_acc, eps,
                                      min(max_iter, _REFINE_ITERS), rel_tol, r2, pol2, m2, b2, c2)
                if st == OK and cand < obj - 1e-12 * abs(obj):
                    obj = cand
                    r[:] = r2
                    pol[:] = pol2
                    m[:] = m2
                    b[:] = b2
                    c[:] = c2
                    if written < out.shape[0]:
                        out[written] = obj
                        written += 1
                    moved = True
                    nu_b, nu_c, ok = _prices(r, pol, m, b, c, lam_per_hz, xi, P, B, C, eps)
                    if not ok:
                        return written
    return written
