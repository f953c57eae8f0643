"""Compiled inner loops.

All kernels share one integration scheme: Euler-Maruyama on the regular
grid k*dt, with the grid split at every candidate time of a dominating
Poisson process of rate ``lam_bar``. At a candidate the switch is accepted
with probability lambda_z(x)/lam_bar, x being the integration state at that
instant. Random numbers are consumed in a fixed order (first candidate gap,
then per substep d normals, then at a candidate one uniform and the next
gap), so a kernel is a deterministic function of its generator state.

Every drift family is radial, b(x) = f(|x|^2) x, so the drift reduces to a
scalar factor. The Euler substep is written out in each kernel: calling a
helper with array arguments once per step costs several times the step.

Status codes: 0 ok, 1 non-finite state.
"""

import math

import numpy as np
from numba import njit

OK, BLOWUP = 0, 1

_JIT = dict(nogil=True, cache=True)


@njit(**_JIT)
def _sqnorm(x):
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * x[i]
    return s


@njit(**_JIT)
def drift_factor(kind, rho, sign, cap, r2):
    if kind == 0.0:
        return 0.0
    if kind == 1.0:
        return sign * rho / max(r2, cap * cap)
    return sign * rho / max(math.sqrt(r2), cap)


@njit(**_JIT)
def rate_value(kind, lo, hi, center, slope, r2):
    if kind == 0.0:
        return lo
    s = slope * (math.sqrt(r2) - center)
    if s >= 0:
        p = 1.0 / (1.0 + math.exp(-s))
    else:
        e = math.exp(s)
        p = e / (1.0 + e)
    return lo + (hi - lo) * p


@njit(**_JIT)
def accept(lam, lam_bar, u):
    return u < lam / lam_bar


@njit(**_JIT)
def _grow(a, n):
    b = np.empty((2 * a.shape[0],) + a.shape[1:], dtype=a.dtype)
    b[:n] = a[:n]
    return b


@njit(**_JIT)
def path_kernel(x0, z0, drift, rate, sigma, lam_bar, dt, horizon, stride, rng):
    """Full trajectory to ``horizon``.

    Returns (times, xs, zs, ev_t, ev_x, ev_z, status, t_last). Grid points
    with index k % stride == 0 and the final point are recorded.
    """
    d = x0.shape[0]
    x = x0.copy()
    z = z0
    n_grid = int(math.ceil(horizon / dt - 1e-9))
    n_rec_max = n_grid // stride + 2
    times = np.empty(n_rec_max)
    xs = np.empty((n_rec_max, d))
    zs = np.empty(n_rec_max, dtype=np.int8)
    times[0] = 0.0
    xs[0] = x
    zs[0] = z
    n_rec = 1
    cap_ev = int(lam_bar * horizon * 1.5) + 16
    ev_t = np.empty(cap_ev)
    ev_x = np.empty((cap_ev, d))
    ev_z = np.empty(cap_ev, dtype=np.int8)
    n_ev = 0

    r2 = _sqnorm(x)
    t = 0.0
    k = 0
    t_grid = min(dt, horizon)
    t_cand = rng.standard_exponential() / lam_bar
    status = OK
    while True:
        t_stop = min(t_grid, t_cand)
        h = t_stop - t
        f = drift_factor(drift[z, 0], drift[z, 1], drift[z, 2], drift[z, 3], r2)
        sd = sigma[z] * math.sqrt(h)
        r2 = 0.0
        for i in range(d):
            x[i] += f * x[i] * h + sd * rng.standard_normal()
            r2 += x[i] * x[i]
        if not math.isfinite(r2):
            status = BLOWUP
            break
        t = t_stop
        if t == t_cand:
            lam = rate_value(rate[z, 0], rate[z, 1], rate[z, 2], rate[z, 3], rate[z, 4], r2)
            if accept(lam, lam_bar, rng.random()):
                z = 1 - z
                if n_ev == ev_t.shape[0]:
                    ev_t = _grow(ev_t, n_ev)
                    ev_x = _grow(ev_x, n_ev)
                    ev_z = _grow(ev_z, n_ev)
                ev_t[n_ev] = t
                ev_x[n_ev] = x
                ev_z[n_ev] = z
                n_ev += 1
            t_cand = t + rng.standard_exponential() / lam_bar
        if t == t_grid:
            k += 1
            last = k >= n_grid
            if k % stride == 0 or last:
                times[n_rec] = t
                xs[n_rec] = x
                zs[n_rec] = z
                n_rec += 1
            if last:
                break
            t_grid = min((k + 1) * dt, horizon)
    return (times[:n_rec], xs[:n_rec], zs[:n_rec], ev_t[:n_ev], ev_x[:n_ev], ev_z[:n_ev],
            status, t)


@njit(**_JIT)
def hit_kernel(x0, z0, m1, drift, rate, sigma, lam_bar, dt, max_time, stop_at_m1, rng):
    """Run until the embedded hitting time (or tau_M1 only, if ``stop_at_m1``).

    tau_M1 is detected at integration nodes; the embedded time is the first
    accepted switch with |X| <= m1, or 0 when z0 == 0 and |x0| <= m1.
    Censored times are NaN. Returns
    (tau_m1, tau_emb, n_events, t_end, min_sq, status).
    """
    d = x0.shape[0]
    x = x0.copy()
    z = z0
    m1sq = m1 * m1
    tau_m1 = np.nan
    tau_emb = np.nan
    r2 = _sqnorm(x)
    min_sq = r2
    if r2 <= m1sq:
        tau_m1 = 0.0
        if z0 == 0:
            tau_emb = 0.0
            return tau_m1, tau_emb, 0, 0.0, min_sq, OK
        if stop_at_m1:
            return tau_m1, tau_emb, 0, 0.0, min_sq, OK
    n_ev = 0
    t = 0.0
    k = 0
    t_grid = min(dt, max_time)
    t_cand = rng.standard_exponential() / lam_bar
    while True:
        t_stop = min(t_grid, t_cand)
        h = t_stop - t
        f = drift_factor(drift[z, 0], drift[z, 1], drift[z, 2], drift[z, 3], r2)
        sd = sigma[z] * math.sqrt(h)
        r2 = 0.0
        for i in range(d):
            x[i] += f * x[i] * h + sd * rng.standard_normal()
            r2 += x[i] * x[i]
        if not math.isfinite(r2):
            return tau_m1, tau_emb, n_ev, t, min_sq, BLOWUP
        t = t_stop
        if r2 < min_sq:
            min_sq = r2
        if r2 <= m1sq and tau_m1 != tau_m1:
            tau_m1 = t
            if stop_at_m1:
                return tau_m1, tau_emb, n_ev, t, min_sq, OK
        if t == t_cand:
            lam = rate_value(rate[z, 0], rate[z, 1], rate[z, 2], rate[z, 3], rate[z, 4], r2)
            if accept(lam, lam_bar, rng.random()):
                z = 1 - z
                n_ev += 1
                if r2 <= m1sq:
                    tau_emb = t
                    return tau_m1, tau_emb, n_ev, t, min_sq, OK
            t_cand = t + rng.standard_exponential() / lam_bar
        if t == t_grid:
            k += 1
            if t >= max_time:
                return tau_m1, tau_emb, n_ev, t, min_sq, OK
            t_grid = min((k + 1) * dt, max_time)


@njit(**_JIT)
def first_switch_kernel(x0, z0, m, drift, rate, sigma, lam_bar, dt, max_time, rng):
    """Run to the first accepted switch.

    Also integrates 1(min_{s<=t} |X_s| <= m) dt with the left-point rule on
    the integration nodes. Returns (t_switch, sq_norm_at_switch, occupation,
    status); t_switch is NaN if ``max_time`` came first.
    """
    d = x0.shape[0]
    x = x0.copy()
    z = z0
    msq = m * m
    r2 = _sqnorm(x)
    inside = r2 <= msq
    occ = 0.0
    t = 0.0
    k = 0
    t_grid = min(dt, max_time)
    t_cand = rng.standard_exponential() / lam_bar
    while True:
        t_stop = min(t_grid, t_cand)
        h = t_stop - t
        f = drift_factor(drift[z, 0], drift[z, 1], drift[z, 2], drift[z, 3], r2)
        sd = sigma[z] * math.sqrt(h)
        r2 = 0.0
        for i in range(d):
            x[i] += f * x[i] * h + sd * rng.standard_normal()
            r2 += x[i] * x[i]
        if not math.isfinite(r2):
            return np.nan, np.nan, occ, BLOWUP
        if inside:
            occ += h
        t = t_stop
        if r2 <= msq:
            inside = True
        if t == t_cand:
            lam = rate_value(rate[z, 0], rate[z, 1], rate[z, 2], rate[z, 3], rate[z, 4], r2)
            if accept(lam, lam_bar, rng.random()):
                return t, r2, occ, OK
            t_cand = t + rng.standard_exponential() / lam_bar
        if t == t_grid:
            k += 1
            if t >= max_time:
                return np.nan, r2, occ, OK
            t_grid = min((k + 1) * dt, max_time)


@njit(**_JIT)
def histogram_kernel(x0, z0, drift, rate, sigma, lam_bar, dt, burn_in, horizon,
                     lo, hi, nbins, radial, by_regime, rng):
    """Time-weighted occupation of bins over [burn_in, horizon].

    Bins are half-open, uniform on [lo, hi): per axis (flattened row-major)
    or on |x| when ``radial``. Each substep adds its length, clipped to the
    window, to the bin of the state and regime at its left end; the last
    column collects out-of-range time. Returns (weights, n_steps, status,
    t_last).
    """
    d = x0.shape[0]
    nflat = nbins if radial else nbins**d
    weights = np.zeros((2 if by_regime else 1, nflat + 1))
    width = (hi - lo) / nbins
    x = x0.copy()
    z = z0
    r2 = _sqnorm(x)
    n_steps = 0
    t = 0.0
    k = 0
    t_grid = min(dt, horizon)
    t_cand = rng.standard_exponential() / lam_bar
    while True:
        t_stop = min(t_grid, t_cand)
        h = t_stop - t
        if t_stop > burn_in:
            idx = 0
            if radial:
                r = math.sqrt(r2)
                if r < lo or r >= hi:
                    idx = nflat
                else:
                    idx = min(int((r - lo) / width), nbins - 1)
            else:
                for i in range(d):
                    if x[i] < lo or x[i] >= hi:
                        idx = nflat
                        break
                    idx = idx * nbins + min(int((x[i] - lo) / width), nbins - 1)
            weights[z if by_regime else 0, idx] += t_stop - max(t, burn_in)
            n_steps += 1
        f = drift_factor(drift[z, 0], drift[z, 1], drift[z, 2], drift[z, 3], r2)
        sd = sigma[z] * math.sqrt(h)
        r2 = 0.0
        for i in range(d):
            x[i] += f * x[i] * h + sd * rng.standard_normal()
            r2 += x[i] * x[i]
        if not math.isfinite(r2):
            return weights, n_steps, BLOWUP, t
        t = t_stop
        if t == t_cand:
            lam = rate_value(rate[z, 0], rate[z, 1], rate[z, 2], rate[z, 3], rate[z, 4], r2)
            if accept(lam, lam_bar, rng.random()):
                z = 1 - z
            t_cand = t + rng.standard_exponential() / lam_bar
        if t == t_grid:
            k += 1
            if t >= horizon:
                return weights, n_steps, OK, t
            t_grid = min((k + 1) * dt, horizon)
