"""Pure-Python simulation and enumeration kernels.

Reference implementation of the hot loops.  The compiled extension in
``_kernels.pyx`` mirrors this file line for line and the two must stay
bit-identical, so keep every floating-point expression in the same shape
in both.
"""
from __future__ import annotations

import math

import numpy as np

FAMILY_CONSTANT = 0
FAMILY_AFFINE = 1
FAMILY_QUADRATIC = 2
FAMILY_PWL = 3

POLICY_ALWAYS_ON = 0
POLICY_THRESHOLD = 1

EV_ARRIVAL = 0
EV_SERVICE_START = 1
EV_SERVICE_END = 2
EV_IDLE_RELEASE = 3

# coincident events are merged within this absolute time tolerance
MERGE_TOL = 1e-12

BACKEND = "python"


def _service_time(code, par, x):
    if code == FAMILY_CONSTANT:
        return par[0]
    if code == FAMILY_AFFINE:
        return par[0] * x + par[1]
    if code == FAMILY_QUADRATIC:
        dx = x - par[1]
        return par[2] + par[0] * dx * dx
    # piecewise-linear: par = [x0, y0, x1, y1, ...]
    npts = len(par) // 2
    lo = 0
    hi = npts - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if par[2 * mid] <= x:
            lo = mid
        else:
            hi = mid
    x0 = par[2 * lo]
    y0 = par[2 * lo + 1]
    x1 = par[2 * hi]
    y1 = par[2 * hi + 1]
    return y0 + (y1 - y0) * ((x - x0) / (x1 - x0))


def run_queue(code, par, tau, lam, policy, threshold, x0, n0, horizon, record_all):
    """Exact event-driven run of the gated single-server queue.

    Arrivals at k/lam for k >= 1; the head task is released at the first
    instant when the server is idle, the queue is nonempty and the gate is
    open.  Coincident events are processed in the order service end,
    arrival, release.  Stops after ``horizon`` completions, or earlier if
    the queue empties with no arrivals left (only possible for lam == 0).

    Returns (start_t, start_x, start_n, end_t, end_x,
             ev_t, ev_kind, ev_x, ev_n, max_queue, arrivals,
             final_t, final_x, final_n); the ev_* arrays are filled only
    when ``record_all``.
    """
    exp = math.exp
    log = math.log

    t = 0.0
    x = x0
    n = n0
    arrivals = 0
    completions = 0
    next_arr = 1.0 / lam if lam > 0.0 else math.inf
    max_q = n

    start_t = []
    start_x = []
    start_n = []
    end_t = []
    end_x = []
    ev_t = []
    ev_k = []
    ev_x = []
    ev_n = []

    while completions < horizon:
        if n == 0:
            if next_arr == math.inf:
                break
            if next_arr > t:
                x = x * exp(-(next_arr - t) / tau)
                t = next_arr
            arrivals += 1
            n += 1
            if n > max_q:
                max_q = n
            if record_all:
                ev_t.append(t)
                ev_k.append(EV_ARRIVAL)
                ev_x.append(x)
                ev_n.append(n)
            next_arr = (arrivals + 1) / lam
            continue

        # idle server with waiting work: the release decision
        if policy == POLICY_THRESHOLD and x > threshold:
            t_rel = t + tau * log(x / threshold)
            waited = True
        else:
            t_rel = t
            waited = False

        # arrivals that precede or coincide with the release
        while next_arr <= t_rel + MERGE_TOL:
            if next_arr > t:
                x = x * exp(-(next_arr - t) / tau)
                t = next_arr
            arrivals += 1
            n += 1
            if n > max_q:
                max_q = n
            if record_all:
                ev_t.append(t)
                ev_k.append(EV_ARRIVAL)
                ev_x.append(x)
                ev_n.append(n)
            next_arr = (arrivals + 1) / lam

        if waited:
            x = threshold  # threshold crossings are exact, not decayed-to
            if t_rel > t:
                t = t_rel
            if record_all:
                ev_t.append(t)
                ev_k.append(EV_IDLE_RELEASE)
                ev_x.append(x)
                ev_n.append(n)

        # service start
        n -= 1
        start_t.append(t)
        start_x.append(x)
        start_n.append(n)
        if record_all:
            ev_t.append(t)
            ev_k.append(EV_SERVICE_START)
            ev_x.append(x)
            ev_n.append(n)

        s = _service_time(code, par, x)
        t_end = t + s
        x_end = 1.0 - (1.0 - x) * exp(-s / tau)

        # arrivals strictly inside the busy window; state interpolated
        # from the service-start anchor in a single exponential step
        while next_arr < t_end - MERGE_TOL:
            xa = 1.0 - (1.0 - x) * exp(-(next_arr - t) / tau)
            arrivals += 1
            n += 1
            if n > max_q:
                max_q = n
            if record_all:
                ev_t.append(next_arr)
                ev_k.append(EV_ARRIVAL)
                ev_x.append(xa)
                ev_n.append(n)
            next_arr = (arrivals + 1) / lam

        t = t_end
        x = x_end
        completions += 1
        end_t.append(t)
        end_x.append(x)
        if record_all:
            ev_t.append(t)
            ev_k.append(EV_SERVICE_END)
            ev_x.append(x)
            ev_n.append(n)

    return (
        np.asarray(start_t, dtype=np.float64),
        np.asarray(start_x, dtype=np.float64),
        np.asarray(start_n, dtype=np.int64),
        np.asarray(end_t, dtype=np.float64),
        np.asarray(end_x, dtype=np.float64),
        np.asarray(ev_t, dtype=np.float64),
        np.asarray(ev_k, dtype=np.int8),
        np.asarray(ev_x, dtype=np.float64),
        np.asarray(ev_n, dtype=np.int64),
        max_q,
        arrivals,
        t,
        x,
        n,
    )


def schedule_time(code, par, tau, x, d):
    """Total time of one idle-then-serve schedule; inf when infeasible.

    Starts at state x, for each task idles d[i] then serves, and finally
    idles back down to x.  Infeasible exactly when the state after the
    last service sits below x.
    """
    exp = math.exp
    n = len(d)
    s = x
    total = 0.0
    for i in range(n):
        di = d[i]
        if di > 0.0:
            s = s * exp(-di / tau)
            total += di
        svc = _service_time(code, par, s)
        total += svc
        s = 1.0 - (1.0 - s) * exp(-svc / tau)
    if s < x:
        return math.inf
    return total + tau * math.log(s / x)


def enumerate_min_schedule(code, par, tau, x, n, step, cap):
    """Exhaustive idle-schedule search on the grid {0, step, ..., <= cap}.

    The first idle is pinned to zero; the remaining n-1 idles range over
    the grid.  Schedules are visited in lexicographic order and strict
    improvement wins, so ties resolve to the lexicographically smallest
    idle vector.  Returns (best_time, best_idles, feasible_found).
    """
    k = int(math.floor(cap / step + 1e-9)) + 1
    d = np.zeros(n, dtype=np.float64)
    best_time = math.inf
    best = d.copy()
    if n == 1:
        best_time = schedule_time(code, par, tau, x, d)
        return best_time, best, best_time < math.inf

    idx = [0] * (n - 1)
    while True:
        tt = schedule_time(code, par, tau, x, d)
        if tt < best_time:
            best_time = tt
            best = d.copy()
        j = n - 2
        while j >= 0:
            idx[j] += 1
            if idx[j] < k:
                d[j + 1] = idx[j] * step
                break
            idx[j] = 0
            d[j + 1] = 0.0
            j -= 1
        if j < 0:
            break
    return best_time, best, best_time < math.inf
