# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation and enumeration kernels.

Mirror of ``_kernels_py`` line for line; the two must stay bit-identical
(the build disables FP contraction for that reason).  Change them
together.
"""
from libc.math cimport exp, log, INFINITY, floor

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

MERGE_TOL = 1e-12

BACKEND = "compiled"

cdef double _MERGE_TOL = 1e-12

cdef int _EV_ARRIVAL = 0
cdef int _EV_SERVICE_START = 1
cdef int _EV_SERVICE_END = 2
cdef int _EV_IDLE_RELEASE = 3


cdef inline double _service_time(int code, double[::1] par, double x) noexcept:
    cdef Py_ssize_t npts, lo, hi, mid
    cdef double x0, y0, x1, y1, dx
    if code == 0:  # constant
        return par[0]
    if code == 1:  # affine
        return par[0] * x + par[1]
    if code == 2:  # quadratic
        dx = x - par[1]
        return par[2] + par[0] * dx * dx
    # piecewise-linear: par = [x0, y0, x1, y1, ...]
    npts = par.shape[0] // 2
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


cdef class _EventLog:
    """Growable arrays of (t, kind, x, n) event records."""
    cdef double[::1] t
    cdef signed char[::1] kind
    cdef double[::1] x
    cdef long long[::1] n
    cdef object t_arr, kind_arr, x_arr, n_arr
    cdef Py_ssize_t size, cap

    def __cinit__(self, Py_ssize_t cap0):
        self.cap = cap0 if cap0 > 16 else 16
        self.size = 0
        self.t_arr = np.empty(self.cap, dtype=np.float64)
        self.kind_arr = np.empty(self.cap, dtype=np.int8)
        self.x_arr = np.empty(self.cap, dtype=np.float64)
        self.n_arr = np.empty(self.cap, dtype=np.int64)
        self.t = self.t_arr
        self.kind = self.kind_arr
        self.x = self.x_arr
        self.n = self.n_arr

    cdef void _grow(self):
        self.cap *= 2
        t_new = np.empty(self.cap, dtype=np.float64)
        kind_new = np.empty(self.cap, dtype=np.int8)
        x_new = np.empty(self.cap, dtype=np.float64)
        n_new = np.empty(self.cap, dtype=np.int64)
        t_new[: self.size] = self.t_arr[: self.size]
        kind_new[: self.size] = self.kind_arr[: self.size]
        x_new[: self.size] = self.x_arr[: self.size]
        n_new[: self.size] = self.n_arr[: self.size]
        self.t_arr, self.kind_arr, self.x_arr, self.n_arr = (
            t_new, kind_new, x_new, n_new)
        self.t = self.t_arr
        self.kind = self.kind_arr
        self.x = self.x_arr
        self.n = self.n_arr

    cdef inline void push(self, double t, int kind, double x, long long n):
        if self.size == self.cap:
            self._grow()
        self.t[self.size] = t
        self.kind[self.size] = <signed char> kind
        self.x[self.size] = x
        self.n[self.size] = n
        self.size += 1

    cdef tuple arrays(self):
        return (
            self.t_arr[: self.size].copy(),
            self.kind_arr[: self.size].copy(),
            self.x_arr[: self.size].copy(),
            self.n_arr[: self.size].copy(),
        )


def run_queue(int code, double[::1] par, double tau, double lam, int policy,
              double threshold, double x0, long long n0, long long horizon,
              bint record_all):
    """Exact event-driven run; see the pure-Python kernel for the contract."""
    cdef double t = 0.0
    cdef double x = x0
    cdef long long n = n0
    cdef long long arrivals = 0
    cdef long long completions = 0
    cdef double next_arr = 1.0 / lam if lam > 0.0 else INFINITY
    cdef long long max_q = n
    cdef double t_rel, t_end, x_end, s, xa
    cdef bint waited
    cdef Py_ssize_t m = 0

    start_t_arr = np.empty(horizon, dtype=np.float64)
    start_x_arr = np.empty(horizon, dtype=np.float64)
    start_n_arr = np.empty(horizon, dtype=np.int64)
    end_t_arr = np.empty(horizon, dtype=np.float64)
    end_x_arr = np.empty(horizon, dtype=np.float64)
    cdef double[::1] start_t = start_t_arr
    cdef double[::1] start_x = start_x_arr
    cdef long long[::1] start_n = start_n_arr
    cdef double[::1] end_t = end_t_arr
    cdef double[::1] end_x = end_x_arr

    cdef _EventLog ev = _EventLog(4 * horizon + 16 if record_all else 16)

    while completions < horizon:
        if n == 0:
            if next_arr == INFINITY:
                break
            if next_arr > t:
                x = x * exp(-(next_arr - t) / tau)
                t = next_arr
            arrivals += 1
            n += 1
            if n > max_q:
                max_q = n
            if record_all:
                ev.push(t, _EV_ARRIVAL, x, n)
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
        while next_arr <= t_rel + _MERGE_TOL:
            if next_arr > t:
                x = x * exp(-(next_arr - t) / tau)
                t = next_arr
            arrivals += 1
            n += 1
            if n > max_q:
                max_q = n
            if record_all:
                ev.push(t, _EV_ARRIVAL, x, n)
            next_arr = (arrivals + 1) / lam

        if waited:
            x = threshold  # threshold crossings are exact, not decayed-to
            if t_rel > t:
                t = t_rel
            if record_all:
                ev.push(t, _EV_IDLE_RELEASE, x, n)

        # service start
        n -= 1
        start_t[m] = t
        start_x[m] = x
        start_n[m] = n
        if record_all:
            ev.push(t, _EV_SERVICE_START, x, n)

        s = _service_time(code, par, x)
        t_end = t + s
        x_end = 1.0 - (1.0 - x) * exp(-s / tau)

        # arrivals strictly inside the busy window; state interpolated
        # from the service-start anchor in a single exponential step
        while next_arr < t_end - _MERGE_TOL:
            xa = 1.0 - (1.0 - x) * exp(-(next_arr - t) / tau)
            arrivals += 1
            n += 1
            if n > max_q:
                max_q = n
            if record_all:
                ev.push(next_arr, _EV_ARRIVAL, xa, n)
            next_arr = (arrivals + 1) / lam

        t = t_end
        x = x_end
        end_t[m] = t
        end_x[m] = x
        m += 1
        completions += 1
        if record_all:
            ev.push(t, _EV_SERVICE_END, x, n)

    ev_t_arr, ev_k_arr, ev_x_arr, ev_n_arr = ev.arrays()
    return (
        start_t_arr[:m].copy(),
        start_x_arr[:m].copy(),
        start_n_arr[:m].copy(),
        end_t_arr[:m].copy(),
        end_x_arr[:m].copy(),
        ev_t_arr,
        ev_k_arr,
        ev_x_arr,
        ev_n_arr,
        max_q,
        arrivals,
        t,
        x,
        n,
    )


cdef double _schedule_time(int code, double[::1] par, double tau, double x,
                           double[::1] d, Py_ssize_t n) noexcept:
    cdef double s = x
    cdef double total = 0.0
    cdef double di, svc
    cdef Py_ssize_t i
    for i in range(n):
        di = d[i]
        if di > 0.0:
            s = s * exp(-di / tau)
            total += di
        svc = _service_time(code, par, s)
        total += svc
        s = 1.0 - (1.0 - s) * exp(-svc / tau)
    if s < x:
        return INFINITY
    return total + tau * log(s / x)


def schedule_time(int code, double[::1] par, double tau, double x, double[::1] d):
    """Total time of one idle-then-serve schedule; inf when infeasible."""
    return _schedule_time(code, par, tau, x, d, d.shape[0])


def enumerate_min_schedule(int code, double[::1] par, double tau, double x,
                           Py_ssize_t n, double step, double cap):
    """Exhaustive idle-schedule search; see the pure-Python kernel."""
    cdef Py_ssize_t k = <Py_ssize_t> floor(cap / step + 1e-9) + 1
    d_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] d = d_arr
    cdef double best_time = INFINITY
    cdef double tt
    best_arr = d_arr.copy()
    cdef Py_ssize_t j
    cdef long long[::1] idx

    if n == 1:
        best_time = _schedule_time(code, par, tau, x, d, n)
        return best_time, best_arr, best_time < INFINITY

    idx_arr = np.zeros(n - 1, dtype=np.int64)
    idx = idx_arr
    while True:
        tt = _schedule_time(code, par, tau, x, d, n)
        if tt < best_time:
            best_time = tt
            best_arr = d_arr.copy()
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
    return best_time, best_arr, best_time < INFINITY
