"""One-task equilibria and the critical arrival rate.

A state x is a one-task equilibrium for arrival rate lam when a server
that starts a task at x, with arrivals every 1/lam and immediate release,
returns to exactly x at the next arrival.  Equivalently S(x) equals the
sustainable service time

    W(x, tau, lam) = tau * ln(1 + (e^(1/(lam*tau)) - 1) * x),

the largest service duration an arrival period can absorb while the state
still recovers to x.  W is strictly increasing and strictly concave in x
with W(1) = 1/lam, so the gap S - W is strictly convex: for each lam there
are 0, 1 or 2 equilibria, and the largest rate admitting one is found by
bisecting on the sign of the gap minimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._solvers import bisect_root, golden_section_min
from .errors import DomainError, ValidationError
from .service_model import ServiceProfile, busy_update

# solver tolerances; iteration caps live in _solvers
X_TOL = 1e-10
GAP_TOL = 1e-10
RATE_REL_TOL = 1e-9
DEGENERACY_MARGIN = 1e-6

# 1/(lam*tau) beyond which exp() would overflow; switch to the asymptotic form
_EXP_ARG_MAX = 700.0


def _check_args(x: float, tau: float, lam: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"state {x!r} outside [0, 1]")
    if not tau > 0.0:
        raise DomainError(f"time constant {tau!r} must be > 0")
    if not lam > 0.0:
        raise DomainError(f"arrival rate {lam!r} must be > 0")


def sustainable_service_time(x: float, tau: float, lam: float) -> float:
    """Largest service duration at state x that one arrival period absorbs."""
    _check_args(x, tau, lam)
    e = 1.0 / (lam * tau)
    if e > _EXP_ARG_MAX:
        # ln(1 + (e^e - 1) x) ~ e + ln(x); the dropped terms are below 1 ulp
        # unless x is itself below e^-e, where the exact value is near 0
        return 0.0 if x == 0.0 else max(0.0, tau * (e + math.log(x)))
    return tau * math.log1p(math.expm1(e) * x)


def sustainable_service_time_grid(xs: np.ndarray, tau: float, lam: float) -> np.ndarray:
    """Vectorized counterpart of sustainable_service_time for x-grids."""
    if not tau > 0.0:
        raise DomainError(f"time constant {tau!r} must be > 0")
    if not lam > 0.0:
        raise DomainError(f"arrival rate {lam!r} must be > 0")
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size and (xs.min() < 0.0 or xs.max() > 1.0):
        raise DomainError("grid states outside [0, 1]")
    e = 1.0 / (lam * tau)
    if e > _EXP_ARG_MAX:
        out = np.full_like(xs, 0.0)
        pos = xs > 0.0
        out[pos] = np.maximum(0.0, tau * (e + np.log(xs[pos])))
        return out
    return tau * np.log1p(math.expm1(e) * xs)


def sustainable_service_time_partials(
    x: float, tau: float, lam: float
) -> tuple[float, float]:
    """First and second x-derivatives; the first is > 0, the second < 0."""
    _check_args(x, tau, lam)
    e = 1.0 / (lam * tau)
    if e > _EXP_ARG_MAX:
        if x == 0.0:
            return math.inf, -math.inf
        return tau / x, -tau / (x * x)
    u = math.expm1(e)
    denom = 1.0 + u * x
    return tau * u / denom, -tau * u * u / (denom * denom)


def gap_minimum(
    profile: ServiceProfile, tau: float, lam: float
) -> tuple[float, float]:
    """Minimize the gap S(x) - W(x, tau, lam) over [0, 1].

    Returns (x_star, m).  The gap is strictly convex, so golden-section
    search is exact up to bracketing; m > 0 means no equilibrium exists at
    this rate, m <= 0 means at least one does.
    """
    profile.require_valid()
    _check_args(0.0, tau, lam)

    def gap(x: float) -> float:
        return profile.value(x) - sustainable_service_time(x, tau, lam)

    return golden_section_min(gap, 0.0, 1.0, X_TOL)


@dataclass(frozen=True)
class EquilibriumSet:
    """Sorted one-task equilibrium states for one arrival rate (0 to 2 roots)."""

    lam: float
    roots: tuple[float, ...]


def equilibrium_states(
    profile: ServiceProfile, tau: float, lam: float
) -> EquilibriumSet:
    """Solve S(x) = W(x, tau, lam) on [0, 1].

    The gap is strictly convex and positive at x = 0, so roots bracket the
    gap minimizer: one bisection on each side.
    """
    x_star, m = gap_minimum(profile, tau, lam)
    if m > GAP_TOL:
        return EquilibriumSet(lam, ())
    if m >= -GAP_TOL:
        return EquilibriumSet(lam, (x_star,))

    def gap(x: float) -> float:
        return profile.value(x) - sustainable_service_time(x, tau, lam)

    roots = [bisect_root(gap, 0.0, x_star, 1e-14)]
    if gap(1.0) >= 0.0:
        roots.append(bisect_root(gap, x_star, 1.0, 1e-14))
    return EquilibriumSet(lam, tuple(roots))


@dataclass(frozen=True)
class CriticalPoint:
    """Largest rate admitting a one-task equilibrium, and its tangency state."""

    lambda_eq_max: float
    x_th: float
    degenerate: bool
    gap_at_min: float


def _flat_minimum_midpoint(gap, x_star: float, m: float) -> float:
    """Midpoint of a numerically flat tangency region, if one exists.

    Strict convexity rules out true flat minima, but a robust report is
    still defined: expand from x_star while the gap stays within noise of
    m and return the midpoint when the flat stretch is wider than 1e-6.
    """
    tol = 1e-12 * max(1.0, abs(m))
    lo = hi = x_star
    step = 1e-9
    while step < 1.0:
        if lo - step >= 0.0 and gap(lo - step) <= m + tol:
            lo -= step
        elif hi + step <= 1.0 and gap(hi + step) <= m + tol:
            hi += step
        else:
            step *= 2.0
            continue
        step *= 2.0
    if hi - lo > 1e-6:
        return 0.5 * (lo + hi)
    return x_star


def critical_rate(profile: ServiceProfile, tau: float) -> CriticalPoint:
    """Find the largest arrival rate with a nonempty equilibrium set.

    Bisects on the gap minimum, which is continuous and strictly
    increasing in lam (the sustainable service time falls pointwise as the
    rate grows).  Works uniformly for kinked profiles and for the
    degenerate tangency-at-one case, where derivative-based tangency
    systems fail.
    """
    profile.require_valid()
    if not tau > 0.0:
        raise DomainError(f"time constant {tau!r} must be > 0")
    s_min, s_max = profile.extrema
    lo = 1.0 / s_max
    hi = 1.0 / s_min

    def minimum_at(lam: float) -> tuple[float, float]:
        def gap(x: float) -> float:
            return profile.value(x) - sustainable_service_time(x, tau, lam)

        return golden_section_min(gap, 0.0, 1.0, X_TOL)

    if hi - lo <= RATE_REL_TOL * lo:
        lam = lo
    else:
        # invariant: equilibria exist at lo, none at hi (checked limits:
        # gap(1) <= 0 at 1/s_max, gap >= S - s_min >= 0 everywhere at 1/s_min)
        while hi - lo > RATE_REL_TOL * lo:
            mid = 0.5 * (lo + hi)
            _, m = minimum_at(mid)
            if m > 0.0:
                hi = mid
            else:
                lo = mid
        lam = lo

    def gap(x: float) -> float:
        return profile.value(x) - sustainable_service_time(x, tau, lam)

    x_star, m = minimum_at(lam)
    x_th = _flat_minimum_midpoint(gap, x_star, m)
    return CriticalPoint(
        lambda_eq_max=lam,
        x_th=x_th,
        degenerate=x_th >= 1.0 - DEGENERACY_MARGIN,
        gap_at_min=m,
    )


def one_task_cycle_time(profile: ServiceProfile, tau: float, x: float) -> float:
    """Service at x plus the idle time needed to decay back to x.

    Diverges as x -> 0 (the idle leg never ends); returns +inf at x = 0.
    The reciprocal is the arrival rate for which x is a one-task
    equilibrium.
    """
    profile.require_valid()
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"state {x!r} outside [0, 1]")
    if x == 0.0:
        return math.inf
    s = profile.value(x)
    x_end = busy_update(x, s, tau)
    return s + tau * math.log(x_end / x)


def stabilizing_threshold_interval(
    profile: ServiceProfile, tau: float, lam_prime: float
) -> tuple[float, float]:
    """Threshold values whose release policy stabilizes all rates <= lam_prime.

    These are exactly the equilibrium states at lam_prime; a single root
    yields a degenerate interval.
    """
    eq = equilibrium_states(profile, tau, lam_prime)
    if not eq.roots:
        raise ValidationError(
            f"no equilibrium at rate {lam_prime!r}: it exceeds the critical rate"
        )
    return eq.roots[0], eq.roots[-1]
