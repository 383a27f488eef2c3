"""Stability and instability certificates for the gated queue.

For a non-degenerate critical point the package computes:

* a band [x_lo, x_hi] strictly inside (0, 1) that service-start states of
  any policy must visit infinitely often, or the queue grows without
  bound; together with slack constants c1, c2, c_total this yields a
  linear lower bound on the queue under overload;
* an explicit upper bound on the queue under the threshold policy at the
  critical threshold for rates up to the critical rate.

Finite runs cannot decide limsup-boundedness, so classification is
certificate-based: a run is "stable" when the queue bound holds (where it
applies) or the fitted growth slope is consistent with a bounded queue,
"unstable" when the slope clears half the overload rate gap, and
"inconclusive" otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ._solvers import bisect_root
from .equilibrium import CriticalPoint
from .errors import DegenerateThresholdError, DomainError, ValidationError
from .service_model import ServiceProfile
from .simulator import MIN_STARTS_FOR_FIT, Trajectory, growth_rate_estimate

# |threshold - x_th| within which the explicit queue bound applies
THRESHOLD_MATCH_TOL = 1e-9

# relative slack when comparing rates to the critical rate
RATE_SLACK = 1e-12


@dataclass(frozen=True)
class StabilityConstants:
    """Certificate constants for one profile and time constant.

    ``x_min`` bounds the lowest state right after any service; ``x_l1``,
    ``x_l2``, ``x_u1``, ``x_u2`` are the intermediate band constructions;
    ``x_lo < x_hi`` is the must-visit band; ``c1``/``c2`` bound the idle
    slack below/above the band and ``c_total = c1 + c2 + s_max``.
    """

    x_min: float
    x_l1: float
    x_l2: float
    x_u1: float
    x_u2: float
    x_lo: float
    x_hi: float
    c1: float
    c2: float
    c_total: float


@dataclass(frozen=True)
class QueueBound:
    """Explicit queue cap under the critical-threshold policy.

    ``n_t1`` is the queue at the first service start; the two increments
    (kept separately for auditability) cover the busy climb past the
    threshold and the idle fall back to it.  Increments are applied
    verbatim even when negative; a negative increment still upper-bounds
    the true increase.
    """

    n_t1: int
    bound: int
    climb_increment: int
    idle_increment: int


@dataclass(frozen=True)
class Classification:
    verdict: str  # "stable" | "unstable" | "inconclusive"
    evidence: dict


def cycle_time_floor(x: float, profile: ServiceProfile, tau: float) -> float:
    """Lower bound on a service cycle that ends with a start at state x.

    Any cycle serves for at least s_min, ends no lower than x_min, and
    must then idle down to x; infinity at x = 0.
    """
    profile.require_valid()
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"state {x!r} outside [0, 1]")
    if not tau > 0.0:
        raise DomainError(f"time constant {tau!r} must be > 0")
    s_min = profile.s_min
    x_min = 1.0 - math.exp(-s_min / tau)
    if x == 0.0:
        return math.inf
    return s_min + tau * math.log(x_min / x)


def compute_constants(
    profile: ServiceProfile, tau: float, critical: CriticalPoint
) -> StabilityConstants:
    """Build the must-visit band and slack constants.

    Refuses degenerate critical points: the instability certificate needs
    the tangency strictly inside (0, 1).
    """
    profile.require_valid()
    if critical.degenerate:
        raise DegenerateThresholdError(
            "stability constants are undefined for a degenerate critical point"
        )
    s_min, s_max = profile.extrema
    lam_max = critical.lambda_eq_max
    inv_rate = 1.0 / lam_max
    x_min = 1.0 - math.exp(-s_min / tau)

    # largest state whose cycle-time floor still exceeds the critical
    # period; the floor is strictly decreasing with floor(x_min) = s_min
    # < 1/lam_max, so the root sits below x_min.  Larger values give a
    # tighter certificate, hence the supremum.
    def floor_gap(x: float) -> float:
        return s_min + tau * math.log(x_min / x) - inv_rate

    lo = x_min
    while floor_gap(lo) <= 0.0:
        lo *= 0.5
    x_tilde = bisect_root(floor_gap, lo, x_min, 1e-12) if floor_gap(x_min) < 0.0 else x_min
    x_l1 = min(x_min, x_tilde)

    # largest state where the service time equals the critical period;
    # S is increasing past the tangency with S(1) above the period
    def service_gap(x: float) -> float:
        return profile.value(x) - inv_rate

    x_u1 = bisect_root(service_gap, critical.x_th, 1.0, 1e-12)

    shrink = math.exp(-2.0 / (tau * lam_max))
    x_u2 = 1.0 - (1.0 - x_l1) * shrink
    x_l2 = x_u2 * shrink
    x_lo = min(x_l1, x_l2)
    x_hi = max((1.0 + x_u1) / 2.0, x_u2)
    c1 = -tau * math.log(x_lo)
    c2 = -tau * math.log(1.0 - x_hi)
    return StabilityConstants(
        x_min=x_min,
        x_l1=x_l1,
        x_l2=x_l2,
        x_u1=x_u1,
        x_u2=x_u2,
        x_lo=x_lo,
        x_hi=x_hi,
        c1=c1,
        c2=c2,
        c_total=c1 + c2 + s_max,
    )


def queue_upper_bound(
    profile: ServiceProfile,
    tau: float,
    lam: float,
    critical: CriticalPoint,
    x0: float,
    n0: int,
) -> QueueBound:
    """Queue cap for the threshold policy at the critical threshold.

    Applies only for rates up to the critical rate and non-degenerate
    critical points.
    """
    profile.require_valid()
    if critical.degenerate:
        raise DegenerateThresholdError(
            "the queue bound is undefined for a degenerate critical point"
        )
    if lam > critical.lambda_eq_max * (1.0 + RATE_SLACK):
        raise ValidationError(
            f"rate {lam!r} exceeds the critical rate "
            f"{critical.lambda_eq_max!r}; the bound does not apply"
        )
    if not 0.0 <= x0 <= 1.0:
        raise DomainError(f"x0 {x0!r} outside [0, 1]")
    if n0 < 0:
        raise ValidationError(f"n0 must be >= 0, got {n0!r}")
    x_th = critical.x_th
    s_max = profile.s_max
    if x0 > x_th:
        n_t1 = max(0, n0 - 1, n0 - 1 + math.floor(lam * tau * math.log(x0 / x_th)))
    else:
        n_t1 = max(0, n0 - 1)
    climb = math.ceil((lam - 1.0 / s_max) * (-tau * math.log(1.0 - x_th) + s_max))
    idle = math.ceil(-lam * tau * math.log(x_th))
    return QueueBound(
        n_t1=n_t1,
        bound=n_t1 + climb + idle,
        climb_increment=climb,
        idle_increment=idle,
    )


def overload_lower_bound(
    constants: StabilityConstants,
    lam: float,
    lambda_eq_max: float,
    n1: int,
    k_index_gap: int,
) -> float:
    """Linear queue growth floor under overload.

    For service starts whose states sit in the must-visit band, the queue
    at the start ``k_index_gap`` places after the first banded start is at
    least ``n1 - lam * c_total + k_index_gap * (lam / lambda_eq_max - 1)``.
    """
    if lam <= lambda_eq_max:
        raise ValidationError(
            f"rate {lam!r} does not exceed the critical rate {lambda_eq_max!r}; "
            "the overload bound does not apply"
        )
    if k_index_gap < 0:
        raise ValidationError("index gap must be >= 0")
    return n1 - lam * constants.c_total + k_index_gap * (lam / lambda_eq_max - 1.0)


def classify(
    trajectory: Trajectory,
    profile: ServiceProfile,
    tau: float,
    lam: float,
    critical: CriticalPoint,
) -> Classification:
    """Certificate-based verdict for one finished run.

    Stable when the explicit queue bound holds (threshold policy at the
    critical threshold, rate at most critical) or the fitted growth slope
    is within the bounded-queue tolerance 10/horizon_time.  Unstable when
    the rate exceeds the critical rate and the slope clears half the rate
    gap; the overload certificate is vacuous below the critical rate, so
    such runs are never labeled unstable.  Degenerate critical points get
    slope evidence only.
    """
    evidence: dict = {
        "lam": lam,
        "lambda_eq_max": critical.lambda_eq_max,
        "max_queue": trajectory.max_queue,
        "completions": trajectory.completions,
    }
    if trajectory.completions < MIN_STARTS_FOR_FIT:
        evidence["reason"] = (
            f"fewer than {MIN_STARTS_FOR_FIT} service starts; no certificate applies"
        )
        return Classification("inconclusive", evidence)

    fit = growth_rate_estimate(trajectory)
    horizon_time = trajectory.final_time
    eps_slope = 10.0 / horizon_time
    evidence["growth_rate"] = fit.slope
    evidence["growth_rate_residual"] = fit.residual
    evidence["eps_slope"] = eps_slope

    bound_applicable = (
        not critical.degenerate
        and trajectory.policy.kind == "threshold"
        and abs(trajectory.policy.threshold - critical.x_th) <= THRESHOLD_MATCH_TOL
        and lam <= critical.lambda_eq_max * (1.0 + RATE_SLACK)
    )
    if bound_applicable:
        qb = queue_upper_bound(
            profile, tau, lam, critical, trajectory.config.x0, trajectory.config.n0
        )
        evidence["queue_bound"] = qb.bound
        evidence["queue_bound_n_t1"] = qb.n_t1
        if trajectory.max_queue <= qb.bound:
            evidence["certificate"] = "queue_bound"
            return Classification("stable", evidence)

    if fit.slope <= eps_slope:
        evidence["certificate"] = "growth_slope"
        return Classification("stable", evidence)

    if not critical.degenerate and lam > critical.lambda_eq_max:
        unstable_floor = (lam / critical.lambda_eq_max - 1.0) * (
            critical.lambda_eq_max / 2.0
        )
        evidence["unstable_floor"] = unstable_floor
        if fit.slope >= unstable_floor:
            evidence["certificate"] = "overload_slope"
            return Classification("unstable", evidence)

    evidence["reason"] = "no certificate matched"
    return Classification("inconclusive", evidence)
