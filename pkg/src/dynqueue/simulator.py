"""Exact event-driven simulation of the gated dynamical queue.

Deterministic arrivals at k/lam for k = 1, 2, ...; the n0 initial tasks
are present at t = 0.  Every state transition is a closed-form
exponential step, so threshold crossings and decay targets are exact up
to floating point.  There is no preemption: a task started at state x
occupies the server for exactly S(x).

Queue lengths are recorded post-event: the value stored with an arrival
includes it, the value stored with a service start excludes the task just
taken.  Identical configurations produce bit-identical trajectories.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import DomainError, ValidationError
from .policy import PolicySpec
from .service_model import ServiceProfile

EVENT_KIND_NAMES = ("arrival", "service_start", "service_end", "idle_release")

RECORD_GRANULARITIES = ("events", "service_starts")

TRAJECTORY_CSV_COLUMNS = ("t", "kind", "x", "n")

# service starts needed before a growth-rate fit is attempted
MIN_STARTS_FOR_FIT = 10


@dataclass(frozen=True)
class SimConfig:
    """Arrival rate, initial condition and horizon of one simulation run.

    ``horizon_tasks`` counts service completions, so overloaded runs
    terminate.  ``lam == 0`` is allowed for the empty-arrivals case; the
    run then ends as soon as the queue empties.
    """

    lam: float
    tau: float
    x0: float = 0.0
    n0: int = 0
    horizon_tasks: int = 1000
    record_granularity: str = "events"

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise ValidationError(f"arrival rate must be >= 0, got {self.lam!r}")
        if not self.tau > 0.0:
            raise ValidationError(f"tau must be > 0, got {self.tau!r}")
        if not 0.0 <= self.x0 <= 1.0:
            raise ValidationError(f"x0 must lie in [0, 1], got {self.x0!r}")
        if self.n0 < 0 or self.n0 != int(self.n0):
            raise ValidationError(f"n0 must be a nonnegative integer, got {self.n0!r}")
        if self.horizon_tasks < 1:
            raise ValidationError(
                f"horizon_tasks must be >= 1, got {self.horizon_tasks!r}"
            )
        if self.record_granularity not in RECORD_GRANULARITIES:
            raise ValidationError(
                f"record_granularity must be one of {RECORD_GRANULARITIES}"
            )


class Event(NamedTuple):
    t: float
    kind: str
    x: float
    n: int


class GrowthRate(NamedTuple):
    slope: float
    residual: float


@dataclass(frozen=True)
class Trajectory:
    """Immutable record of one run.

    ``event_*`` arrays hold the full log in "events" granularity and only
    the service-start rows in "service_starts" granularity; the summary
    arrays (service starts/ends) are always complete.  ``max_queue``
    includes the initial queue length at t = 0.
    """

    config: SimConfig
    policy: PolicySpec
    start_times: np.ndarray
    start_states: np.ndarray
    start_queues: np.ndarray
    end_times: np.ndarray
    end_states: np.ndarray
    event_times: np.ndarray
    event_kinds: np.ndarray
    event_states: np.ndarray
    event_queues: np.ndarray
    max_queue: int
    final_queue: int
    final_time: float
    final_state: float
    arrivals: int

    @property
    def completions(self) -> int:
        return len(self.start_times)

    @cached_property
    def events(self) -> tuple[Event, ...]:
        return tuple(
            Event(t, EVENT_KIND_NAMES[k], x, int(n))
            for t, k, x, n in zip(
                self.event_times, self.event_kinds, self.event_states,
                self.event_queues,
            )
        )

    def summary(self) -> dict:
        out = {
            "max_queue": self.max_queue,
            "final_queue": self.final_queue,
            "final_time": self.final_time,
            "completions": self.completions,
            "arrivals": self.arrivals,
        }
        if self.completions >= MIN_STARTS_FOR_FIT:
            fit = growth_rate_estimate(self)
            out["growth_rate"] = fit.slope
            out["growth_rate_residual"] = fit.residual
        return out

    def to_csv(self, path) -> None:
        """One row per event: t,kind,x,n with 17-significant-digit floats."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_CSV_COLUMNS)
            for t, k, x, n in zip(
                self.event_times, self.event_kinds, self.event_states,
                self.event_queues,
            ):
                writer.writerow(
                    [f"{t:.17g}", EVENT_KIND_NAMES[k], f"{x:.17g}", int(n)]
                )


def run(config: SimConfig, profile: ServiceProfile, policy: PolicySpec) -> Trajectory:
    """Simulate until ``horizon_tasks`` completions (or queue exhaustion)."""
    profile.require_valid()
    code, par = profile.kernel_spec()
    pol_code, threshold = policy.kernel_spec()
    record_all = config.record_granularity == "events"
    (
        start_t, start_x, start_n, end_t, end_x,
        ev_t, ev_k, ev_x, ev_n,
        max_q, arrivals, final_t, final_x, final_n,
    ) = _backend.run_queue(
        code, par, config.tau, config.lam, pol_code, threshold,
        config.x0, config.n0, config.horizon_tasks, record_all,
    )
    if not record_all:
        ev_t = start_t
        ev_k = np.full(len(start_t), _backend.EV_SERVICE_START, dtype=np.int8)
        ev_x = start_x
        ev_n = start_n
    return Trajectory(
        config=config,
        policy=policy,
        start_times=start_t,
        start_states=start_x,
        start_queues=start_n,
        end_times=end_t,
        end_states=end_x,
        event_times=ev_t,
        event_kinds=ev_k,
        event_states=ev_x,
        event_queues=ev_n,
        max_queue=int(max_q),
        final_queue=int(final_n),
        final_time=float(final_t),
        final_state=float(final_x),
        arrivals=int(arrivals),
    )


def next_start_state(
    profile: ServiceProfile, tau: float, lam: float, x: float
) -> float:
    """Service-start state one arrival period later, under immediate release.

    Valid only while the service fits inside the arrival period
    (S(x) <= 1/lam); the recursion's fixed points are the one-task
    equilibria.
    """
    profile.require_valid()
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"state {x!r} outside [0, 1]")
    if not tau > 0.0:
        raise DomainError(f"time constant {tau!r} must be > 0")
    if not lam > 0.0:
        raise DomainError(f"arrival rate {lam!r} must be > 0")
    s = profile.value(x)
    if s > 1.0 / lam:
        raise DomainError(
            f"S(x) = {s!r} exceeds the arrival period {1.0 / lam!r}; "
            "the server is still busy when the next task arrives"
        )
    return (x - 1.0 + math.exp(s / tau)) * math.exp(-1.0 / (lam * tau))


def growth_rate_estimate(trajectory: Trajectory) -> GrowthRate:
    """Least-squares queue growth over the trailing half of service starts.

    Slope is in tasks per unit time; the residual is the RMS deviation of
    the fit.  A constant queue yields slope exactly 0.
    """
    m = trajectory.completions
    if m < MIN_STARTS_FOR_FIT:
        raise ValidationError(
            f"need at least {MIN_STARTS_FOR_FIT} service starts, got {m}"
        )
    ts = trajectory.start_times[m // 2 :]
    ns = trajectory.start_queues[m // 2 :].astype(np.float64)
    tc = ts - ts.mean()
    nc = ns - ns.mean()
    denom = float(np.dot(tc, tc))
    slope = float(np.dot(tc, nc)) / denom
    resid = nc - slope * tc
    return GrowthRate(slope, float(np.sqrt(np.dot(resid, resid) / len(resid))))


def replay_states(trajectory: Trajectory, profile: ServiceProfile) -> np.ndarray:
    """Recompute event states from the event list via the closed-form updates.

    The server is busy between each service_start and its service_end and
    idle otherwise; used to cross-check recorded states.
    """
    from .service_model import busy_update, idle_update

    tau = trajectory.config.tau
    out = np.empty(len(trajectory.event_times), dtype=np.float64)
    t_prev = 0.0
    x_prev = trajectory.config.x0
    busy = False
    for i, (t, k) in enumerate(zip(trajectory.event_times, trajectory.event_kinds)):
        dt = max(0.0, t - t_prev)
        x = busy_update(x_prev, dt, tau) if busy else idle_update(x_prev, dt, tau)
        kind = EVENT_KIND_NAMES[k]
        if kind == "service_start":
            busy = True
        elif kind == "service_end":
            busy = False
        out[i] = x
        t_prev, x_prev = t, x
    return out
