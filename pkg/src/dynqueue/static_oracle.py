"""Brute-force verification of the static-batch time lower bound.

The n-task static problem: starting and ending at state x, serve n
pre-queued tasks as fast as possible.  Its minimum time is bounded below
by n times the critical period, and this module verifies that claim by
exhaustive search over idle schedules: a candidate policy is a vector of
idle durations inserted before the services (the first pinned to zero,
since idling before the first task only re-roots the problem at a lower
boundary state).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .equilibrium import CriticalPoint
from .errors import InfeasibleError, ValidationError
from .service_model import ServiceProfile

MAX_TASKS = 4  # the search is exponential in n

# defaults, relative to tau: idling past 3*tau changes the state by < 5%
DEFAULT_GRID_STEP_FACTOR = 0.01
DEFAULT_IDLE_CAP_FACTOR = 3.0


@dataclass(frozen=True)
class StaticProblem:
    """Boundary state, time constant and task count of one static batch."""

    x: float
    tau: float
    n: int

    def __post_init__(self):
        if not 0.0 < self.x < 1.0:
            raise ValidationError(
                f"boundary state must lie strictly in (0, 1), got {self.x!r}"
            )
        if not self.tau > 0.0:
            raise ValidationError(f"tau must be > 0, got {self.tau!r}")
        if self.n < 1 or self.n != int(self.n):
            raise ValidationError(f"task count must be a positive integer, got {self.n!r}")


@dataclass(frozen=True)
class StaticSchedule:
    """Idle durations inserted before each service; the first is zero."""

    idle_before: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "idle_before", tuple(float(d) for d in self.idle_before)
        )
        if not self.idle_before:
            raise ValidationError("schedule needs at least one entry")
        if self.idle_before[0] != 0.0:
            raise ValidationError("the idle before the first task is pinned to zero")
        if any(d < 0.0 or not math.isfinite(d) for d in self.idle_before):
            raise ValidationError("idle durations must be finite and >= 0")


def simulate_schedule(
    problem: StaticProblem, profile: ServiceProfile, schedule: StaticSchedule
) -> float:
    """Total elapsed time of one schedule, including the final return idle.

    Infeasible when the state after the last service sits below the
    boundary state: idling can only lower the state further.
    """
    profile.require_valid()
    if len(schedule.idle_before) != problem.n:
        raise ValidationError(
            f"schedule has {len(schedule.idle_before)} entries for {problem.n} tasks"
        )
    code, par = profile.kernel_spec()
    d = np.asarray(schedule.idle_before, dtype=np.float64)
    total = _backend.schedule_time(code, par, problem.tau, problem.x, d)
    if total == math.inf:
        raise InfeasibleError(
            "schedule ends below the boundary state; the idle return is impossible"
        )
    return total


def min_time_search(
    problem: StaticProblem,
    profile: ServiceProfile,
    grid_step: float | None = None,
    idle_cap: float | None = None,
) -> tuple[float, StaticSchedule]:
    """Exhaustive minimum over idle vectors on a uniform grid.

    Ties resolve to the lexicographically smallest idle vector, so the
    reported schedule is deterministic.
    """
    profile.require_valid()
    if problem.n > MAX_TASKS:
        raise ValidationError(
            f"exhaustive search supports at most {MAX_TASKS} tasks, got {problem.n}"
        )
    if grid_step is None:
        grid_step = DEFAULT_GRID_STEP_FACTOR * problem.tau
    if idle_cap is None:
        idle_cap = DEFAULT_IDLE_CAP_FACTOR * problem.tau
    if not grid_step > 0.0:
        raise ValidationError(f"grid step must be > 0, got {grid_step!r}")
    if not idle_cap >= 0.0:
        raise ValidationError(f"idle cap must be >= 0, got {idle_cap!r}")
    code, par = profile.kernel_spec()
    best_time, best_d, feasible = _backend.enumerate_min_schedule(
        code, par, problem.tau, problem.x, problem.n, grid_step, idle_cap
    )
    if not feasible:
        raise InfeasibleError("no feasible schedule on the grid")
    return float(best_time), StaticSchedule(tuple(best_d))


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of one lower-bound verification."""

    passed: bool
    margin: float
    tol: float
    best_time: float
    target: float
    schedule: StaticSchedule


def discretization_tolerance(
    profile: ServiceProfile, n: int, grid_step: float
) -> float:
    """Slack granted to the grid search: 2 * n * Lip(S) * grid_step."""
    return 2.0 * n * profile.lipschitz_bound() * grid_step


def verify_bound(
    problem: StaticProblem,
    profile: ServiceProfile,
    critical: CriticalPoint,
    grid_step: float | None = None,
    idle_cap: float | None = None,
) -> BoundCheck:
    """Check min schedule time >= n / critical rate, up to grid slack.

    The margin it reports is best_time - n / critical rate; the explicit
    discretization tolerance is never hidden inside the verdict.
    """
    if grid_step is None:
        grid_step = DEFAULT_GRID_STEP_FACTOR * problem.tau
    best_time, best_schedule = min_time_search(problem, profile, grid_step, idle_cap)
    target = problem.n / critical.lambda_eq_max
    tol = discretization_tolerance(profile, problem.n, grid_step)
    margin = best_time - target
    return BoundCheck(
        passed=margin >= -tol,
        margin=margin,
        tol=tol,
        best_time=best_time,
        target=target,
        schedule=best_schedule,
    )
