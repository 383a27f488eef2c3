"""Dynamical single-server queue with utilization-dependent service times.

A server whose state x in [0, 1] tracks its recent utilization renders
service time S(x) for a task started at state x.  The package provides
the parametric profile families and exact state updates, the one-task
equilibrium solver with the critical arrival rate and threshold, release
policies, an exact event-driven simulator, stability certificates, and a
brute-force oracle for the static-batch lower bound.  A compiled kernel
backend accelerates the hot loops, with a pure-Python fallback selected
automatically at import.
"""

from ._backend import backend_name
from .equilibrium import (
    CriticalPoint,
    EquilibriumSet,
    critical_rate,
    equilibrium_states,
    gap_minimum,
    one_task_cycle_time,
    stabilizing_threshold_interval,
    sustainable_service_time,
    sustainable_service_time_grid,
    sustainable_service_time_partials,
)
from .errors import (
    ConvergenceError,
    DegenerateThresholdError,
    DomainError,
    DynQueueError,
    InfeasibleError,
    InternalConsistencyError,
    ValidationError,
)
from .policy import PolicySpec, decide, earliest_release_delay
from .service_model import (
    ServerParams,
    ServerState,
    ServiceProfile,
    ValidationReport,
    busy_update,
    idle_time_to_reach,
    idle_update,
    validate_profile,
)
from .simulator import (
    Event,
    GrowthRate,
    SimConfig,
    Trajectory,
    growth_rate_estimate,
    next_start_state,
    run,
)
from .stability import (
    Classification,
    QueueBound,
    StabilityConstants,
    classify,
    compute_constants,
    cycle_time_floor,
    overload_lower_bound,
    queue_upper_bound,
)
from .static_oracle import (
    BoundCheck,
    StaticProblem,
    StaticSchedule,
    min_time_search,
    simulate_schedule,
    verify_bound,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCheck",
    "Classification",
    "ConvergenceError",
    "CriticalPoint",
    "DegenerateThresholdError",
    "DomainError",
    "DynQueueError",
    "EquilibriumSet",
    "Event",
    "GrowthRate",
    "InfeasibleError",
    "InternalConsistencyError",
    "PolicySpec",
    "QueueBound",
    "ServerParams",
    "ServerState",
    "ServiceProfile",
    "SimConfig",
    "StabilityConstants",
    "StaticProblem",
    "StaticSchedule",
    "Trajectory",
    "ValidationError",
    "ValidationReport",
    "backend_name",
    "busy_update",
    "classify",
    "compute_constants",
    "critical_rate",
    "cycle_time_floor",
    "decide",
    "earliest_release_delay",
    "equilibrium_states",
    "gap_minimum",
    "growth_rate_estimate",
    "idle_time_to_reach",
    "idle_update",
    "min_time_search",
    "next_start_state",
    "one_task_cycle_time",
    "overload_lower_bound",
    "queue_upper_bound",
    "run",
    "simulate_schedule",
    "stabilizing_threshold_interval",
    "sustainable_service_time",
    "sustainable_service_time_grid",
    "sustainable_service_time_partials",
    "validate_profile",
    "verify_bound",
]
