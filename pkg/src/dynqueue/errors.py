"""Exception types shared across the package."""


class DynQueueError(Exception):
    """Base class for all package errors."""


class ValidationError(DynQueueError, ValueError):
    """Invalid profile, policy, schedule or configuration."""


class DomainError(DynQueueError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class InfeasibleError(DynQueueError, ValueError):
    """Requested transition or schedule cannot be realized by the dynamics."""


class ConvergenceError(DynQueueError, RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class DegenerateThresholdError(ValidationError):
    """Certificate operation refused: the critical threshold sits at 1.

    The instability/queue-bound certificates require the tangency state to be
    strictly inside (0, 1); profiles whose critical point is degenerate (for
    example any constant service time) are rejected rather than approximated.
    """


class InternalConsistencyError(DynQueueError, RuntimeError):
    """A state update left [0, 1] by more than rounding tolerance."""
