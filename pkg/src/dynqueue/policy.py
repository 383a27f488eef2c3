"""Task release policies: the on-off gate at the queue entrance."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, ValidationError

POLICY_KINDS = ("always_on", "threshold")

# integer policy codes shared with the simulation kernels
POLICY_CODES = {"always_on": 0, "threshold": 1}


@dataclass(frozen=True)
class PolicySpec:
    """State-feedback release rule.

    ``always_on`` releases whenever the server is idle; ``threshold``
    releases only while the state sits at or below ``threshold``.
    """

    kind: str
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValidationError(f"unknown policy kind {self.kind!r}")
        if self.kind == "threshold":
            if self.threshold is None:
                raise ValidationError("threshold policy needs a threshold value")
            if not 0.0 < self.threshold <= 1.0:
                raise ValidationError(
                    f"threshold must lie in (0, 1], got {self.threshold!r}"
                )
        elif self.threshold is not None:
            raise ValidationError("always_on policy takes no threshold")

    def kernel_spec(self) -> tuple[int, float]:
        """(policy code, threshold) consumed by the simulation kernels."""
        if self.kind == "threshold":
            return POLICY_CODES[self.kind], self.threshold
        return POLICY_CODES[self.kind], 2.0  # sentinel, never compared


def decide(policy: PolicySpec, x: float) -> bool:
    """True when the gate is open at state x (the boundary is inclusive)."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"state {x!r} outside [0, 1]")
    if policy.kind == "always_on":
        return True
    return x <= policy.threshold


def earliest_release_delay(policy: PolicySpec, x: float, tau: float) -> float:
    """Exact idle time until the decaying state first opens the gate.

    Zero exactly when the gate is already open; finite always, since
    thresholds are strictly positive.
    """
    if not tau > 0.0:
        raise DomainError(f"time constant {tau!r} must be > 0")
    if decide(policy, x):
        return 0.0
    return tau * math.log(x / policy.threshold)
