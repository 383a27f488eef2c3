"""Service-time profiles and closed-form server state evolution.

The server state x lives in [0, 1] and follows first-order dynamics with
time constant tau: it relaxes toward 1 while busy and toward 0 while idle,
so every state change over a duration d is a single exponential step.  No
ODE integrator exists anywhere in the package; everything uses the exact
solution.

Service times come from a parametric profile S(x) that must be positive,
continuous and convex on [0, 1].  Profiles are validated rather than taken
as arbitrary callables so that convexity is checkable, extrema are exact
and configurations serialize cleanly.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import cached_property

from .errors import (
    DomainError,
    InfeasibleError,
    InternalConsistencyError,
    ValidationError,
)

FAMILIES = ("constant", "affine", "quadratic", "piecewise-linear")

# integer family codes shared with the simulation kernels
FAMILY_CODES = {"constant": 0, "affine": 1, "quadratic": 2, "piecewise-linear": 3}

# |state| excursions beyond [0,1] larger than this are treated as bugs,
# not rounding
CLAMP_TOL = 1e-12

_POSITIVITY_GRID = 1001


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of profile validation; ``violations`` is empty when valid."""

    ok: bool
    violations: tuple[str, ...]


@dataclass(frozen=True)
class ServiceProfile:
    """Parametric service-time map S(x) on [0, 1].

    Parameter order per family:
      constant          [s]                 S(x) = s
      affine            [a, b]              S(x) = a*x + b
      quadratic         [a, c, s0]          S(x) = s0 + a*(x - c)^2
      piecewise-linear  [x0, y0, x1, y1,..] breakpoints with strictly
                                            increasing x spanning [0, 1]
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @cached_property
    def validation(self) -> ValidationReport:
        return _validate(self.family, self.params)

    def require_valid(self) -> "ServiceProfile":
        rep = self.validation
        if not rep.ok:
            raise ValidationError(
                "invalid service profile: " + "; ".join(rep.violations)
            )
        return self

    def value(self, x: float) -> float:
        """Evaluate S(x).  Exact for the parametric family."""
        self.require_valid()
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"state {x!r} outside [0, 1]")
        return _evaluate(self.family, self.params, x)

    @cached_property
    def extrema(self) -> tuple[float, float]:
        """(s_min, s_max): exact minimum over [0,1] and max of the endpoint values."""
        self.require_valid()
        return _extrema(self.family, self.params)

    @property
    def s_min(self) -> float:
        return self.extrema[0]

    @property
    def s_max(self) -> float:
        return self.extrema[1]

    def lipschitz_bound(self) -> float:
        """Upper bound on |S'| over [0,1], used for discretization slack."""
        self.require_valid()
        f, p = self.family, self.params
        if f == "constant":
            return 0.0
        if f == "affine":
            return abs(p[0])
        if f == "quadratic":
            a, c = p[0], p[1]
            return 2.0 * a * max(abs(0.0 - c), abs(1.0 - c))
        xs, ys = p[0::2], p[1::2]
        return max(
            abs((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])) for i in range(len(xs) - 1)
        )

    def kernel_spec(self):
        """(family code, flat parameter array) consumed by the simulation kernels."""
        import numpy as np

        self.require_valid()
        return FAMILY_CODES[self.family], np.asarray(self.params, dtype=np.float64)


def validate_profile(profile: ServiceProfile) -> ValidationReport:
    """Check positivity, convexity and continuity assumptions for a profile."""
    return profile.validation


def _validate(family: str, params: tuple[float, ...]) -> ValidationReport:
    bad: list[str] = []
    if family not in FAMILIES:
        return ValidationReport(False, (f"unknown family {family!r}",))
    if any(not math.isfinite(p) for p in params):
        return ValidationReport(False, ("non-finite parameter",))

    arity = {"constant": 1, "affine": 2, "quadratic": 3}
    if family in arity and len(params) != arity[family]:
        return ValidationReport(
            False, (f"{family} family takes {arity[family]} parameter(s)",)
        )

    if family == "quadratic" and params[0] < 0.0:
        bad.append("convexity: quadratic leading coefficient must be >= 0")

    if family == "piecewise-linear":
        if len(params) < 4 or len(params) % 2 != 0:
            return ValidationReport(
                False, ("piecewise-linear needs an even number >= 4 of parameters",)
            )
        xs, ys = params[0::2], params[1::2]
        if any(xs[i + 1] <= xs[i] for i in range(len(xs) - 1)):
            bad.append("breakpoint x-coordinates must be strictly increasing")
        if xs[0] != 0.0 or xs[-1] != 1.0:
            bad.append("breakpoints must span [0, 1] exactly")
        if not bad:
            slopes = [
                (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) for i in range(len(xs) - 1)
            ]
            for i in range(len(slopes) - 1):
                if slopes[i + 1] < slopes[i] - 1e-12 * max(1.0, abs(slopes[i])):
                    bad.append("convexity: segment slopes must be nondecreasing")
                    break

    if not bad:
        # positivity at the exact extremum and on a validation grid
        s_min, _ = _extrema(family, params)
        if s_min <= 0.0:
            bad.append(f"positivity: min S = {s_min!r} is not > 0")
        else:
            for i in range(_POSITIVITY_GRID):
                x = i / (_POSITIVITY_GRID - 1)
                if _evaluate(family, params, x) <= 0.0:
                    bad.append(f"positivity: S({x}) <= 0")
                    break

    return ValidationReport(not bad, tuple(bad))


def _evaluate(family: str, params: tuple[float, ...], x: float) -> float:
    if family == "constant":
        return params[0]
    if family == "affine":
        return params[0] * x + params[1]
    if family == "quadratic":
        dx = x - params[1]
        return params[2] + params[0] * dx * dx
    xs = params[0::2]
    i = bisect.bisect_right(xs, x) - 1
    if i >= len(xs) - 1:
        i = len(xs) - 2
    x0, y0 = params[2 * i], params[2 * i + 1]
    x1, y1 = params[2 * i + 2], params[2 * i + 3]
    return y0 + (y1 - y0) * ((x - x0) / (x1 - x0))


def _extrema(family: str, params: tuple[float, ...]) -> tuple[float, float]:
    if family == "constant":
        return params[0], params[0]
    s0 = _evaluate(family, params, 0.0)
    s1 = _evaluate(family, params, 1.0)
    s_max = max(s0, s1)
    if family == "affine":
        return min(s0, s1), s_max
    if family == "quadratic":
        a, c, v = params
        if a > 0.0 and 0.0 <= c <= 1.0:
            return v, s_max
        return min(s0, s1), s_max
    # convex piecewise-linear: the minimum sits on a breakpoint
    return min(params[1::2]), s_max


def _clamp_unit(v: float) -> float:
    if v < 0.0:
        if v >= -CLAMP_TOL:
            return 0.0
        raise InternalConsistencyError(f"state update produced {v!r} < 0")
    if v > 1.0:
        if v <= 1.0 + CLAMP_TOL:
            return 1.0
        raise InternalConsistencyError(f"state update produced {v!r} > 1")
    return v


def _check_duration(d: float) -> None:
    if d < 0.0 or math.isnan(d):
        raise DomainError(f"duration {d!r} must be >= 0")


def _check_state(x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"state {x!r} outside [0, 1]")


def _check_tau(tau: float) -> None:
    if not tau > 0.0:
        raise DomainError(f"time constant {tau!r} must be > 0")


def busy_update(x: float, d: float, tau: float) -> float:
    """State after staying busy for duration d: relaxes toward 1."""
    _check_state(x)
    _check_duration(d)
    _check_tau(tau)
    return _clamp_unit(1.0 - (1.0 - x) * math.exp(-d / tau))


def idle_update(x: float, d: float, tau: float) -> float:
    """State after staying idle for duration d: decays toward 0."""
    _check_state(x)
    _check_duration(d)
    _check_tau(tau)
    return _clamp_unit(x * math.exp(-d / tau))


def idle_time_to_reach(x_from: float, x_to: float, tau: float) -> float:
    """Exact idle duration taking the state from x_from down to x_to.

    Returns +inf when x_to == 0 < x_from (decay never reaches zero).
    """
    _check_state(x_from)
    _check_state(x_to)
    _check_tau(tau)
    if x_to > x_from:
        raise InfeasibleError(
            f"idling cannot raise the state ({x_from!r} -> {x_to!r})"
        )
    if x_to == x_from:
        return 0.0
    if x_to == 0.0:
        return math.inf
    return tau * math.log(x_from / x_to)


@dataclass(frozen=True)
class ServerParams:
    """Server time constant."""

    tau: float

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValidationError(f"tau must be > 0, got {self.tau!r}")


@dataclass(frozen=True)
class ServerState:
    """Instantaneous server condition: utilization state and busy flag."""

    x: float
    busy: bool = False

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValidationError(f"state must lie in [0, 1], got {self.x!r}")
