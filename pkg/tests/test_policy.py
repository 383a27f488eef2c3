import math

import numpy as np
import pytest

from dynqueue import (
    PolicySpec,
    ValidationError,
    decide,
    earliest_release_delay,
    idle_update,
)


def test_threshold_boundary_is_inclusive():
    policy = PolicySpec("threshold", 0.7)
    assert decide(policy, 0.7)
    assert not decide(policy, 0.71)
    assert decide(policy, 0.0)


def test_always_on():
    policy = PolicySpec("always_on")
    for x in (0.0, 0.3, 1.0):
        assert decide(policy, x)


def test_spec_validation():
    with pytest.raises(ValidationError):
        PolicySpec("threshold")
    with pytest.raises(ValidationError):
        PolicySpec("threshold", 0.0)
    with pytest.raises(ValidationError):
        PolicySpec("threshold", 1.5)
    with pytest.raises(ValidationError):
        PolicySpec("always_on", 0.5)
    with pytest.raises(ValidationError):
        PolicySpec("sometimes_on")
    assert PolicySpec("threshold", 1.0).threshold == 1.0


def test_release_delay_values():
    assert earliest_release_delay(PolicySpec("always_on"), 0.9, 1.0) == 0.0
    assert earliest_release_delay(PolicySpec("threshold", 0.5), 0.5, 1.0) == 0.0
    got = earliest_release_delay(PolicySpec("threshold", 0.25), 0.5, 1.0)
    assert got == pytest.approx(math.log(2.0), abs=1e-15)


def test_delay_zero_exactly_when_gate_open():
    rng = np.random.default_rng(21)
    policies = [PolicySpec("always_on")] + [
        PolicySpec("threshold", t) for t in (0.1, 0.5, 0.9, 1.0)
    ]
    for policy in policies:
        for x in rng.uniform(0.0, 1.0, size=50):
            delay = earliest_release_delay(policy, float(x), 0.7)
            assert (delay == 0.0) == decide(policy, float(x))


def test_decayed_state_opens_gate():
    rng = np.random.default_rng(22)
    for threshold in (0.2, 0.55, 0.95):
        policy = PolicySpec("threshold", threshold)
        for x in rng.uniform(0.0, 1.0, size=50):
            tau = float(rng.uniform(0.1, 5.0))
            delay = earliest_release_delay(policy, float(x), tau)
            landed = idle_update(float(x), delay, tau)
            assert decide(policy, landed) or landed <= threshold + 1e-12
