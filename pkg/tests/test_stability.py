import math

import numpy as np
import pytest

from dynqueue import (
    DegenerateThresholdError,
    PolicySpec,
    ServiceProfile,
    SimConfig,
    ValidationError,
    busy_update,
    classify,
    compute_constants,
    critical_rate,
    cycle_time_floor,
    overload_lower_bound,
    queue_upper_bound,
    run,
)
from conftest import TAU


def invert_rising_branch(profile, target, x_from):
    """Closed-form largest solution of S(x) = target on [x_from, 1]."""
    fam, par = profile.family, profile.params
    if fam == "affine":
        return (target - par[1]) / par[0]
    if fam == "quadratic":
        a, c, s0 = par
        return c + math.sqrt((target - s0) / a)
    if fam == "piecewise-linear":
        xs, ys = par[0::2], par[1::2]
        for i in reversed(range(len(xs) - 1)):
            y0, y1 = ys[i], ys[i + 1]
            if min(y0, y1) <= target <= max(y0, y1) and y1 != y0:
                return xs[i] + (target - y0) * (xs[i + 1] - xs[i]) / (y1 - y0)
    raise AssertionError("no rising-branch inverse")


def constants_from_definitions(profile, tau, critical):
    """Recompute every certificate constant straight from its definition."""
    s_min, s_max = profile.extrema
    inv = 1.0 / critical.lambda_eq_max
    x_min = 1.0 - math.exp(-s_min / tau)
    x_tilde = x_min * math.exp((s_min - inv) / tau)
    x_l1 = min(x_min, x_tilde)
    x_u1 = invert_rising_branch(profile, inv, critical.x_th)
    shrink = math.exp(-2.0 / (tau * critical.lambda_eq_max))
    x_u2 = 1.0 - (1.0 - x_l1) * shrink
    x_l2 = x_u2 * shrink
    x_lo = min(x_l1, x_l2)
    x_hi = max((1.0 + x_u1) / 2.0, x_u2)
    return {
        "x_min": x_min,
        "x_l1": x_l1,
        "x_l2": x_l2,
        "x_u1": x_u1,
        "x_u2": x_u2,
        "x_lo": x_lo,
        "x_hi": x_hi,
        "c1": -tau * math.log(x_lo),
        "c2": -tau * math.log(1.0 - x_hi),
        "c_total": -tau * math.log(x_lo) - tau * math.log(1.0 - x_hi) + s_max,
    }


class TestCycleTimeFloor:
    def test_floor_at_post_service_state(self, ref_profile):
        s_min = ref_profile.s_min
        x_min = 1.0 - math.exp(-s_min / TAU)
        assert cycle_time_floor(x_min, ref_profile, TAU) == pytest.approx(
            s_min, abs=1e-12
        )

    def test_infinite_at_zero(self, ref_profile):
        assert cycle_time_floor(0.0, ref_profile, TAU) == math.inf

    def test_strictly_decreasing(self, ref_profile):
        xs = np.linspace(1e-4, 1.0, 300)
        vals = [cycle_time_floor(float(x), ref_profile, TAU) for x in xs]
        assert all(b < a for a, b in zip(vals, vals[1:]))


class TestComputeConstants:
    def test_matches_definitional_recomputation(self, profile_matrix):
        for profile in profile_matrix:
            critical = critical_rate(profile, TAU)
            if critical.degenerate:
                continue
            constants = compute_constants(profile, TAU, critical)
            expected = constants_from_definitions(profile, TAU, critical)
            for name, value in expected.items():
                assert getattr(constants, name) == pytest.approx(
                    value, abs=1e-9
                ), f"{profile.family}{profile.params}: {name}"

    def test_band_strictly_inside_unit_interval(self, profile_matrix):
        for profile in profile_matrix:
            critical = critical_rate(profile, TAU)
            if critical.degenerate:
                continue
            c = compute_constants(profile, TAU, critical)
            assert 0.0 < c.x_lo < c.x_hi < 1.0
            assert c.c1 > 0.0 and c.c2 > 0.0
            assert c.c_total == c.c1 + c.c2 + profile.s_max

    def test_service_time_crossing(self, profile_matrix):
        for profile in profile_matrix:
            critical = critical_rate(profile, TAU)
            if critical.degenerate:
                continue
            c = compute_constants(profile, TAU, critical)
            inv = 1.0 / critical.lambda_eq_max
            assert profile.value(c.x_u1) == pytest.approx(inv, abs=1e-9)
            assert c.x_u1 >= critical.x_th
            assert profile.value(1.0) > inv

    def test_degenerate_refused(self):
        p = ServiceProfile("constant", (2.0,))
        critical = critical_rate(p, TAU)
        with pytest.raises(DegenerateThresholdError):
            compute_constants(p, TAU, critical)


class TestBandCaseBounds:
    """Sampled service cycles in each band case take longer than the
    critical period, which is what makes the band must-visit."""

    def test_both_below_band(self, ref_profile, ref_critical):
        c = compute_constants(ref_profile, TAU, ref_critical)
        inv = 1.0 / ref_critical.lambda_eq_max
        rng = np.random.default_rng(31)
        for _ in range(50):
            x_i = float(rng.uniform(0.0, c.x_lo))
            x_next = float(rng.uniform(1e-6, c.x_lo))
            x_end = busy_update(x_i, ref_profile.value(x_i), TAU)
            assert x_end >= x_next
            total = ref_profile.value(x_i) + TAU * math.log(x_end / x_next)
            assert total > inv

    def test_both_above_band(self, ref_profile, ref_critical):
        c = compute_constants(ref_profile, TAU, ref_critical)
        inv = 1.0 / ref_critical.lambda_eq_max
        rng = np.random.default_rng(32)
        for x in rng.uniform(c.x_hi, 1.0, size=50):
            assert ref_profile.value(float(x)) > inv

    def test_climb_across_band(self, ref_profile, ref_critical):
        # from below the band to above it, the busy climb alone exceeds
        # two critical periods
        c = compute_constants(ref_profile, TAU, ref_critical)
        inv = 1.0 / ref_critical.lambda_eq_max
        rng = np.random.default_rng(33)
        for _ in range(50):
            x_i = float(rng.uniform(0.0, c.x_lo))
            x_next = float(rng.uniform(c.x_hi, 1.0 - 1e-9))
            climb = TAU * math.log((1.0 - x_i) / (1.0 - x_next))
            assert climb > 2.0 * inv

    def test_fall_across_band(self, ref_profile, ref_critical):
        # from above the band to below it, the idle fall alone exceeds
        # two critical periods
        c = compute_constants(ref_profile, TAU, ref_critical)
        inv = 1.0 / ref_critical.lambda_eq_max
        rng = np.random.default_rng(34)
        for _ in range(50):
            x_end = float(rng.uniform(c.x_hi, 1.0))
            x_next = float(rng.uniform(1e-9, c.x_lo))
            fall = TAU * math.log(x_end / x_next)
            assert fall > 2.0 * inv


class TestQueueUpperBound:
    def test_start_at_threshold(self, ref_profile, ref_critical):
        qb = queue_upper_bound(
            ref_profile, TAU, 0.5, ref_critical, ref_critical.x_th, 5
        )
        assert qb.n_t1 == 4
        assert qb.bound == qb.n_t1 + qb.climb_increment + qb.idle_increment

    def test_start_below_threshold(self, ref_profile, ref_critical):
        for x0 in (0.0, 0.3, ref_critical.x_th):
            qb = queue_upper_bound(ref_profile, TAU, 0.5, ref_critical, x0, 7)
            assert qb.n_t1 == 6
        qb = queue_upper_bound(ref_profile, TAU, 0.5, ref_critical, 0.1, 0)
        assert qb.n_t1 == 0

    def test_start_above_threshold_counts_decay_arrivals(
        self, ref_profile, ref_critical
    ):
        lam = 0.7
        x0 = 1.0
        qb = queue_upper_bound(ref_profile, TAU, lam, ref_critical, x0, 10)
        expected = 9 + math.floor(lam * TAU * math.log(x0 / ref_critical.x_th))
        assert qb.n_t1 == max(0, 9, expected)

    def test_overload_refused(self, ref_profile, ref_critical):
        with pytest.raises(ValidationError):
            queue_upper_bound(
                ref_profile, TAU, 1.01 * ref_critical.lambda_eq_max,
                ref_critical, 0.0, 0,
            )

    def test_degenerate_refused(self):
        p = ServiceProfile("constant", (2.0,))
        critical = critical_rate(p, TAU)
        with pytest.raises(DegenerateThresholdError):
            queue_upper_bound(p, TAU, 0.4, critical, 0.0, 0)


class TestOverloadLowerBound:
    def test_zero_gap(self, ref_profile, ref_critical):
        c = compute_constants(ref_profile, TAU, ref_critical)
        lam = 1.2 * ref_critical.lambda_eq_max
        got = overload_lower_bound(c, lam, ref_critical.lambda_eq_max, 9, 0)
        assert got == pytest.approx(9 - lam * c.c_total, rel=1e-12)

    def test_linear_in_index_gap(self, ref_profile, ref_critical):
        c = compute_constants(ref_profile, TAU, ref_critical)
        lam_star = ref_critical.lambda_eq_max
        lam = 1.1 * lam_star
        slope = (
            overload_lower_bound(c, lam, lam_star, 4, 1001)
            - overload_lower_bound(c, lam, lam_star, 4, 1)
        ) / 1000.0
        assert slope == pytest.approx(lam / lam_star - 1.0, rel=1e-9)

    def test_underload_refused(self, ref_profile, ref_critical):
        c = compute_constants(ref_profile, TAU, ref_critical)
        with pytest.raises(ValidationError):
            overload_lower_bound(
                c, 0.9 * ref_critical.lambda_eq_max,
                ref_critical.lambda_eq_max, 3, 10,
            )


class TestClassify:
    def test_short_run_inconclusive(self, ref_profile, ref_critical):
        cfg = SimConfig(lam=0.5, tau=TAU, x0=0.0, n0=2, horizon_tasks=2)
        tr = run(cfg, ref_profile, PolicySpec("always_on"))
        verdict = classify(tr, ref_profile, TAU, 0.5, ref_critical)
        assert verdict.verdict == "inconclusive"

    def test_stable_threshold_run_uses_queue_bound(self, ref_profile, ref_critical):
        lam = 0.9 * ref_critical.lambda_eq_max
        cfg = SimConfig(lam=lam, tau=TAU, x0=0.0, n0=0, horizon_tasks=2000,
                        record_granularity="service_starts")
        tr = run(cfg, ref_profile, PolicySpec("threshold", ref_critical.x_th))
        verdict = classify(tr, ref_profile, TAU, lam, ref_critical)
        assert verdict.verdict == "stable"
        assert verdict.evidence["certificate"] == "queue_bound"

    def test_stable_via_slope_for_other_thresholds(self, ref_profile, ref_critical):
        lam = 0.5 * ref_critical.lambda_eq_max
        cfg = SimConfig(lam=lam, tau=TAU, x0=0.0, n0=0, horizon_tasks=2000,
                        record_granularity="service_starts")
        tr = run(cfg, ref_profile, PolicySpec("always_on"))
        verdict = classify(tr, ref_profile, TAU, lam, ref_critical)
        assert verdict.verdict == "stable"
        assert verdict.evidence["certificate"] == "growth_slope"

    def test_overloaded_threshold_run_unstable(self, ref_profile, ref_critical):
        lam = 1.05 * ref_critical.lambda_eq_max
        cfg = SimConfig(lam=lam, tau=TAU, x0=ref_critical.x_th, n0=0,
                        horizon_tasks=5000, record_granularity="service_starts")
        tr = run(cfg, ref_profile, PolicySpec("threshold", ref_critical.x_th))
        verdict = classify(tr, ref_profile, TAU, lam, ref_critical)
        assert verdict.verdict == "unstable"
        assert verdict.evidence["growth_rate"] >= verdict.evidence["unstable_floor"]

    def test_overloaded_always_on_unstable(self, ref_profile, ref_critical):
        lam = 1.2 * ref_critical.lambda_eq_max
        cfg = SimConfig(lam=lam, tau=TAU, x0=0.0, n0=0, horizon_tasks=5000,
                        record_granularity="service_starts")
        tr = run(cfg, ref_profile, PolicySpec("always_on"))
        verdict = classify(tr, ref_profile, TAU, lam, ref_critical)
        assert verdict.verdict == "unstable"
