"""
Tests for the Shooting Service
"""

import math

import numpy as np
import pytest
from assertpy import assert_that

from data.config import Controls
from data.entities import ModelParams, ThresholdMethod, TrajectoryClass
from data.errors import ConfigurationError, CriticalSpeedError, NoDichotomy
from services.shooting import ShootingService


def test_classify_escape(shooting_service):
    """
    Tests a large w0 escapes below
    """

    result = shooting_service.classify_trajectory(1e3, 2.0)
    assert_that(result).has_kind(TrajectoryClass.ESCAPES_BELOW)
    assert_that(result.equilibrium).is_none()
    assert_that(shooting_service.escapes(1e3, 2.0)).is_true()


def test_classify_convergence(shooting_service):
    """
    Tests a small w0 converges to (0, v_star)
    """

    result = shooting_service.classify_trajectory(1e-6, 2.0)
    assert_that(result).has_kind(TrajectoryClass.CONVERGES_TO)
    assert_that(result.equilibrium).has_w(0.0).has_v(1.0)
    assert_that(shooting_service.escapes(1e-6, 2.0)).is_false()


def test_classify_parabola_entry(shooting_service):
    """
    Tests the parabola stop reports the entry
    """

    result = shooting_service.classify_trajectory(1e-2, 2.0, stop_at_parabola=True)
    assert_that(result).has_kind(TrajectoryClass.ENTERS_PARABOLA)


def test_classify_case_d(case_d, fast_controls):
    """
    Tests low seeds in case D stay bounded or settle on the interior focus
    """

    service = ShootingService(case_d, fast_controls)
    for w0, v0 in ((0.05, 0.0), (0.2, 0.3)):
        result = service.classify_trajectory(w0, v0)
        assert_that(result.kind).is_in(TrajectoryClass.BOUNDED, TrajectoryClass.CONVERGES_TO)
        if result.kind == TrajectoryClass.CONVERGES_TO:
            assert_that(result.equilibrium).has_w(0.75).has_v(0.5)


def test_threshold_both_methods(threshold):
    """
    Tests bisection and the manifold trace agree
    """

    assert_that(threshold).has_v0(2.0).has_method(ThresholdMethod.BOTH)
    assert_that(threshold.w0_star).is_greater_than(0.0)
    assert_that(abs(threshold.manifold_estimate / threshold.w0_star - 1.0)).is_less_than(1e-6)
    low, high = threshold.bracket
    assert_that(low).is_less_than_or_equal_to(threshold.w0_star)
    assert_that(high).is_greater_than_or_equal_to(threshold.w0_star)


def _check_dichotomy_(service: ShootingService, w0_star: float, seed: int) -> None:
    rng = np.random.default_rng(seed)
    factors = np.exp(rng.uniform(math.log(1.02), math.log(10.0), 20))
    signs = rng.choice([-1.0, 1.0], 20)
    for factor, sign in zip(factors, signs, strict=True):
        w0 = w0_star * factor**sign
        assert_that(service.escapes(w0, 2.0)).is_equal_to(bool(sign > 0))


def test_threshold_dichotomy(shooting_service, threshold):
    """
    Tests sampled w0 classify by their side of the threshold
    """

    _check_dichotomy_(shooting_service, threshold.w0_star, 7)


def test_manifold_seed(shooting_service):
    """
    Tests the seed lies on the stable eigenvector, steeper than the parabola
    """

    saddle, time_reversed = shooting_service.threshold_saddle(2.0)
    assert_that(saddle).has_w(0.0).has_v(-1.0)
    assert_that(time_reversed).is_false()

    w, v, vector = shooting_service.seed_point(saddle, 2.0)
    assert_that(v).is_greater_than(saddle.v)
    assert_that(w / (v - saddle.v)).is_close_to(vector[0], 1e-6)
    assert_that(vector[0]).is_close_to(2.5, 1e-10)
    assert_that(vector[0]).is_greater_than(2.0 * math.sqrt(1.0))

    flipped = shooting_service.seed_point(saddle, 2.0, flip=True)
    assert_that(flipped[1]).is_less_than(saddle.v)


def test_manifold_monotone(shooting_service, threshold):
    """
    Tests the manifold height grows with v0 and matches the threshold at v0 = 2
    """

    saddle, _ = shooting_service.threshold_saddle(2.0)
    lower = shooting_service.manifold_height(shooting_service.trace_stable_manifold(saddle, 2.0))
    upper = shooting_service.manifold_height(shooting_service.trace_stable_manifold(saddle, 3.0))

    assert_that(upper).is_greater_than(lower)
    assert_that(lower).is_close_to(threshold.w0_star, 1e-6 * threshold.w0_star)


def test_manifold_rejects_non_saddle(shooting_service):
    """
    Tests tracing from a node is rejected
    """

    node = shooting_service.integration.equilibria[0]
    assert_that(shooting_service.trace_stable_manifold).raises(
        ConfigurationError
    ).when_called_with(node, 2.0)


def test_threshold_below_axis(case_a):
    """
    Tests the threshold for v0 < -v_star separates blow-up from convergence to (0, -v_star)
    """

    service = ShootingService(case_a)
    saddle, time_reversed = service.threshold_saddle(-2.0)
    assert_that(saddle).has_w(0.75).has_v(-0.5)
    assert_that(time_reversed).is_true()

    result = service.find_w0_star(-2.0)
    assert_that(result.w0_star).is_greater_than(0.0)

    below = service.classify_trajectory(0.5 * result.w0_star, -2.0)
    assert_that(below).has_kind(TrajectoryClass.CONVERGES_TO)
    assert_that(below.equilibrium).has_w(0.0).has_v(-1.0)

    above = service.classify_trajectory(2.0 * result.w0_star, -2.0)
    assert_that(above.kind).is_in(TrajectoryClass.ESCAPES_ABOVE, TrajectoryClass.ESCAPES_BELOW)


def test_threshold_rejections(shooting_service, case_b):
    """
    Tests thresholds outside the shooting regimes are refused
    """

    critical = ShootingService(ModelParams(a=0.5, sigma=0.5, gamma=1.0, lambda_=1.0))
    assert_that(critical.find_w0_star).raises(CriticalSpeedError).when_called_with(2.0)
    assert_that(shooting_service.find_w0_star).raises(ConfigurationError).when_called_with(0.5)
    assert_that(shooting_service.find_w0_star).raises(ConfigurationError).when_called_with(-2.0)
    assert_that(shooting_service.find_w0_star).raises(ConfigurationError).when_called_with(
        2.0, (1.0, 0.5)
    )

    narrow = ShootingService(case_b, Controls(bracket_expansions=0))
    assert_that(narrow.find_w0_star).raises(NoDichotomy).when_called_with(2.0, (1e-3, 2e-3))


@pytest.mark.parametrize('a, sigma', [(0.25, 1.2), (2.0, 1.5)])
def test_threshold_other_parameters(a, sigma):
    """
    Tests both methods agree and sampled ratios fall on the correct side
    """

    service = ShootingService(ModelParams(a=a, sigma=sigma, gamma=1.0, lambda_=1.0))
    result = service.find_w0_star(2.0)

    assert_that(result).has_method(ThresholdMethod.BOTH)
    for factor in (1.05, 1.5):
        assert_that(service.escapes(result.w0_star * factor, 2.0)).is_true()
        assert_that(service.escapes(result.w0_star / factor, 2.0)).is_false()
    _check_dichotomy_(service, result.w0_star, 11)
