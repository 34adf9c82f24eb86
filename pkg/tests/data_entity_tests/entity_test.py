"""
Tests for the Data Entities
"""

import math

import numpy as np
from assertpy import assert_that

from data.entities import (
    Direction,
    EndpointSlopes,
    Equilibrium,
    FluxLimiter,
    LimiterKind,
    ModelParams,
    SlopeKind,
    StabilityLabel,
    TerminationEvent,
    TerminationKind,
    ThresholdResult,
    Trajectory,
)
from data.errors import ConfigurationError


def test_copy_item():
    """
    Tests Copying the items
    """
    params = ModelParams(a=0.5, sigma=1.0, gamma=2.0, lambda_=3.0)
    result = params.copy()
    assert_that(result).has_a(0.5).has_sigma(1.0).has_gamma(2.0).has_lambda_(3.0)
    assert_that(result.limiter).is_not_same_as(params.limiter)


def test_copy_with_update():
    """
    Tests Copying the item with update
    """

    params = ModelParams(a=0.5, sigma=1.0, gamma=1.0, lambda_=1.0)

    result = params.copy(update={'sigma': 0.25})
    assert_that(result).has_a(0.5).has_sigma(0.25)
    assert_that(params).has_sigma(1.0)


def test_copy_item_with_extra_fields():
    """
    Tests copying an item with extra fields in the update
    """

    params = ModelParams()
    result = params.copy(update={'a': 2.0, 'chicken': 'wing'})

    assert_that(result).has_a(2.0)
    assert_that(result.__dict__).does_not_contain_key('chicken')


def test_copy_item_with_none_entries():
    """
    Tests Copying an item with None updates for a populated field
    """

    params = ModelParams(a=0.5, sigma=1.0)
    result = params.copy(update={'a': 2.0, 'sigma': None})
    assert_that(result).has_a(2.0).has_sigma(1.0)


def test_copy_revalidates():
    """
    Tests an update breaking a constraint is rejected
    """

    params = ModelParams()
    assert_that(params.copy).raises(ConfigurationError).when_called_with(update={'gamma': -1.0})


def test_params_validation():
    """
    Tests the positivity constraints at construction
    """

    assert_that(ModelParams).raises(ConfigurationError).when_called_with(a=0.0)
    assert_that(ModelParams).raises(ConfigurationError).when_called_with(sigma=-1.0)
    assert_that(ModelParams).raises(ConfigurationError).when_called_with(lambda_=-0.1)
    assert_that(ModelParams).raises(ConfigurationError).when_called_with(a=math.nan)
    assert_that(ModelParams(lambda_=0.0).v_star).is_equal_to(0.0)


def test_limiter_validation():
    """
    Tests limiter constraints and coercion from strings and dictionaries
    """

    assert_that(FluxLimiter).raises(ConfigurationError).when_called_with(mu=0.0)
    assert_that(FluxLimiter).raises(ConfigurationError).when_called_with(kind='larson', p=1.0)
    assert_that(FluxLimiter).raises(ValueError).when_called_with(kind='wilson')

    params = ModelParams(limiter={'kind': 'relativistic', 'mu': 1.0, 'c': 2.0})
    assert_that(params.limiter).has_kind(LimiterKind.RELATIVISTIC).has_c(2.0)
    assert_that(params.limiter.saturated).is_true()
    assert_that(FluxLimiter().saturated).is_false()


def test_derived_speeds():
    """
    Tests v_star and sigma_star
    """

    params = ModelParams(a=0.5, sigma=0.25, gamma=1.0, lambda_=4.0)
    assert_that(params.v_star).is_close_to(2.0, 1e-15)
    assert_that(params.sigma_star).is_close_to(1.0, 1e-15)
    assert_that(params.at_critical_speed()).is_false()
    assert_that(params.copy(update={'sigma': 1.0}).at_critical_speed()).is_true()

    viscous = params.copy(update={'limiter': FluxLimiter(mu=2.0)})
    assert_that(viscous.sigma_star).is_close_to(3.0, 1e-15)


def test_params_to_dict():
    """
    Tests the JSON record of the parameters
    """

    limiter = FluxLimiter(kind='larson', c=2.0, p=3.0)
    result = ModelParams(a=2.0, sigma=1.0, limiter=limiter).to_dict()
    assert_that(result).contains_entry({'lambda': 1.0}).contains_entry({'a': 2.0})
    assert_that(result['limiter']).is_equal_to({'kind': 'larson', 'mu': 1.0, 'c': 2.0, 'p': 3.0})
    assert_that(ModelParams().to_dict()['limiter']).is_equal_to({'kind': 'linear', 'mu': 1.0})


def test_equilibrium_record():
    """
    Tests the JSON record of an equilibrium
    """

    item = Equilibrium(w=0.0, v=1.0, eigenvalues=(0.5 + 0j, -2 + 0j), label=StabilityLabel.SADDLE)
    result = item.to_record()
    assert_that(result).is_equal_to(
        {'w': 0.0, 'v': 1.0, 'eigenvalues': [[0.5, 0.0], [-2.0, 0.0]], 'label': 'Saddle'}
    )


def test_trajectory_termination():
    """
    Tests the termination follows the direction of integration
    """

    lower = TerminationEvent(TerminationKind.V_BLOW_UP_PLUS, -1.0)
    upper = TerminationEvent(TerminationKind.CONVERGED, 5.0, 0)
    traj = Trajectory(s=np.linspace(-1, 5, 7), lower=lower, upper=upper)

    assert_that(traj.termination).is_same_as(upper)
    assert_that(traj.copy(update={'direction': Direction.BACKWARD}).termination).is_equal_to(lower)
    assert_that(len(traj)).is_equal_to(7)
    assert_that(upper.to_dict()).is_equal_to(
        {'kind': 'ConvergedToEquilibrium', 's': 5.0, 'equilibrium_index': 0}
    )


def test_serialised_results():
    """
    Tests the JSON records of thresholds and slopes
    """

    result = ThresholdResult(v0=2.0, w0_star=0.5, bracket=(0.49, 0.51)).to_dict()
    assert_that(result).contains_entry({'method': 'Bisection'}).contains_entry(
        {'bracket': [0.49, 0.51]}
    )

    slopes = EndpointSlopes(u_prime_at_s_minus=SlopeKind.PLUS_INFINITY, exponent_minus=0.5)
    assert_that(slopes.to_dict()).contains_entry({'u_prime_at_s_minus': '+inf'}).contains_entry(
        {'exponent_minus': 0.5}
    ).contains_entry({'u_prime_at_s_plus': None})
