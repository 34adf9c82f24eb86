"""
Tests for the flux limiters
"""

import math

import numpy as np
from assertpy import assert_that

from data.entities import FluxLimiter, LimiterKind
from data.errors import ConfigurationError, DomainError
from services.flux import angle_flux, g_integral, g_inverse, g_prime, phi, slope_domain


def test_phi_values(relativistic):
    """
    Tests Phi at known points
    """

    assert_that(float(phi(relativistic, 0.0))).is_equal_to(0.0)
    assert_that(float(phi(relativistic, 0.75))).is_close_to(0.6, 1e-15)
    assert_that(float(phi(FluxLimiter(mu=2.0), 3.0))).is_equal_to(6.0)


def test_phi_saturates():
    """
    Tests |Phi| stays below c for large slopes
    """

    for kind, p in ((LimiterKind.RELATIVISTIC, 2.0), (LimiterKind.LARSON, 3.0)):
        limiter = FluxLimiter(kind=kind, mu=1.0, c=2.0, p=p)
        values = phi(limiter, np.array([-1e3, -10.0, 10.0, 1e3]))
        assert_that(bool(np.all(np.abs(values) < 2.0))).is_true()
        assert_that(float(values[0])).is_equal_to(-float(values[-1]))

        extreme = phi(limiter, np.array([-1e300, 1e300]))
        assert_that(bool(np.all(np.isfinite(extreme)))).is_true()
        assert_that(bool(np.all(np.abs(extreme) <= 2.0))).is_true()


def test_g_inverse_values(relativistic):
    """
    Tests the inverse at known points
    """

    assert_that(float(g_inverse(relativistic, 0.6))).is_close_to(0.75, 1e-14)
    assert_that(float(g_inverse(relativistic, 0.0))).is_equal_to(0.0)

    result = float(g_inverse(relativistic, 0.9999))
    assert_that(result).is_greater_than(50.0)
    assert_that(float(phi(relativistic, result))).is_close_to(0.9999, 1e-10)
    assert_that(float(g_inverse(FluxLimiter(mu=2.0), 3.0))).is_equal_to(1.5)


def test_g_inverse_domain(relativistic):
    """
    Tests flux values on or beyond c are rejected
    """

    assert_that(g_inverse).raises(DomainError).when_called_with(relativistic, 1.0)
    assert_that(g_inverse).raises(DomainError).when_called_with(relativistic, -1.5)
    assert_that(g_inverse).raises(DomainError).when_called_with(
        relativistic, np.array([0.0, 0.5, 1.0])
    )
    assert_that(g_prime).raises(DomainError).when_called_with(relativistic, 1.0)


def test_round_trip():
    """
    Tests Phi(g(y)) = y, oddness and monotonicity on sampled flux values
    """

    rng = np.random.default_rng(42)
    for kind, p in ((LimiterKind.RELATIVISTIC, 2.0), (LimiterKind.LARSON, 3.0),
                    (LimiterKind.LARSON, 1.5), (LimiterKind.LINEAR, 2.0)):
        limiter = FluxLimiter(kind=kind, mu=1.5, c=2.0, p=p)
        y = np.sort(rng.uniform(-0.999, 0.999, 1000) * 2.0)
        g = g_inverse(limiter, y)

        error = np.abs(phi(limiter, g) - y) / np.maximum(1.0, np.abs(y))
        assert_that(float(error.max())).is_less_than_or_equal_to(1e-10)
        assert_that(bool(np.all(g_inverse(limiter, -y) == -g))).is_true()
        assert_that(bool(np.all(np.diff(g) > 0))).is_true()


def test_g_prime():
    """
    Tests the derivative against central differences
    """

    limiter = FluxLimiter(kind=LimiterKind.LARSON, mu=1.0, c=1.0, p=3.0)
    y = np.array([-0.9, -0.3, 0.0, 0.5, 0.95])
    h = 1e-6
    numeric = (g_inverse(limiter, y + h) - g_inverse(limiter, y - h)) / (2 * h)
    assert_that(float(np.max(np.abs(g_prime(limiter, y) / numeric - 1.0)))).is_less_than(1e-6)
    assert_that(float(g_prime(FluxLimiter(mu=4.0), 0.3))).is_equal_to(0.25)


def test_slope_domain():
    """
    Tests the admissible interval of v
    """

    assert_that(slope_domain(FluxLimiter(kind='relativistic', c=1.0), 1.0, 0.5)).is_equal_to(
        (-0.5, 1.5)
    )
    assert_that(slope_domain(FluxLimiter(kind='relativistic', c=2.0), 2.0, 1.0)).is_equal_to(
        (-0.5, 1.5)
    )
    assert_that(slope_domain(FluxLimiter(), 1.0, 0.5)).is_equal_to((-math.inf, math.inf))


def test_angle_flux():
    """
    Tests g(c sin theta) cos theta inside the domain and its finite limit at the boundary
    """

    for kind in (LimiterKind.RELATIVISTIC, LimiterKind.LARSON):
        limiter = FluxLimiter(kind=kind, mu=1.0, c=2.0, p=3.0)
        theta = np.array([-1.2, -0.4, 0.0, 0.3, 1.1])
        expected = g_inverse(limiter, 2.0 * np.sin(theta)) * np.cos(theta)
        assert_that(float(np.max(np.abs(angle_flux(limiter, theta) - expected)))).is_less_than(
            1e-12
        )
        edge = float(angle_flux(limiter, 0.5 * math.pi))
        assert_that(math.isfinite(edge)).is_true()

    assert_that(angle_flux).raises(ConfigurationError).when_called_with(FluxLimiter(), 0.1)


def test_g_integrable():
    """
    Tests the integral of g up to the boundary converges for saturated limiters
    """

    for limiter in (FluxLimiter(kind='relativistic', mu=1.0, c=4.0),
                    FluxLimiter(kind='larson', mu=1.0, c=1.0, p=3.0)):
        coarse = g_integral(limiter, 1e-4)
        fine = g_integral(limiter, 1e-6)
        assert_that(abs(fine - coarse) / fine).is_less_than(1e-2)

    assert_that(g_integral).raises(ConfigurationError).when_called_with(FluxLimiter(), 1e-4)
