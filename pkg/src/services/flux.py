"""
Diffusion nonlinearities Phi, their inverses g and the admissible slope domains.

Saturated limiters follow the Larson family Phi(s) = mu s / (1 + |mu s / c|^p)^(1/p); the
relativistic limiter is the member p = 2.
"""

import math

import numpy as np
from scipy.integrate import quad

from data.entities import FluxLimiter, LimiterKind
from data.errors import ConfigurationError, DomainError

THETA_CLIP = 1e-12


def _exponent_(lim: FluxLimiter) -> float:
    """
    :param lim: Saturated limiter
    :return: 2 for the relativistic limiter, p for Larson
    """
    return 2.0 if lim.kind == LimiterKind.RELATIVISTIC else float(lim.p)


def phi(lim: FluxLimiter, s):
    """
    Evaluates Phi(s)
    :param lim: Flux limiter
    :param s: Slope, scalar or array
    :return: Phi(s)
    """
    s = np.asarray(s, dtype=float)
    if not lim.saturated:
        return lim.mu * s
    x = np.abs(lim.mu * s / lim.c)
    # divide through by the larger term so large slopes stay finite
    p = _exponent_(lim)
    with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
        big = x > 1.0
        small = lim.mu * s / np.power(1.0 + np.power(x, p), 1.0 / p)
        large = np.sign(s) * lim.c / np.power(1.0 + np.power(x, -p), 1.0 / p)
    return np.where(big, large, small)


def g_inverse(lim: FluxLimiter, y):
    """
    Evaluates g = Phi^-1
    :param lim: Flux limiter
    :param y: Flux value, scalar or array
    :return: g(y)
    :raise DomainError: |y| >= c for a saturated limiter
    """
    y = np.asarray(y, dtype=float)
    if not lim.saturated:
        return y / lim.mu
    r = np.abs(y) / lim.c
    if np.any(~(r < 1.0)):
        raise DomainError(f'flux value {y} outside (-{lim.c}, {lim.c})')
    if lim.kind == LimiterKind.RELATIVISTIC:
        return lim.c * y / (lim.mu * np.sqrt((lim.c - y) * (lim.c + y)))
    with np.errstate(divide='ignore'):
        gap = -np.expm1(lim.p * np.log(r))
    return y / (lim.mu * np.power(gap, 1.0 / lim.p))


def g_prime(lim: FluxLimiter, y):
    """
    Derivative of the inverse flux, (1/mu)(1 - |y/c|^p)^(-1 - 1/p)
    :param lim: Flux limiter
    :param y: Flux value
    :return: g'(y)
    :raise DomainError: |y| >= c for a saturated limiter
    """
    y = np.asarray(y, dtype=float)
    if not lim.saturated:
        return np.full_like(y, 1.0 / lim.mu)
    r = np.abs(y) / lim.c
    if np.any(~(r < 1.0)):
        raise DomainError(f'flux value {y} outside (-{lim.c}, {lim.c})')
    p = _exponent_(lim)
    return np.power(1.0 - np.power(r, p), -1.0 - 1.0 / p) / lim.mu


def slope_domain(lim: FluxLimiter, a: float, sigma: float) -> tuple[float, float]:
    """
    Open interval of v on which g(a v - sigma) is defined
    :param lim: Flux limiter
    :param a: Chemotactic coefficient
    :param sigma: Wave speed
    :return: (low, high), infinite for the linear limiter
    """
    if not lim.saturated:
        return -math.inf, math.inf
    return (sigma - lim.c) / a, (sigma + lim.c) / a


def clip_angle(theta):
    """
    Keeps an angle strictly inside (-pi/2, pi/2)
    :param theta: Angle
    :return: Clipped angle
    """
    edge = 0.5 * math.pi - THETA_CLIP
    return np.clip(theta, -edge, edge)


def angle_flux(lim: FluxLimiter, theta):
    """
    g(c sin theta) cos theta, finite up to theta = +-pi/2 for p >= 2
    :param lim: Saturated flux limiter
    :param theta: Angle in [-pi/2, pi/2]
    :return: Value
    """
    if not lim.saturated:
        raise ConfigurationError('angle parametrisation needs a saturated limiter')
    theta = clip_angle(np.asarray(theta, dtype=float))
    sin = np.sin(theta)
    cos = np.cos(theta)
    if lim.kind == LimiterKind.RELATIVISTIC:
        return lim.c * sin / lim.mu
    p = lim.p
    abs_sin = np.abs(sin)
    with np.errstate(divide='ignore', invalid='ignore'):
        # 1 - |sin|^p written through cos^2 so it keeps precision near the boundary
        near = -np.expm1(0.5 * p * np.log1p(-cos * cos))
    gap = np.where(abs_sin < 0.5, 1.0 - np.power(abs_sin, p), near)
    return lim.c * sin * cos / (lim.mu * np.power(gap, 1.0 / p))


def g_integral(lim: FluxLimiter, eps: float) -> float:
    """
    Quadrature of g over (0, c - eps)
    :param lim: Saturated flux limiter
    :param eps: Distance to the flux boundary
    :return: Integral value
    """
    if not lim.saturated:
        raise ConfigurationError('g is not integrable up to a boundary for the linear limiter')
    if not 0 < eps < lim.c:
        raise ConfigurationError(f'eps must lie in (0, c), got {eps}')
    value, _ = quad(lambda y: float(g_inverse(lim, y)), 0.0, lim.c - eps, limit=200)
    return value
