"""
Pytest Fixtures
"""

import pytest

from data.config import Controls
from data.entities import FluxLimiter, LimiterKind, ModelParams
from services.integrate import IntegrationService
from services.phase import PhaseService
from services.profiles import ProfileService
from services.shooting import ShootingService


@pytest.fixture
def relativistic() -> FluxLimiter:
    """
    Returns the relativistic limiter with unit viscosity and speed
    """

    return FluxLimiter(kind=LimiterKind.RELATIVISTIC, mu=1.0, c=1.0)


@pytest.fixture(scope='module')
def fast_controls() -> Controls:
    """
    Controls with a shorter span for runs that end Bounded
    """

    return Controls(rtol=1e-9, atol=1e-11, s_max=200.0)


@pytest.fixture(scope='module')
def case_b() -> ModelParams:
    """
    Linear limiter, a < 1 and sigma above sigma_star
    """

    return ModelParams(a=0.5, sigma=1.0, gamma=1.0, lambda_=1.0)


@pytest.fixture(scope='module')
def case_a() -> ModelParams:
    """
    Linear limiter, a < 1 and sigma below sigma_star
    """

    return ModelParams(a=0.5, sigma=0.25, gamma=1.0, lambda_=1.0)


@pytest.fixture(scope='module')
def case_d() -> ModelParams:
    """
    Linear limiter, a > 1 and sigma below sigma_star
    """

    return ModelParams(a=2.0, sigma=0.5, gamma=1.0, lambda_=1.0)


@pytest.fixture(scope='module')
def case_c() -> ModelParams:
    """
    Linear limiter with a = 1
    """

    return ModelParams(a=1.0, sigma=1.0, gamma=1.0, lambda_=1.0)


@pytest.fixture(scope='module')
def saturated_above() -> ModelParams:
    """
    Relativistic limiter for a front above the parabola
    """

    limiter = FluxLimiter(kind=LimiterKind.RELATIVISTIC, mu=1.0, c=1.0)
    return ModelParams(a=1.0, sigma=0.5, gamma=1.0, lambda_=1.0, limiter=limiter)


@pytest.fixture(scope='module')
def saturated_below() -> ModelParams:
    """
    Relativistic limiter whose slope domain sits inside (-v_star, v_star)
    """

    limiter = FluxLimiter(kind=LimiterKind.RELATIVISTIC, mu=1.0, c=1.0)
    return ModelParams(a=2.0, sigma=0.1, gamma=1.0, lambda_=4.0, limiter=limiter)


@pytest.fixture(scope='module')
def phase_service(case_d) -> PhaseService:
    """
    Registers a Phase Service for case D
    """

    return PhaseService(case_d)


@pytest.fixture(scope='module')
def integration_service(case_b) -> IntegrationService:
    """
    Registers an Integration Service for case B
    """

    return IntegrationService(case_b)


@pytest.fixture(scope='module')
def shooting_service(case_b) -> ShootingService:
    """
    Registers a Shooting Service for case B
    """

    return ShootingService(case_b)


@pytest.fixture(scope='module')
def threshold(shooting_service):
    """
    Threshold at v0 = 2 for case B, computed once per module
    """

    return shooting_service.find_w0_star(2.0)


@pytest.fixture(scope='module')
def profile_service(case_b) -> ProfileService:
    """
    Registers a Profile Service for case B
    """

    return ProfileService(case_b)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    """
    Points the output directory at a temporary folder
    """

    monkeypatch.setenv('WAVE_SOLVER_OUT', str(tmp_path))
    return tmp_path
