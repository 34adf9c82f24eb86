"""
Error hierarchy for the wave solver
"""


class WaveSolverError(Exception):
    """
    Base class of every solver error
    """

    exit_code: int = 1


class ConfigurationError(WaveSolverError):
    """
    Invalid parameters, malformed configuration or empty grids
    """

    exit_code = 2


class CriticalSpeedError(ConfigurationError):
    """
    Threshold requested at the degenerate speed sigma = sigma_star
    """


class AnchorMismatch(ConfigurationError):
    """
    The anchor u0 / S0 does not match w at s0
    """


class NumericalError(WaveSolverError):
    """
    Base class of failures raised while computing
    """

    exit_code = 3


class DomainError(NumericalError):
    """
    Argument outside the domain of the inverse flux
    """


class DegenerateError(NumericalError):
    """
    Zero eigenvalue at an equilibrium
    """


class StepSizeUnderflow(NumericalError):
    """
    The step size controller cannot meet the tolerance
    """


class DenominatorVanished(NumericalError):
    """
    Graph system reached the parabola w = lambda - gamma v^2
    """


class SignChange(NumericalError):
    """
    v' changes sign on the requested v interval
    """


class Inconclusive(NumericalError):
    """
    Trajectory hit the span limit without a recognisable signature
    """


class SeedEscaped(NumericalError):
    """
    Neither seed along the stable eigenvector reached the target
    """


class NoDichotomy(NumericalError):
    """
    Both bracket ends classify identically after expansion
    """


class InsufficientResolution(NumericalError):
    """
    Too few samples in a fitting window
    """


class RegimeViolation(NumericalError):
    """
    Precondition of a saturated front failed during the computation
    """
