"""
Data Entities Module
"""

import copy
import math
from dataclasses import dataclass, field, fields
from enum import StrEnum

import numpy as np

from data.errors import ConfigurationError


class LimiterKind(StrEnum):
    """
    Flux nonlinearity family
    """

    LINEAR = 'linear'
    RELATIVISTIC = 'relativistic'
    LARSON = 'larson'


class StabilityLabel(StrEnum):
    """
    Linear stability of an equilibrium
    """

    STABLE_NODE = 'StableNode'
    UNSTABLE_NODE = 'UnstableNode'
    SADDLE = 'Saddle'
    STABLE_FOCUS = 'StableFocus'
    UNSTABLE_FOCUS = 'UnstableFocus'
    DEGENERATE = 'Degenerate'


class PhaseRegime(StrEnum):
    """
    Partition of the linear-diffusion parameter plane by a and sigma against sigma_star
    """

    A = 'A'
    B = 'B'
    C = 'C'
    D = 'D'
    E = 'E'
    CRITICAL = 'Critical'
    SATURATED = 'Saturated'


class Direction(StrEnum):
    """
    Direction of integration in s
    """

    FORWARD = 'forward'
    BACKWARD = 'backward'


class TerminationKind(StrEnum):
    """
    Reason an integration stopped
    """

    V_BLOW_UP_PLUS = 'VBlowUpPlus'
    V_BLOW_UP_MINUS = 'VBlowUpMinus'
    CONVERGED = 'ConvergedToEquilibrium'
    FLUX_BOUNDARY_LOW = 'FluxBoundaryLow'
    FLUX_BOUNDARY_HIGH = 'FluxBoundaryHigh'
    W_VANISHED = 'WVanished'
    MAX_SPAN = 'MaxSpan'
    BOUNDED = 'Bounded'
    V_TARGET = 'VTarget'
    PARABOLA_CROSSING = 'ParabolaCrossing'


class TrajectoryClass(StrEnum):
    """
    Qualitative fate of a trajectory
    """

    ESCAPES_BELOW = 'EscapesBelow'
    ESCAPES_ABOVE = 'EscapesAbove'
    ENTERS_PARABOLA = 'EntersParabola'
    CONVERGES_TO = 'ConvergesTo'
    BOUNDED = 'Bounded'


class ThresholdMethod(StrEnum):
    """
    How a threshold was obtained
    """

    MANIFOLD_TRACE = 'ManifoldTrace'
    BISECTION = 'Bisection'
    BOTH = 'Both'


class FrontBranch(StrEnum):
    """
    Side of the parabola a saturated front lives on
    """

    ABOVE = 'above'
    BELOW = 'below'


class ProfileType(StrEnum):
    """
    Shape taxonomy of u and S
    """

    A1 = 'A1'
    A2 = 'A2'
    A3 = 'A3'
    A4 = 'A4'
    SATURATED_FRONT_CONCAVE = 'SaturatedFrontConcave'
    SATURATED_FRONT_CONVEX = 'SaturatedFrontConvex'
    UNCLASSIFIED = 'Unclassified'


class SlopeKind(StrEnum):
    """
    One-sided slope of u at a finite endpoint
    """

    PLUS_INFINITY = '+inf'
    MINUS_INFINITY = '-inf'
    FINITE_POSITIVE = 'finite-positive'
    FINITE_NEGATIVE = 'finite-negative'
    ZERO = 'zero'


@dataclass
class BaseEntity:
    """
    Base Data Class
    """

    def validate(self) -> None:
        """
        Hook for field constraints, called after construction and after every copy
        :return: None
        """

    def __post_init__(self) -> None:
        self.validate()

    def copy(self, *, update: dict | None = None):
        """
        Creates a deep copy of the entity and performs an update of the provided fields
        :keyword update: Dictionary of keys to update
        :return: Copy of the entity
        """

        item = copy.deepcopy(self)
        if not update:
            return item

        upd = {k: v for k, v in update.items() if v is not None}
        for entry in upd.items():
            if entry[0] in item.__dict__:
                setattr(item, entry[0], entry[1])
        item.validate()
        return item


@dataclass
class FluxLimiter(BaseEntity):
    """
    Diffusion nonlinearity Phi with its inverse defined on the admissible slopes
    """

    kind: LimiterKind = LimiterKind.LINEAR
    mu: float = 1.0
    c: float = 1.0
    p: float = 2.0

    def validate(self) -> None:
        self.kind = LimiterKind(self.kind)
        if not self.mu > 0:
            raise ConfigurationError(f'limiter mu must be positive, got {self.mu}')
        if self.saturated and not self.c > 0:
            raise ConfigurationError(f'limiter c must be positive, got {self.c}')
        if self.kind == LimiterKind.LARSON and not self.p > 1:
            raise ConfigurationError(f'larson exponent p must exceed 1, got {self.p}')

    @property
    def saturated(self) -> bool:
        """
        True for limiters bounded by c
        """
        return self.kind != LimiterKind.LINEAR

    def to_dict(self) -> dict:
        """
        JSON record of the limiter
        :return: Dictionary
        """
        record: dict = {'kind': str(self.kind), 'mu': self.mu}
        if self.saturated:
            record['c'] = self.c
        if self.kind == LimiterKind.LARSON:
            record['p'] = self.p
        return record


@dataclass
class ModelParams(BaseEntity):
    """
    Parameter tuple (a, sigma, gamma, lambda) plus the flux limiter
    """

    a: float = 1.0
    sigma: float = 1.0
    gamma: float = 1.0
    lambda_: float = 1.0
    limiter: FluxLimiter = field(default_factory=FluxLimiter)

    def validate(self) -> None:
        for name in ('a', 'sigma', 'gamma'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f'{name} must be positive, got {value}')
        if not (math.isfinite(self.lambda_) and self.lambda_ >= 0):
            raise ConfigurationError(f'lambda must be non-negative, got {self.lambda_}')
        if isinstance(self.limiter, dict):
            self.limiter = FluxLimiter(**self.limiter)

    @property
    def v_star(self) -> float:
        """
        sqrt(lambda / gamma)
        """
        return math.sqrt(self.lambda_ / self.gamma)

    @property
    def sigma_star(self) -> float:
        """
        Critical speed |mu - a| v_star; |1 - a| v_star for the unit viscosity
        """
        return abs(self.limiter.mu - self.a) * self.v_star

    def at_critical_speed(self, rtol: float = 1e-9) -> bool:
        """
        Whether sigma sits on sigma_star within a relative tolerance
        :param rtol: Relative tolerance
        :return: Boolean
        """
        scale = max(self.sigma, self.sigma_star)
        return abs(self.sigma - self.sigma_star) <= rtol * scale

    def to_dict(self) -> dict:
        """
        JSON record of the parameters
        :return: Dictionary
        """
        return {
            'a': self.a,
            'sigma': self.sigma,
            'gamma': self.gamma,
            'lambda': self.lambda_,
            'limiter': self.limiter.to_dict(),
        }


@dataclass
class Equilibrium(BaseEntity):
    """
    Fixed point of the (w, v) system with its linearisation
    """

    w: float = 0.0
    v: float = 0.0
    eigenvalues: tuple[complex, complex] = (0j, 0j)
    eigenvectors: tuple[np.ndarray, np.ndarray] | None = None
    label: StabilityLabel = StabilityLabel.DEGENERATE

    def to_record(self) -> dict:
        """
        JSON record {w, v, eigenvalues, label}
        :return: Dictionary
        """
        return {
            'w': self.w,
            'v': self.v,
            'eigenvalues': [[x.real, x.imag] for x in self.eigenvalues],
            'label': str(self.label),
        }


@dataclass
class Nullclines(BaseEntity):
    """
    Sampled nullclines: the parabola where v' = 0 and the vertical lines where w' = 0
    """

    v: np.ndarray = field(default_factory=lambda: np.empty(0))
    parabola: np.ndarray = field(default_factory=lambda: np.empty(0))
    vertical_lines: tuple[float, ...] = ()


@dataclass
class TerminationEvent(BaseEntity):
    """
    Exit condition of an integration
    """

    kind: TerminationKind = TerminationKind.MAX_SPAN
    s: float = 0.0
    equilibrium_index: int | None = None

    def to_dict(self) -> dict:
        """
        JSON record of the event
        :return: Dictionary
        """
        return {'kind': str(self.kind), 's': self.s, 'equilibrium_index': self.equilibrium_index}


@dataclass
class Trajectory(BaseEntity):
    """
    Sampled path of the (w, v) system with I(s) = integral of v from s0
    """

    s: np.ndarray = field(default_factory=lambda: np.empty(0))
    w: np.ndarray = field(default_factory=lambda: np.empty(0))
    v: np.ndarray = field(default_factory=lambda: np.empty(0))
    I: np.ndarray = field(default_factory=lambda: np.empty(0))  # noqa: E741
    direction: Direction = Direction.FORWARD
    s0: float = 0.0
    lower: TerminationEvent | None = None
    upper: TerminationEvent | None = None
    s_minus: float | None = None
    s_plus: float | None = None

    @property
    def termination(self) -> TerminationEvent | None:
        """
        Event closing the run in its direction of integration
        """
        return self.upper if self.direction == Direction.FORWARD else self.lower

    def __len__(self) -> int:
        return int(self.s.size)


@dataclass
class GraphCurve(BaseEntity):
    """
    Orbit parametrised by v, sampled on an angle grid for saturated limiters
    """

    coordinate: np.ndarray = field(default_factory=lambda: np.empty(0))
    v: np.ndarray = field(default_factory=lambda: np.empty(0))
    W: np.ndarray = field(default_factory=lambda: np.empty(0))
    angular: bool = False


@dataclass
class Classification(BaseEntity):
    """
    Fate of a trajectory and the equilibrium it reaches, if any
    """

    kind: TrajectoryClass = TrajectoryClass.BOUNDED
    equilibrium: Equilibrium | None = None
    termination: TerminationEvent | None = None


@dataclass
class ThresholdResult(BaseEntity):
    """
    Critical w0 separating escaping and non-escaping trajectories at fixed v0
    """

    v0: float = 0.0
    w0_star: float = 0.0
    method: ThresholdMethod = ThresholdMethod.BISECTION
    bracket: tuple[float, float] = (0.0, 0.0)
    classifier_tol: float = 0.0
    manifold_estimate: float | None = None

    def to_dict(self) -> dict:
        """
        JSON record of the threshold
        :return: Dictionary
        """
        return {
            'v0': self.v0,
            'w0_star': self.w0_star,
            'method': str(self.method),
            'bracket': list(self.bracket),
            'classifier_tol': self.classifier_tol,
            'manifold_estimate': self.manifold_estimate,
        }


@dataclass
class EndpointSlopes(BaseEntity):
    """
    Slope categories of u and the signs of S' at the finite ends of the support
    """

    u_prime_at_s_minus: SlopeKind | None = None
    u_prime_at_s_plus: SlopeKind | None = None
    exponent_minus: float | None = None
    exponent_plus: float | None = None
    u_prime_minus_value: float | None = None
    u_prime_plus_value: float | None = None
    s_prime_at_s_minus: float | None = None
    s_prime_at_s_plus: float | None = None

    def to_dict(self) -> dict:
        """
        JSON record of the slopes
        :return: Dictionary
        """
        return {
            f.name: (str(getattr(self, f.name)) if isinstance(getattr(self, f.name), SlopeKind)
                     else getattr(self, f.name))
            for f in fields(self)
        }


@dataclass
class WaveProfile(BaseEntity):
    """
    Traveling-wave pair (u, S) over (s_minus, s_plus)
    """

    s: np.ndarray = field(default_factory=lambda: np.empty(0))
    u: np.ndarray = field(default_factory=lambda: np.empty(0))
    S: np.ndarray = field(default_factory=lambda: np.empty(0))
    w: np.ndarray = field(default_factory=lambda: np.empty(0))
    v: np.ndarray = field(default_factory=lambda: np.empty(0))
    s_minus: float = -math.inf
    s_plus: float = math.inf
    s0: float = 0.0
    S0: float = 1.0
    u0: float = 0.0
    u_type: ProfileType = ProfileType.UNCLASSIFIED
    S_type: ProfileType = ProfileType.UNCLASSIFIED
    endpoint_slopes: EndpointSlopes | None = None
    continuation: dict = field(default_factory=dict)
    lower: TerminationEvent | None = None
    upper: TerminationEvent | None = None

    @property
    def w0(self) -> float:
        """
        Anchor ratio u0 / S0
        """
        return self.u0 / self.S0
