"""
Critical shooting threshold w0* by trajectory classification and manifold tracing
"""

import math

import numpy as np

from data.entities import (
    Classification,
    Direction,
    Equilibrium,
    PhaseRegime,
    StabilityLabel,
    ThresholdMethod,
    ThresholdResult,
    TerminationKind,
    Trajectory,
    TrajectoryClass,
)
from data.errors import (
    ConfigurationError,
    CriticalSpeedError,
    Inconclusive,
    NoDichotomy,
    NumericalError,
    SeedEscaped,
)
from services.base import BaseService
from services.integrate import IntegrationService

DEFAULT_BRACKET = (1e-3, 10.0)
AGREEMENT_RTOL = 1e-6
BRACKET_FACTOR = 4.0
ESCAPES = {TrajectoryClass.ESCAPES_BELOW, TrajectoryClass.ESCAPES_ABOVE}


class ShootingService(BaseService):
    """
    Service locating the threshold between escaping and bounded trajectories
    """

    def __init__(self, params, controls=None) -> None:
        super().__init__(params, controls)
        self.integration = IntegrationService(params, self.controls)
        self.phase = self.integration.phase

    def _axis_equilibrium_(self, v: float) -> Equilibrium | None:
        for item in self.integration.equilibria:
            if item.w == 0.0 and item.v == v:
                return item
        return None

    def classify_trajectory(
        self, w0: float, v0: float, *, stop_at_parabola: bool = False
    ) -> Classification:
        """
        Qualitative fate of the trajectory from (w0, v0).

        Starts with v0 < -v_star are classified in backward time, all others forward.
        :param w0: Initial ratio
        :param v0: Initial log-derivative
        :keyword stop_at_parabola: Report EntersParabola at the first crossing from above
        :return: Classification
        :raise Inconclusive: span limit reached without a recognisable signature
        """
        p = self.params
        backward = v0 < -p.v_star
        traj = self.integration.integrate(
            w0,
            v0,
            Direction.BACKWARD if backward else Direction.FORWARD,
            stop_at_parabola=stop_at_parabola and not backward,
        )
        event = traj.termination
        kind = event.kind
        equilibrium = None

        if kind in (TerminationKind.V_BLOW_UP_MINUS, TerminationKind.FLUX_BOUNDARY_LOW):
            result = TrajectoryClass.ESCAPES_BELOW
        elif kind in (TerminationKind.V_BLOW_UP_PLUS, TerminationKind.FLUX_BOUNDARY_HIGH):
            result = TrajectoryClass.ESCAPES_ABOVE
        elif kind == TerminationKind.PARABOLA_CROSSING:
            result = TrajectoryClass.ENTERS_PARABOLA
        elif kind == TerminationKind.CONVERGED:
            result = TrajectoryClass.CONVERGES_TO
            equilibrium = self.integration.equilibria[event.equilibrium_index]
        elif kind == TerminationKind.BOUNDED:
            result = TrajectoryClass.BOUNDED
        elif kind == TerminationKind.W_VANISHED:
            # with w negligible v follows v' = lambda/gamma - v^2
            if backward:
                settles = float(traj.v[0]) < p.v_star
                target, escape = -p.v_star, TrajectoryClass.ESCAPES_ABOVE
            else:
                settles = float(traj.v[-1]) > -p.v_star
                target, escape = p.v_star, TrajectoryClass.ESCAPES_BELOW
            result = TrajectoryClass.CONVERGES_TO if settles else escape
            equilibrium = self._axis_equilibrium_(target) if settles else None
        else:
            raise Inconclusive(f'trajectory from ({w0}, {v0}) ended with {kind} at s = {event.s}')

        self.logger.debug('Classified (%s, %s) as %s', w0, v0, result)
        return Classification(kind=result, equilibrium=equilibrium, termination=event)

    def escapes(self, w0: float, v0: float) -> bool:
        """
        Dichotomy predicate used by the bisection
        :param w0: Initial ratio
        :param v0: Initial log-derivative
        :return: True when the trajectory blows up
        """
        return self.classify_trajectory(w0, v0, stop_at_parabola=True).kind in ESCAPES

    def threshold_saddle(self, v0: float) -> tuple[Equilibrium, bool]:
        """
        Saddle whose manifold carries the threshold at v0
        :param v0: Starting log-derivative
        :return: (saddle, True when the manifold is traced in forward time)
        """
        p = self.params
        regime = self.phase.regime()
        if regime == PhaseRegime.A:
            interior = [x for x in self.integration.equilibria if x.w > 0]
            saddle = interior[0]
        else:
            if v0 < -p.v_star:
                raise ConfigurationError('starts below -v_star need a < mu and sigma < sigma_star')
            saddle = self._axis_equilibrium_(-p.v_star)
        if saddle is None or saddle.label != StabilityLabel.SADDLE:
            raise ConfigurationError(f'no saddle carries the threshold for regime {regime}')
        return saddle, v0 < -p.v_star

    def seed_point(
        self, saddle: Equilibrium, v_stop: float, *, unstable: bool = False, flip: bool = False
    ) -> tuple[float, float, np.ndarray]:
        """
        Offset from the saddle along its eigenvector, oriented toward v_stop
        :param saddle: Saddle equilibrium
        :param v_stop: Target v
        :keyword unstable: Use the unstable eigenvector
        :keyword flip: Reverse the orientation
        :return: (w, v, eigenvector)
        """
        values, vectors = self.phase.eigenstructure(saddle)
        vector = vectors[0] if unstable else vectors[1]
        h = self.controls.seed_offset * (1.0 + math.hypot(saddle.w, saddle.v))
        h = math.copysign(h, (v_stop - saddle.v) * vector[1])
        if flip:
            h = -h
        return saddle.w + h * vector[0], saddle.v + h * vector[1], vector

    def trace_stable_manifold(
        self, saddle: Equilibrium, v_stop: float, *, time_reversed: bool = False
    ) -> Trajectory:
        """
        Traces the stable manifold of a saddle in reverse time up to v = v_stop.

        With time_reversed the system runs backward, so the unstable manifold is traced forward.
        :param saddle: Saddle equilibrium
        :param v_stop: Target v
        :keyword time_reversed: Trace the stable manifold of the time-reversed system
        :return: Curve ending at v_stop; its w there is the manifold height
        :raise SeedEscaped: neither orientation of the seed reaches v_stop
        """
        if saddle.label != StabilityLabel.SADDLE:
            raise ConfigurationError(f'equilibrium ({saddle.w}, {saddle.v}) is not a saddle')
        if v_stop == saddle.v:
            raise ConfigurationError('v_stop must differ from the saddle')
        direction = Direction.FORWARD if time_reversed else Direction.BACKWARD

        for flip in (False, True):
            w, v, _ = self.seed_point(saddle, v_stop, unstable=time_reversed, flip=flip)
            if w <= 0:
                continue
            try:
                traj = self.integration.integrate(w, v, direction, v_target=v_stop)
            except NumericalError as ex:
                self.logger.debug('Seed (%s, %s) failed: %s', w, v, ex)
                continue
            if traj.termination.kind == TerminationKind.V_TARGET:
                return traj
            self.logger.debug('Seed (%s, %s) ended with %s', w, v, traj.termination.kind)
        raise SeedEscaped(f'manifold of ({saddle.w}, {saddle.v}) does not reach v = {v_stop}')

    @staticmethod
    def manifold_height(curve: Trajectory) -> float:
        """
        w at the end of a traced manifold
        :param curve: Trajectory from trace_stable_manifold
        :return: Height
        """
        if curve.direction == Direction.BACKWARD:
            return float(curve.w[0])
        return float(curve.w[-1])

    def _check_regime_(self, v0: float) -> None:
        p = self.params
        if p.limiter.saturated:
            raise ConfigurationError('thresholds are computed for the linear limiter only')
        if p.at_critical_speed():
            raise CriticalSpeedError(f'sigma = {p.sigma} sits on sigma_star = {p.sigma_star}')
        if v0 > p.v_star:
            return
        if v0 < -p.v_star and self.phase.regime() == PhaseRegime.A:
            return
        raise ConfigurationError(
            f'v0 = {v0} is outside the shooting regimes for v_star = {p.v_star}'
        )

    def _bracket_(self, v0: float, hint: tuple[float, float]) -> tuple[float, float, bool]:
        """
        Expands the bracket geometrically until its ends classify differently
        :return: (low, high, escapes at low)
        """
        low, high = hint
        low_escapes = self.escapes(low, v0)
        high_escapes = self.escapes(high, v0)
        for _ in range(self.controls.bracket_expansions):
            if low_escapes != high_escapes:
                break
            if low_escapes:
                low /= BRACKET_FACTOR
                low_escapes = self.escapes(low, v0)
            else:
                high *= BRACKET_FACTOR
                high_escapes = self.escapes(high, v0)
            self.logger.debug('Expanded bracket to (%s, %s)', low, high)
        if low_escapes == high_escapes:
            raise NoDichotomy(f'bracket ({low}, {high}) classifies identically at v0 = {v0}')
        return low, high, low_escapes

    def find_w0_star(
        self, v0: float, bracket_hint: tuple[float, float] | None = None
    ) -> ThresholdResult:
        """
        Bisection on the escape predicate, cross-checked against the traced manifold
        :param v0: Starting log-derivative
        :param bracket_hint: Initial (low, high) guess for w0
        :return: Threshold result
        :raise NoDichotomy: no sign change after expanding the bracket
        """
        self._check_regime_(v0)
        hint = bracket_hint or DEFAULT_BRACKET
        if not 0 < hint[0] < hint[1]:
            raise ConfigurationError(f'bracket must satisfy 0 < low < high, got {hint}')

        low, high, low_escapes = self._bracket_(v0, (float(hint[0]), float(hint[1])))
        iterations = 0
        while high / low - 1.0 > self.controls.bisection_rtol:
            middle = math.sqrt(low * high)
            if middle in (low, high):
                break
            if self.escapes(middle, v0) == low_escapes:
                low = middle
            else:
                high = middle
            iterations += 1
        w0_star = math.sqrt(low * high)
        self.logger.debug('Bisection converged after %s steps: %s', iterations, w0_star)

        result = ThresholdResult(
            v0=v0,
            w0_star=w0_star,
            method=ThresholdMethod.BISECTION,
            bracket=(low, high),
            classifier_tol=high / low - 1.0,
        )

        try:
            saddle, time_reversed = self.threshold_saddle(v0)
            curve = self.trace_stable_manifold(saddle, v0, time_reversed=time_reversed)
            estimate = self.manifold_height(curve)
        except (NumericalError, ConfigurationError) as ex:
            self.logger.warning('Manifold trace unavailable at v0 = %s: %s', v0, ex)
            return result

        result.manifold_estimate = estimate
        if abs(estimate - w0_star) <= AGREEMENT_RTOL * w0_star:
            result.method = ThresholdMethod.BOTH
        else:
            self.logger.warning(
                'Manifold height %s disagrees with bisection %s at v0 = %s', estimate, w0_star, v0
            )
        return result
