"""
Adaptive integration of the (w, v) system with event detection, and the graph systems W(v)
used across singular regions.
"""

import math
from collections.abc import Callable

import numpy as np
from scipy.integrate import RK45, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from data.entities import (
    Direction,
    Equilibrium,
    GraphCurve,
    TerminationEvent,
    TerminationKind,
    Trajectory,
)
from data.errors import (
    ConfigurationError,
    DenominatorVanished,
    DomainError,
    InsufficientResolution,
    SignChange,
    StepSizeUnderflow,
)
from services.base import BaseService
from services.flux import angle_flux, clip_angle, slope_domain
from services.phase import ROOT_RTOL, PhaseService

MIN_FIT_SAMPLES = 20

# kinds whose maximal-interval endpoint is at infinity
UNBOUNDED_KINDS = {
    TerminationKind.CONVERGED,
    TerminationKind.BOUNDED,
    TerminationKind.MAX_SPAN,
    TerminationKind.W_VANISHED,
}
BLOW_UP_KINDS = {TerminationKind.V_BLOW_UP_PLUS, TerminationKind.V_BLOW_UP_MINUS}
FLUX_KINDS = {TerminationKind.FLUX_BOUNDARY_LOW, TerminationKind.FLUX_BOUNDARY_HIGH}


def fit_power_law(distance: np.ndarray, values: np.ndarray, decades: float = 1.0) -> float:
    """
    Log-log regression slope of values against distance over the window closest to zero
    :param distance: Positive distances to an endpoint
    :param values: Positive values
    :param decades: Width of the window in decades above the smallest distance
    :return: Fitted exponent
    :raise InsufficientResolution: fewer than 20 samples in the window
    """
    distance = np.asarray(distance, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = (distance > 0) & (values > 0) & np.isfinite(values)
    distance, values = distance[keep], values[keep]
    if distance.size == 0:
        raise InsufficientResolution('no positive samples near the endpoint')
    d_min = float(distance.min())
    window = distance <= d_min * 10.0**decades
    if int(window.sum()) < MIN_FIT_SAMPLES:
        raise InsufficientResolution(
            f'{int(window.sum())} samples within a decade of the endpoint, need {MIN_FIT_SAMPLES}'
        )
    slope, _ = np.polyfit(np.log(distance[window]), np.log(values[window]), 1)
    return float(slope)


class IntegrationService(BaseService):
    """
    Service integrating trajectories and graph curves for one parameter set
    """

    def __init__(self, params, controls=None) -> None:
        super().__init__(params, controls)
        self.phase = PhaseService(params, self.controls)
        self._equilibria: list[Equilibrium] | None = None

    @property
    def equilibria(self) -> list[Equilibrium]:
        """
        Cached equilibria of the bound parameters
        """
        if self._equilibria is None:
            self._equilibria = self.phase.equilibria()
        return self._equilibria

    def _field_(self, s: float, y: np.ndarray) -> np.ndarray:
        """
        Right-hand side in (log w, v, I); NaN outside the slope domain so the step is rejected
        """
        p = self.params
        log_w, v = y[0], y[1]
        try:
            if p.limiter.saturated:
                g = float(self.phase.flux_slope(v))
            else:
                g = (p.a * v - p.sigma) / p.limiter.mu
            w = math.exp(log_w)
        except (DomainError, OverflowError):
            return np.full(3, np.nan)
        return np.array([g - v, (p.lambda_ - p.gamma * v * v - w) / p.gamma, v])

    def _check_start_(self, w0: float, v0: float) -> None:
        """
        Validates a start point
        :param w0: Initial ratio
        :param v0: Initial log-derivative
        :raise ConfigurationError: w0 not positive, v0 not finite or outside the slope domain
        """
        if not (w0 > 0 and math.isfinite(w0)):
            raise ConfigurationError(f'w0 must be positive and finite, got {w0}')
        if not math.isfinite(v0):
            raise ConfigurationError(f'v0 must be finite, got {v0}')
        low, high = slope_domain(self.params.limiter, self.params.a, self.params.sigma)
        if not low < v0 < high:
            raise ConfigurationError(f'v0 = {v0} outside the slope domain ({low}, {high})')

    def _parabola_gap_(self, y: np.ndarray) -> float:
        """
        Signed distance of w above the parabola w = lambda - gamma v^2, compared in log w
        where the parabola is positive so tiny w near (0, +-v_star) keep their sign
        :param y: State (log w, v, I)
        :return: Positive above the parabola
        """
        height = float(self.phase.parabola(y[1]))
        if height <= 0:
            return math.exp(y[0]) - height
        return y[0] - math.log(height)

    def _crossings_(
        self, w0: float, v0: float, v_target: float | None, stop_at_parabola: bool
    ) -> list[tuple[TerminationKind, Callable[[np.ndarray], float]]]:
        """
        Event functions, positive until the event is reached
        """
        p = self.params
        ctl = self.controls
        events: list[tuple[TerminationKind, Callable[[np.ndarray], float]]] = [
            (TerminationKind.V_BLOW_UP_PLUS, lambda y: ctl.v_max - y[1]),
            (TerminationKind.V_BLOW_UP_MINUS, lambda y: ctl.v_max + y[1]),
        ]
        if p.limiter.saturated:
            edge = p.limiter.c * (1.0 - ctl.boundary_eps)
            events.append((TerminationKind.FLUX_BOUNDARY_HIGH,
                           lambda y: edge - (p.a * y[1] - p.sigma)))
            events.append((TerminationKind.FLUX_BOUNDARY_LOW,
                           lambda y: edge + (p.a * y[1] - p.sigma)))
        if stop_at_parabola:
            events.append((TerminationKind.PARABOLA_CROSSING, self._parabola_gap_))
        if v_target is not None:
            if v_target == v0:
                raise ConfigurationError(f'v target {v_target} equals the starting v')
            side = math.copysign(1.0, v0 - v_target)
            events.append((TerminationKind.V_TARGET, lambda y: side * (y[1] - v_target)))
        return events

    @staticmethod
    def _first_crossing_(events, solver, t_old, y_old, t_new, y_new):
        """
        Earliest event crossed during the last step, refined on the dense output
        :return: (kind, s, state) or None
        """
        found = None
        dense = None
        for kind, fun in events:
            if not (fun(y_old) > 0 and fun(y_new) <= 0):
                continue
            dense = dense or solver.dense_output()
            lo, hi = min(t_old, t_new), max(t_old, t_new)

            def level(t, fun=fun):
                return fun(dense(t))

            if level(lo) * level(hi) < 0:
                t_e = brentq(level, lo, hi, xtol=1e-14 * max(1.0, abs(t_new)), rtol=ROOT_RTOL)
            else:
                t_e = t_new
            if found is None or abs(t_e - t_old) < abs(found[1] - t_old):
                found = (kind, t_e)
        if found is None:
            return None
        kind, t_e = found
        state = y_new if t_e == t_new else dense(t_e)
        return kind, t_e, np.asarray(state, dtype=float)

    def _nearest_equilibrium_(self, w: float, v: float) -> tuple[int | None, float]:
        """
        :param w: Ratio
        :param v: Log-derivative
        :return: Index of the closest equilibrium, None when there are none, and its distance
        """
        best, dist = None, math.inf
        for idx, item in enumerate(self.equilibria):
            d = math.hypot(w - item.w, v - item.v)
            if d < dist:
                best, dist = idx, d
        return best, dist

    def _span_verdict_(self, v: np.ndarray, w: np.ndarray) -> TerminationKind:
        """
        Bounded when the second half of the run stays in a compact box, MaxSpan otherwise
        """
        p = self.params
        box = self.controls.bounded_box or 1e3 * (1.0 + p.lambda_ + p.v_star)
        tail = slice(v.size // 2, None)
        if np.all(np.abs(v[tail]) <= box) and np.all(w[tail] <= box):
            return TerminationKind.BOUNDED
        return TerminationKind.MAX_SPAN

    def integrate(
        self,
        w0: float,
        v0: float,
        direction: Direction = Direction.FORWARD,
        *,
        s0: float = 0.0,
        v_target: float | None = None,
        stop_at_parabola: bool = False,
    ) -> Trajectory:
        """
        Integrates from (w0, v0) in one direction until the first termination event
        :param w0: Initial ratio, positive
        :param v0: Initial log-derivative
        :param direction: forward or backward in s
        :keyword s0: Starting abscissa, where I = 0
        :keyword v_target: Optional value of v that stops the run
        :keyword stop_at_parabola: Stop at the first crossing of the parabola from above
        :return: Trajectory sorted by increasing s
        :raise StepSizeUnderflow: the step controller cannot continue
        """
        self._check_start_(w0, v0)
        direction = Direction(direction)
        sign = 1.0 if direction == Direction.FORWARD else -1.0
        ctl = self.controls
        events = self._crossings_(w0, v0, v_target, stop_at_parabola)

        solver = RK45(
            self._field_,
            s0,
            np.array([math.log(w0), v0, 0.0]),
            s0 + sign * ctl.s_max,
            rtol=ctl.rtol,
            atol=ctl.atol,
            max_step=ctl.max_step,
        )
        samples = [(s0, math.log(w0), v0, 0.0)]
        dwell_from: float | None = None
        event: TerminationEvent | None = None
        guard = math.sqrt(ctl.v_max)

        for _ in range(ctl.max_steps):
            t_old, y_old = solver.t, solver.y.copy()
            message = solver.step()
            if solver.status == 'failed':
                raise StepSizeUnderflow(f'step failed at s = {t_old}, v = {y_old[1]}: {message}')
            t_new, y_new = solver.t, solver.y

            hit = self._first_crossing_(events, solver, t_old, y_old, t_new, y_new)
            if hit:
                kind, t_e, y_e = hit
                samples.append((t_e, *y_e))
                event = TerminationEvent(kind=kind, s=t_e)
                break
            samples.append((t_new, *y_new))

            w_new, v_new = math.exp(y_new[0]), float(y_new[1])
            index, dist = self._nearest_equilibrium_(w_new, v_new)
            if dist < ctl.eq_tol:
                dwell_from = t_new if dwell_from is None else dwell_from
                if abs(t_new - dwell_from) >= ctl.dwell:
                    event = TerminationEvent(TerminationKind.CONVERGED, t_new, index)
                    break
            else:
                dwell_from = None

            if w_new < ctl.w_min and abs(v_new) < guard:
                on_axis = index is not None and self.equilibria[index].w == 0.0
                if on_axis and abs(v_new - self.equilibria[index].v) < ctl.eq_tol:
                    event = TerminationEvent(TerminationKind.CONVERGED, t_new, index)
                else:
                    event = TerminationEvent(TerminationKind.W_VANISHED, t_new)
                break

            if solver.status == 'finished':
                data = np.array(samples)
                kind = self._span_verdict_(data[:, 2], np.exp(data[:, 1]))
                event = TerminationEvent(kind, t_new)
                break
        else:
            raise StepSizeUnderflow(f'step budget of {ctl.max_steps} exhausted from v0 = {v0}')

        self.logger.debug('Integration %s from (%s, %s) ended with %s', direction, w0, v0, event)
        return self._assemble_(np.array(samples), direction, s0, event)

    def _endpoint_(self, event: TerminationEvent, state: np.ndarray, sign: float) -> float | None:
        """
        Maximal-interval endpoint implied by an event
        """
        if event.kind in BLOW_UP_KINDS:
            return event.s - 1.0 / float(state[2])
        if event.kind in FLUX_KINDS:
            return event.s
        if event.kind in UNBOUNDED_KINDS:
            return sign * math.inf
        return None

    def _assemble_(
        self, data: np.ndarray, direction: Direction, s0: float, event: TerminationEvent
    ) -> Trajectory:
        """
        Sorts samples by s and attaches the event to the matching end
        """
        forward = direction == Direction.FORWARD
        endpoint = self._endpoint_(event, data[-1], 1.0 if forward else -1.0)
        if not forward:
            data = data[::-1]
        return Trajectory(
            s=data[:, 0].copy(),
            w=np.exp(data[:, 1]),
            v=data[:, 2].copy(),
            I=data[:, 3].copy(),
            direction=direction,
            s0=s0,
            lower=None if forward else event,
            upper=event if forward else None,
            s_minus=None if forward else endpoint,
            s_plus=endpoint if forward else None,
        )

    def integrate_maximal(self, w0: float, v0: float, s0: float = 0.0) -> Trajectory:
        """
        Joins backward and forward runs into one two-sided trajectory
        :param w0: Initial ratio
        :param v0: Initial log-derivative
        :param s0: Anchor abscissa
        :return: Trajectory over the estimated maximal interval
        """
        backward = self.integrate(w0, v0, Direction.BACKWARD, s0=s0)
        forward = self.integrate(w0, v0, Direction.FORWARD, s0=s0)
        return Trajectory(
            s=np.concatenate([backward.s[:-1], forward.s]),
            w=np.concatenate([backward.w[:-1], forward.w]),
            v=np.concatenate([backward.v[:-1], forward.v]),
            I=np.concatenate([backward.I[:-1], forward.I]),
            direction=Direction.FORWARD,
            s0=s0,
            lower=backward.lower,
            upper=forward.upper,
            s_minus=backward.s_minus,
            s_plus=forward.s_plus,
        )

    def power_law_exponent(self, traj: Trajectory, end: str = 'upper') -> float:
        """
        Fitted alpha in w ~ (distance to a blow-up endpoint)^alpha
        :param traj: Trajectory ending in a blow-up
        :param end: 'upper' for s_plus or 'lower' for s_minus
        :return: Exponent
        """
        endpoint = traj.s_plus if end == 'upper' else traj.s_minus
        event = traj.upper if end == 'upper' else traj.lower
        if event is None or event.kind not in BLOW_UP_KINDS or endpoint is None:
            raise ConfigurationError(f'the {end} end of the trajectory is not a blow-up')
        return fit_power_law(np.abs(traj.s - endpoint), traj.w)

    def _angle_(self, v):
        """
        theta = arcsin((a v - sigma) / c), kept inside the open interval (-pi/2, pi/2)
        """
        p = self.params
        ratio = np.clip((p.a * np.asarray(v, dtype=float) - p.sigma) / p.limiter.c, -1.0, 1.0)
        return clip_angle(np.arcsin(ratio))

    def _slope_of_angle_(self, theta):
        """
        Inverse of _angle_
        :param theta: Angle
        :return: v
        """
        p = self.params
        return (p.sigma + p.limiter.c * np.sin(theta)) / p.a

    def integrate_graph_W(self, v_anchor: float, W_anchor: float, v_target: float) -> GraphCurve:
        """
        Integrates W(v) along an orbit from (v_anchor, W_anchor) to v_target.

        Saturated limiters are integrated in the angle theta with a v - sigma = c sin theta, and in
        Y = 1/W when the anchor lies above lambda.
        :param v_anchor: Starting v
        :param W_anchor: Starting W, positive
        :param v_target: Final v, may sit on the boundary of the slope domain
        :return: Sampled curve, constant when the anchor is an equilibrium
        :raise DenominatorVanished: the orbit reaches the parabola
        """
        p = self.params
        ctl = self.controls
        if not W_anchor > 0:
            raise ConfigurationError(f'W anchor must be positive, got {W_anchor}')

        saturated = p.limiter.saturated
        reciprocal = saturated and W_anchor > p.lambda_
        start = float(self._angle_(v_anchor)) if saturated else v_anchor
        stop = float(self._angle_(v_target)) if saturated else v_target
        if start == stop:
            raise ConfigurationError('graph integration needs distinct anchor and target')

        if self.phase.is_equilibrium(W_anchor, v_anchor):
            grid = np.linspace(start, stop, ctl.graph_samples)
            v = self._slope_of_angle_(grid) if saturated else grid.copy()
            return GraphCurve(coordinate=grid, v=np.asarray(v), W=np.full(grid.size, W_anchor),
                              angular=saturated)
        gap = p.lambda_ - W_anchor - p.gamma * v_anchor * v_anchor
        if abs(gap) < ctl.denom_eps:
            raise DenominatorVanished(f'anchor ({v_anchor}, {W_anchor}) lies on the parabola')

        def slope_and_v(x: float) -> tuple[float, float, float]:
            # (flux term, v, dv/dx) in the integration coordinate
            if saturated:
                v = float(self._slope_of_angle_(x))
                return float(angle_flux(p.limiter, x)), v * math.cos(x), v
            return (p.a * x - p.sigma) / p.limiter.mu, x, x

        def field(x: float, z: np.ndarray) -> np.ndarray:
            flux, v_term, v = slope_and_v(x)
            scale = p.limiter.c / p.a if saturated else 1.0
            if reciprocal:
                y = z[0]
                denom = 1.0 / p.gamma + y * (v * v - p.lambda_ / p.gamma)
                return np.array([scale * y * y * (flux - v_term) / denom])
            w = z[0]
            denom = p.lambda_ - w - p.gamma * v * v
            return np.array([scale * p.gamma * w * (flux - v_term) / denom])

        def parabola_gap(x: float, z: np.ndarray) -> float:
            _, _, v = slope_and_v(x)
            w = 1.0 / z[0] if reciprocal else z[0]
            return abs(p.lambda_ - w - p.gamma * v * v) - ctl.denom_eps

        parabola_gap.terminal = True  # type: ignore[attr-defined]

        grid = np.linspace(start, stop, ctl.graph_samples)
        initial = np.array([1.0 / W_anchor if reciprocal else W_anchor])
        result = solve_ivp(
            field,
            (start, stop),
            initial,
            method='RK45',
            t_eval=grid,
            events=parabola_gap,
            rtol=ctl.rtol,
            atol=ctl.atol,
        )
        if result.status == 1:
            x_e = float(result.t_events[0][0])
            raise DenominatorVanished(
                f'graph orbit reaches the parabola at v = {float(slope_and_v(x_e)[2])}'
            )
        if result.status != 0:
            raise StepSizeUnderflow(f'graph integration failed: {result.message}')

        values = result.y[0]
        W = 1.0 / values if reciprocal else values
        v = self._slope_of_angle_(result.t) if saturated else result.t.copy()
        self.logger.debug('Graph W from v = %s to %s over %s samples', v_anchor, v_target, v.size)
        return GraphCurve(coordinate=result.t.copy(), v=np.asarray(v), W=W, angular=saturated)

    @staticmethod
    def join_curves(first: GraphCurve, second: GraphCurve) -> GraphCurve:
        """
        Joins two graph curves sharing their anchor into one curve sorted by coordinate
        :param first: Curve
        :param second: Curve starting where first starts
        :return: Joined curve
        """
        coordinate = np.concatenate([first.coordinate[::-1], second.coordinate[1:]])
        v = np.concatenate([first.v[::-1], second.v[1:]])
        W = np.concatenate([first.W[::-1], second.W[1:]])
        order = np.argsort(coordinate, kind='stable')
        return GraphCurve(coordinate=coordinate[order], v=v[order], W=W[order],
                          angular=first.angular)

    def _spline_(self, curve: GraphCurve) -> CubicSpline:
        """
        :param curve: Graph curve
        :return: Cubic spline of W over the curve coordinate
        """
        order = np.argsort(curve.coordinate, kind='stable')
        return CubicSpline(curve.coordinate[order], curve.W[order])

    def graph_values(self, curve: GraphCurve, v) -> np.ndarray:
        """
        Interpolates W at the given v values
        :param curve: Graph curve
        :param v: Values of v inside the curve's range
        :return: W(v)
        """
        x = self._angle_(v) if curve.angular else np.asarray(v, dtype=float)
        return self._spline_(curve)(x)

    def reconstruct_s_from_v(
        self, curve: GraphCurve, v_start: float, v_end: float, s_start: float = 0.0
    ) -> Trajectory:
        """
        Recovers s(v) by integrating ds/dv = gamma / (lambda - gamma v^2 - W(v)), with I alongside
        :param curve: Graph curve covering [v_start, v_end]
        :param v_start: v at s_start
        :param v_end: Final v
        :param s_start: Abscissa of v_start
        :return: Trajectory sorted by increasing s, I measured from s_start
        :raise SignChange: v' changes sign between v_start and v_end
        """
        p = self.params
        ctl = self.controls
        spline = self._spline_(curve)
        to_coordinate = self._angle_ if curve.angular else (lambda v: np.asarray(v, dtype=float))
        start = float(to_coordinate(v_start))
        stop = float(to_coordinate(v_end))

        lo, hi = min(start, stop), max(start, stop)
        inside = (curve.coordinate >= lo) & (curve.coordinate <= hi)
        gaps = p.lambda_ - p.gamma * curve.v[inside] ** 2 - curve.W[inside]
        if np.any(gaps > 0) and np.any(gaps < 0):
            raise SignChange(f"v' changes sign between v = {v_start} and v = {v_end}")

        def field(x: float, z: np.ndarray) -> np.ndarray:
            if curve.angular:
                v = float(self._slope_of_angle_(x))
                dv = p.limiter.c * math.cos(x) / p.a
            else:
                v, dv = x, 1.0
            ds = dv * p.gamma / (p.lambda_ - p.gamma * v * v - float(spline(x)))
            return np.array([ds, v * ds])

        grid = np.concatenate([[start], np.sort(curve.coordinate[inside]), [stop]])
        grid = np.unique(grid)
        if stop < start:
            grid = grid[::-1]
        result = solve_ivp(
            field, (start, stop), np.array([s_start, 0.0]), method='RK45', t_eval=grid,
            rtol=ctl.rtol, atol=ctl.atol,
        )
        if result.status != 0:
            raise StepSizeUnderflow(f'quadrature of s(v) failed: {result.message}')

        v = self._slope_of_angle_(result.t) if curve.angular else result.t
        s, integral = result.y
        forward = s[-1] >= s[0]
        order = np.argsort(s, kind='stable')
        w = spline(result.t)
        return Trajectory(
            s=s[order],
            w=np.asarray(w)[order],
            v=np.asarray(v)[order],
            I=integral[order],
            direction=Direction.FORWARD if forward else Direction.BACKWARD,
            s0=s_start,
        )

    def trajectory_from_graph(self, w0: float, v0: float, s0: float = 0.0) -> Trajectory:
        """
        Two-sided saturated trajectory rebuilt from the graph system across the slope domain
        :param w0: Initial ratio
        :param v0: Initial log-derivative
        :param s0: Anchor abscissa
        :return: Trajectory ending on the flux boundary at both ends
        """
        p = self.params
        if not p.limiter.saturated:
            raise ConfigurationError('graph fallback needs a saturated limiter')
        low, high = slope_domain(p.limiter, p.a, p.sigma)
        left = self.integrate_graph_W(v0, w0, low)
        right = self.integrate_graph_W(v0, w0, high)
        curve = self.join_curves(left, right)
        first = self.reconstruct_s_from_v(curve, v0, low, s0)
        second = self.reconstruct_s_from_v(curve, v0, high, s0)
        return self.join_on_anchor(first, second, s0)

    @staticmethod
    def join_on_anchor(first: Trajectory, second: Trajectory, s0: float) -> Trajectory:
        """
        Merges two half trajectories that share the anchor sample and labels their flux ends
        :param first: Trajectory
        :param second: Trajectory
        :param s0: Anchor abscissa
        :return: Trajectory
        """
        s = np.concatenate([first.s, second.s])
        s, unique = np.unique(s, return_index=True)
        w = np.concatenate([first.w, second.w])[unique]
        v = np.concatenate([first.v, second.v])[unique]
        integral = np.concatenate([first.I, second.I])[unique]
        lower_kind = (TerminationKind.FLUX_BOUNDARY_HIGH if v[0] > v[-1]
                      else TerminationKind.FLUX_BOUNDARY_LOW)
        upper_kind = (TerminationKind.FLUX_BOUNDARY_LOW if v[0] > v[-1]
                      else TerminationKind.FLUX_BOUNDARY_HIGH)
        return Trajectory(
            s=s,
            w=w,
            v=v,
            I=integral,
            direction=Direction.FORWARD,
            s0=s0,
            lower=TerminationEvent(lower_kind, float(s[0])),
            upper=TerminationEvent(upper_kind, float(s[-1])),
            s_minus=float(s[0]),
            s_plus=float(s[-1]),
        )
