"""
Reconstruction of (u, S) from (w, v) trajectories, profile taxonomy and endpoint behavior
"""

import math

import numpy as np

from data.entities import (
    EndpointSlopes,
    FrontBranch,
    ProfileType,
    SlopeKind,
    TerminationKind,
    Trajectory,
    WaveProfile,
)
from data.errors import (
    AnchorMismatch,
    ConfigurationError,
    DenominatorVanished,
    InsufficientResolution,
    RegimeViolation,
)
from services.base import BaseService
from services.flux import slope_domain
from services.integrate import IntegrationService, fit_power_law

ANCHOR_TOL = 1e-9
SLOPE_EPS = 0.1
VANISH_RATIO = 1e-3
THRESHOLD_RTOL = 1e-9
EDGE_MARGIN = 0.05
BOUNDARY_DISTANCES = (1e-4, 1e-6, 1e-8)


class ProfileService(BaseService):
    """
    Service building and labelling traveling-wave profiles
    """

    def __init__(self, params, controls=None) -> None:
        super().__init__(params, controls)
        self.integration = IntegrationService(params, self.controls)
        self.phase = self.integration.phase

    def reconstruct(
        self, traj: Trajectory, s0: float = 0.0, S0: float = 1.0, u0: float | None = None
    ) -> WaveProfile:
        """
        Builds S = S0 exp(I - I(s0)) and u = w S
        :param traj: Trajectory
        :param s0: Anchor abscissa inside the sampled range
        :param S0: S at s0, positive
        :param u0: Optional u at s0, must agree with w(s0) S0
        :return: Wave profile
        :raise AnchorMismatch: u0 / S0 differs from w(s0)
        """
        if not S0 > 0:
            raise ConfigurationError(f'S0 must be positive, got {S0}')
        if not traj.s[0] <= s0 <= traj.s[-1]:
            raise ConfigurationError(
                f's0 = {s0} outside the trajectory [{traj.s[0]}, {traj.s[-1]}]'
            )

        w_anchor = float(np.exp(np.interp(s0, traj.s, np.log(traj.w))))
        i_anchor = float(np.interp(s0, traj.s, traj.I))
        if u0 is None:
            u0 = w_anchor * S0
        elif abs(u0 / S0 - w_anchor) > ANCHOR_TOL * max(1.0, w_anchor):
            raise AnchorMismatch(f'u0 / S0 = {u0 / S0} but w(s0) = {w_anchor}')

        S = S0 * np.exp(traj.I - i_anchor)
        return WaveProfile(
            s=traj.s.copy(),
            u=traj.w * S,
            S=S,
            w=traj.w.copy(),
            v=traj.v.copy(),
            s_minus=traj.s_minus if traj.s_minus is not None else float(traj.s[0]),
            s_plus=traj.s_plus if traj.s_plus is not None else float(traj.s[-1]),
            s0=s0,
            S0=S0,
            u0=u0,
            lower=traj.lower,
            upper=traj.upper,
        )

    def solve(
        self,
        w0: float,
        v0: float,
        s0: float = 0.0,
        S0: float = 1.0,
        *,
        w0_star: float | None = None,
    ) -> WaveProfile:
        """
        Integrates the maximal trajectory through (w0, v0) and reconstructs its profile
        :param w0: Anchor ratio u0 / S0
        :param v0: Anchor log-derivative
        :param s0: Anchor abscissa
        :param S0: Anchor value of S
        :keyword w0_star: Threshold at v0; when given the profile is classified
        :return: Wave profile
        """
        traj = self.integration.integrate_maximal(w0, v0, s0)
        profile = self.reconstruct(traj, s0, S0, w0 * S0)
        upd: dict = {'continuation': self.continuation_coefficients(profile)}
        if w0_star is not None:
            u_type, S_type = self.classify_profile(profile, w0_star)
            upd.update({'u_type': u_type, 'S_type': S_type})
            if all(math.isfinite(x) for x in (profile.s_minus, profile.s_plus)):
                try:
                    upd['endpoint_slopes'] = self.endpoint_slopes(profile)
                except InsufficientResolution as ex:
                    self.logger.warning('Endpoint slopes unavailable: %s', ex)
        return profile.copy(update=upd)

    def prescribed_types(
        self, w0: float, v0: float, w0_star: float
    ) -> tuple[ProfileType, ProfileType]:
        """
        Labels (u_type, S_type) implied by the anchor ratio against the threshold
        :param w0: Anchor ratio
        :param v0: Anchor log-derivative
        :param w0_star: Threshold at v0
        :return: (u_type, S_type)
        """
        p = self.params
        ratio = w0 / w0_star
        above = ratio > 1.0 + THRESHOLD_RTOL
        if v0 > p.v_star:
            if above:
                return ProfileType.A1, ProfileType.A1
            if ratio >= 1.0 - THRESHOLD_RTOL:
                return ProfileType.A2, ProfileType.A2
            if p.a * p.v_star < p.sigma:
                return ProfileType.A2, ProfileType.A3
            return ProfileType.A3, ProfileType.A3
        if v0 < -p.v_star:
            if above:
                return ProfileType.A1, ProfileType.A1
            return ProfileType.A4, ProfileType.A4
        return ProfileType.UNCLASSIFIED, ProfileType.UNCLASSIFIED

    def _finite_end_vanishes_(self, profile: WaveProfile, values: np.ndarray, lower: bool) -> bool:
        """
        Whether a component vanishes at a finite end, by its ratio to the maximum or its exponent
        """
        end = values[0] if lower else values[-1]
        if end < VANISH_RATIO * float(values.max()):
            return True
        edge = profile.s_minus if lower else profile.s_plus
        try:
            return fit_power_law(np.abs(profile.s - edge), values) > SLOPE_EPS
        except InsufficientResolution:
            return False

    def _tail_rate_(self, profile: WaveProfile, values: np.ndarray, lower: bool) -> float:
        """
        Mean growth rate d log f / ds over the tail window toward an infinite end
        """
        s = profile.s
        event = profile.lower if lower else profile.upper
        span = float(s[-1] - s[0])
        settled = event is not None and event.kind in (
            TerminationKind.CONVERGED,
            TerminationKind.W_VANISHED,
        )
        width = min(self.controls.dwell, 0.5 * span) if settled else 0.5 * span
        logs = np.log(values)
        if lower:
            idx = int(np.searchsorted(s, s[0] + width))
            return float((logs[idx] - logs[0]) / (s[idx] - s[0]))
        idx = int(np.searchsorted(s, s[-1] - width))
        return float((logs[-1] - logs[idx]) / (s[-1] - s[idx]))

    def measured_type(self, profile: WaveProfile, values: np.ndarray) -> ProfileType:
        """
        Type of one component read off its endpoint behavior
        :param profile: Profile
        :param values: u or S samples
        :return: Type
        """
        lower_finite = math.isfinite(profile.s_minus)
        upper_finite = math.isfinite(profile.s_plus)
        if lower_finite and upper_finite:
            if self._finite_end_vanishes_(profile, values, True) and \
                    self._finite_end_vanishes_(profile, values, False):
                return ProfileType.A1
            return ProfileType.UNCLASSIFIED
        if lower_finite and profile.s_plus == math.inf:
            if not self._finite_end_vanishes_(profile, values, True):
                return ProfileType.UNCLASSIFIED
            growing = self._tail_rate_(profile, values, False) > 0
            return ProfileType.A3 if growing else ProfileType.A2
        if upper_finite and profile.s_minus == -math.inf:
            if self._finite_end_vanishes_(profile, values, False) and \
                    self._tail_rate_(profile, values, True) < 0:
                return ProfileType.A4
        return ProfileType.UNCLASSIFIED

    def classify_profile(
        self, profile: WaveProfile, w0_star: float
    ) -> tuple[ProfileType, ProfileType]:
        """
        Prescribed labels, verified against the measured endpoint behavior
        :param profile: Reconstructed profile
        :param w0_star: Threshold at the anchor v
        :return: (u_type, S_type), Unclassified where measurement disagrees
        """
        v0 = float(np.interp(profile.s0, profile.s, profile.v))
        prescribed = self.prescribed_types(profile.w0, v0, w0_star)
        measured = (self.measured_type(profile, profile.u), self.measured_type(profile, profile.S))
        result = []
        for name, want, got in zip(('u', 'S'), prescribed, measured, strict=True):
            if want == got:
                result.append(want)
            else:
                self.logger.warning('%s labelled %s but measured %s', name, want, got)
                result.append(ProfileType.UNCLASSIFIED)
        return result[0], result[1]

    @staticmethod
    def _slope_kind_(exponent: float, lower: bool) -> SlopeKind:
        if exponent < 1.0 - SLOPE_EPS:
            return SlopeKind.PLUS_INFINITY if lower else SlopeKind.MINUS_INFINITY
        if exponent <= 1.0 + SLOPE_EPS:
            return SlopeKind.FINITE_POSITIVE if lower else SlopeKind.FINITE_NEGATIVE
        return SlopeKind.ZERO

    def endpoint_slopes(self, profile: WaveProfile) -> EndpointSlopes:
        """
        One-sided slope categories of u at both finite ends by log-log regression
        :param profile: Compactly supported profile of the linear limiter
        :return: Endpoint slopes with S' = v S reported at both ends
        :raise InsufficientResolution: fewer than 20 samples in a fitting window
        """
        if self.params.limiter.saturated:
            raise ConfigurationError('endpoint slopes are fitted for the linear limiter')
        if not (math.isfinite(profile.s_minus) and math.isfinite(profile.s_plus)):
            raise ConfigurationError('endpoint slopes need a compactly supported profile')

        slopes = EndpointSlopes(
            s_prime_at_s_minus=float(profile.v[0] * profile.S[0]),
            s_prime_at_s_plus=float(profile.v[-1] * profile.S[-1]),
        )
        for lower in (True, False):
            edge = profile.s_minus if lower else profile.s_plus
            distance = np.abs(profile.s - edge)
            exponent = fit_power_law(distance, profile.u)
            kind = self._slope_kind_(exponent, lower)
            value = None
            if kind in (SlopeKind.FINITE_POSITIVE, SlopeKind.FINITE_NEGATIVE):
                idx = 0 if lower else -1
                value = float(profile.u[idx] / distance[idx]) * (1.0 if lower else -1.0)
            elif kind == SlopeKind.ZERO:
                value = 0.0
            if lower:
                slopes.u_prime_at_s_minus, slopes.exponent_minus = kind, exponent
                slopes.u_prime_minus_value = value
            else:
                slopes.u_prime_at_s_plus, slopes.exponent_plus = kind, exponent
                slopes.u_prime_plus_value = value
        return slopes

    def continuation_coefficients(self, profile: WaveProfile) -> dict:
        """
        C1 continuation of S by A e^(v_star (s - e)) + B e^(-v_star (s - e)) past a finite end e
        :param profile: Profile
        :return: Dictionary keyed by s_minus and s_plus
        """
        v_star = self.params.v_star
        result = {}
        for name, edge, idx in (('s_minus', profile.s_minus, 0), ('s_plus', profile.s_plus, -1)):
            if not math.isfinite(edge):
                continue
            value = float(profile.S[idx])
            slope = float(profile.v[idx] * profile.S[idx])
            if v_star > 0:
                result[name] = {
                    's': edge,
                    'A': 0.5 * (value + slope / v_star),
                    'B': 0.5 * (value - slope / v_star),
                }
            else:
                result[name] = {'s': edge, 'A': value, 'B': slope}
        return result

    def flux_relation_residual(self, profile: WaveProfile) -> float:
        """
        Largest deviation from u = u0 (S/S0)^(a/mu) e^(-sigma (s - s0) / mu)
        :param profile: Linear-limiter profile
        :return: max |ratio - 1|
        """
        p = self.params
        if p.limiter.saturated:
            raise ConfigurationError('the flux relation holds for the linear limiter')
        mu = p.limiter.mu
        log_ratio = (
            np.log(profile.u / profile.u0)
            - (p.a / mu) * np.log(profile.S / profile.S0)
            + p.sigma * (profile.s - profile.s0) / mu
        )
        return float(np.max(np.abs(np.expm1(log_ratio))))

    def elliptic_residual(self, profile: WaveProfile) -> float:
        """
        Relative residual of gamma S'' - lambda S + u by differences of S' = v S on interior samples
        :param profile: Profile
        :return: max |residual| / scale
        """
        p = self.params
        s = profile.s
        if s.size < 5:
            raise InsufficientResolution('too few samples for finite differences')
        second = np.gradient(profile.v * profile.S, s)
        residual = p.gamma * second - p.lambda_ * profile.S + profile.u
        span = float(s[-1] - s[0])
        inside = (s > s[0] + EDGE_MARGIN * span) & (s < s[-1] - EDGE_MARGIN * span)
        if not np.any(inside):
            raise InsufficientResolution('no interior samples')
        scale = max(
            float(np.max(p.gamma * np.abs(second[inside]))),
            float(np.max(p.lambda_ * profile.S[inside])),
            float(np.max(profile.u[inside])),
            np.finfo(float).tiny,
        )
        return float(np.max(np.abs(residual[inside])) / scale)

    def saturated_front(
        self,
        v0: float,
        w0: float,
        branch: FrontBranch = FrontBranch.ABOVE,
        s0: float = 0.0,
        S0: float = 1.0,
    ) -> WaveProfile:
        """
        Front with finite support whose ends sit on the flux boundary.

        The graph W(v) is integrated across the whole slope domain, s is recovered from it and
        the branch condition is checked along the computed curve.
        :param v0: Anchor log-derivative inside the slope domain
        :param w0: Anchor ratio
        :param branch: above or below the parabola
        :param s0: Anchor abscissa
        :param S0: Anchor value of S
        :return: Profile labelled SaturatedFrontConcave or SaturatedFrontConvex
        :raise RegimeViolation: the branch precondition fails
        """
        p = self.params
        if not p.limiter.saturated:
            raise ConfigurationError('saturated fronts need a saturated limiter')
        branch = FrontBranch(branch)
        low, high = slope_domain(p.limiter, p.a, p.sigma)
        above = branch == FrontBranch.ABOVE
        parabola = float(self.phase.parabola(v0))
        if above and not w0 > parabola:
            raise RegimeViolation(f'w0 = {w0} is not above the parabola at v0 = {v0}')
        if not above:
            if not (-p.v_star < low and high < p.v_star):
                raise RegimeViolation(
                    f'slope domain ({low}, {high}) is not inside (-{p.v_star}, {p.v_star})'
                )
            if not w0 < parabola:
                raise RegimeViolation(f'w0 = {w0} is not below the parabola at v0 = {v0}')

        try:
            left = self.integration.integrate_graph_W(v0, w0, low)
            right = self.integration.integrate_graph_W(v0, w0, high)
        except DenominatorVanished as ex:
            raise RegimeViolation(f'graph of the {branch} branch meets the parabola: {ex}') from ex
        curve = self.integration.join_curves(left, right)

        if above and not np.all(curve.W > p.lambda_):
            raise RegimeViolation(f'inf W = {float(curve.W.min())} does not exceed lambda')
        if not above and not np.all(curve.W < self.phase.parabola(curve.v)):
            raise RegimeViolation('W does not stay below the parabola')

        first = self.integration.reconstruct_s_from_v(curve, v0, low, s0)
        second = self.integration.reconstruct_s_from_v(curve, v0, high, s0)
        traj = self.integration.join_on_anchor(first, second, s0)

        steps = np.diff(traj.v)
        if not (np.all(steps < 0) if above else np.all(steps > 0)):
            raise RegimeViolation(f'v is not monotone on the {branch} branch')
        if not traj.s_minus < traj.s_plus:
            raise RegimeViolation('front has an empty support')

        profile = self.reconstruct(traj, s0, S0, w0 * S0)
        label = ProfileType.SATURATED_FRONT_CONCAVE if above else ProfileType.SATURATED_FRONT_CONVEX
        slopes = self._front_slopes_(curve, profile)
        return profile.copy(update={
            'u_type': label,
            'S_type': label,
            'endpoint_slopes': slopes,
            'continuation': self.continuation_coefficients(profile),
        })

    def boundary_w_slopes(self, curve, v_edge: float, distances=BOUNDARY_DISTANCES) -> np.ndarray:
        """
        w' = W (g(a v - sigma) - v) at shrinking distances inside a flux boundary
        :param curve: Graph curve reaching the boundary
        :param v_edge: Boundary value of v
        :param distances: Distances relative to c, decreasing
        :return: Slopes, one per distance
        """
        p = self.params
        inward = -1.0 if v_edge > p.sigma / p.a else 1.0
        v = v_edge + inward * np.asarray(distances, dtype=float) * p.limiter.c / p.a
        W = self.integration.graph_values(curve, v)
        pairs = zip(W, v, strict=True)
        return np.array([float(self.phase.rhs(float(w), float(x))[0]) for w, x in pairs])

    def _front_slopes_(self, curve, profile: WaveProfile) -> EndpointSlopes:
        """
        Slope kinds of u at the flux boundaries, from the divergence of w' under refinement
        """
        kinds = []
        for v_edge in (float(profile.v[0]), float(profile.v[-1])):
            slopes = self.boundary_w_slopes(curve, v_edge)
            diverges = np.all(np.diff(np.abs(slopes)) > 0) and len(set(np.sign(slopes))) == 1
            if not diverges:
                kinds.append(None)
                continue
            kinds.append(SlopeKind.PLUS_INFINITY if slopes[-1] > 0 else SlopeKind.MINUS_INFINITY)
        return EndpointSlopes(
            u_prime_at_s_minus=kinds[0],
            u_prime_at_s_plus=kinds[1],
            s_prime_at_s_minus=float(profile.v[0] * profile.S[0]),
            s_prime_at_s_plus=float(profile.v[-1] * profile.S[-1]),
        )

    @staticmethod
    def log_concavity(profile: WaveProfile) -> np.ndarray:
        """
        Signs of (log S)'' = v' between consecutive samples
        :param profile: Profile
        :return: Array of -1, 0, 1
        """
        return np.sign(np.diff(profile.v) / np.diff(profile.s))
