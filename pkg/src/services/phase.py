"""
Planar (w, v) system: right-hand side, nullclines, equilibria and their linearisation
"""

import math

import numpy as np
from scipy.optimize import brentq

from data.entities import Equilibrium, Nullclines, PhaseRegime, StabilityLabel
from data.errors import ConfigurationError, DegenerateError
from services.base import BaseService
from services.flux import g_inverse, g_prime, slope_domain

BRACKET_INTERVALS = 4096
DEGENERATE_RTOL = 1e-9
# smallest relative tolerance brentq accepts
ROOT_RTOL = 4 * np.finfo(float).eps


class PhaseService(BaseService):
    """
    Service for the phase-plane geometry of one parameter set
    """

    def flux_slope(self, v):
        """
        g(a v - sigma)
        :param v: Scalar or array
        :return: Value
        :raise DomainError: v outside the slope domain
        """
        p = self.params
        return g_inverse(p.limiter, p.a * np.asarray(v, dtype=float) - p.sigma)

    def parabola(self, v):
        """
        Height of the v-nullcline, lambda - gamma v^2
        :param v: Scalar or array
        :return: Value
        """
        v = np.asarray(v, dtype=float)
        return self.params.lambda_ - self.params.gamma * v * v

    def rhs(self, w: float, v: float) -> np.ndarray:
        """
        Evaluates (w', v')
        :param w: Ratio u / S
        :param v: Log-derivative S' / S
        :return: Two-vector
        :raise DomainError: v outside the slope domain of a saturated limiter
        """
        p = self.params
        w_prime = w * (float(self.flux_slope(v)) - v)
        v_prime = (p.lambda_ - p.gamma * v * v - w) / p.gamma
        return np.array([w_prime, v_prime])

    def jacobian(self, w: float, v: float) -> np.ndarray:
        """
        Linearisation [[g - v, w (a g' - 1)], [-1/gamma, -2 v]]
        :param w: Ratio u / S
        :param v: Log-derivative S' / S
        :return: 2x2 matrix
        """
        p = self.params
        y = p.a * v - p.sigma
        g = float(g_inverse(p.limiter, y))
        dg = float(g_prime(p.limiter, y))
        return np.array([[g - v, w * (p.a * dg - 1.0)], [-1.0 / p.gamma, -2.0 * v]])

    def is_equilibrium(self, w: float, v: float) -> bool:
        """
        Whether the right-hand side vanishes relative to the size of the point
        :param w: Ratio u / S
        :param v: Log-derivative S' / S
        :return: Boolean
        """
        scale = 1.0 + math.hypot(w, v)
        return float(np.linalg.norm(self.rhs(w, v))) <= 1e-12 * scale

    def vertical_lines(self) -> tuple[float, ...]:
        """
        Values of v where w' vanishes off the axis, g(a v - sigma) = v
        :return: Sorted tuple
        """
        p = self.params
        if not p.limiter.saturated:
            if math.isclose(p.a, p.limiter.mu, rel_tol=1e-12):
                return ()
            return (p.sigma / (p.a - p.limiter.mu),)
        return tuple(self._saturated_roots_())

    def _saturated_roots_(self) -> list[float]:
        """
        Brackets g(a v - sigma) - v on a dense grid of the slope domain and refines each sign change
        :return: Roots in increasing order
        """
        p = self.params
        low, high = slope_domain(p.limiter, p.a, p.sigma)
        margin = self.controls.boundary_eps * p.limiter.c / p.a
        grid = np.linspace(low + margin, high - margin, BRACKET_INTERVALS + 1)
        values = self.flux_slope(grid) - grid

        def gap(v: float) -> float:
            return float(self.flux_slope(v)) - v

        roots = [float(x) for x in grid[values == 0.0]]
        changes = np.nonzero(values[:-1] * values[1:] < 0)[0]
        for idx in changes:
            roots.append(brentq(gap, grid[idx], grid[idx + 1], xtol=1e-15, rtol=ROOT_RTOL))
        return sorted(roots)

    def nullclines(self, v_grid) -> Nullclines:
        """
        Samples the parabola on a v grid and reports the vertical lines
        :param v_grid: Values of v
        :return: Nullclines
        :raise ConfigurationError: empty grid
        """
        v = np.asarray(v_grid, dtype=float).ravel()
        if v.size == 0:
            raise ConfigurationError('nullcline grid is empty')
        return Nullclines(v=v, parabola=self.parabola(v), vertical_lines=self.vertical_lines())

    def equilibria(self) -> list[Equilibrium]:
        """
        All fixed points with w >= 0, axis points first
        :return: List of equilibria
        """
        p = self.params
        low, high = slope_domain(p.limiter, p.a, p.sigma)
        points: list[tuple[float, float]] = []
        for v in (p.v_star, -p.v_star):
            if low < v < high and (0.0, v) not in points:
                points.append((0.0, v))

        if p.limiter.saturated or not p.at_critical_speed():
            for v in self.vertical_lines():
                w = float(self.parabola(v))
                if w > 0:
                    points.append((w, v))

        result = [self._linearise_(w, v) for w, v in points]
        self.logger.debug('Found %s equilibria for %s', len(result), p)
        return result

    def _linearise_(self, w: float, v: float) -> Equilibrium:
        """
        Builds the Equilibrium with eigenvalues, eigenvectors and label
        :param w: Ratio
        :param v: Log-derivative
        :return: Equilibrium
        """
        jac = self.jacobian(w, v)
        values, vectors = np.linalg.eig(jac)
        order = np.argsort(-values.real, kind='stable')
        values = values[order]
        vectors = vectors[:, order]

        tol = DEGENERATE_RTOL * max(1.0, float(np.abs(jac).max()))
        eigenvalues = (complex(values[0]), complex(values[1]))
        is_real = all(abs(x.imag) <= tol for x in eigenvalues)

        eigenvectors = None
        if is_real:
            eigenvalues = (complex(eigenvalues[0].real), complex(eigenvalues[1].real))
            eigenvectors = tuple(self._normalise_(vectors[:, k].real) for k in range(2))

        return Equilibrium(
            w=w,
            v=v,
            eigenvalues=eigenvalues,
            eigenvectors=eigenvectors,
            label=self._label_(eigenvalues, tol),
        )

    @staticmethod
    def _normalise_(vector: np.ndarray) -> np.ndarray:
        """
        Scales an eigenvector to second component 1, or first component 1 when the second vanishes
        :param vector: Eigenvector
        :return: Scaled copy
        """
        if abs(vector[1]) > 1e-14 * float(np.abs(vector).max()):
            return vector / vector[1]
        return vector / vector[0]

    @staticmethod
    def _label_(eigenvalues: tuple[complex, complex], tol: float) -> StabilityLabel:
        """
        Stability label from the eigenvalues
        :param eigenvalues: Eigenvalue pair
        :param tol: Threshold below which a value counts as zero
        :return: Label
        """
        if any(abs(x) <= tol for x in eigenvalues) or any(abs(x.real) <= tol for x in eigenvalues):
            return StabilityLabel.DEGENERATE
        if any(abs(x.imag) > tol for x in eigenvalues):
            if eigenvalues[0].real < 0:
                return StabilityLabel.STABLE_FOCUS
            return StabilityLabel.UNSTABLE_FOCUS
        first, second = eigenvalues[0].real, eigenvalues[1].real
        if first < 0 and second < 0:
            return StabilityLabel.STABLE_NODE
        if first > 0 and second > 0:
            return StabilityLabel.UNSTABLE_NODE
        return StabilityLabel.SADDLE

    def eigenstructure(self, e: Equilibrium) -> tuple[tuple[complex, complex], tuple | None]:
        """
        Eigenvalues and eigenvectors at an equilibrium
        :param e: Equilibrium of these parameters
        :return: (eigenvalues, eigenvectors or None for a complex pair)
        :raise DegenerateError: zero eigenvalue
        """
        item = self._linearise_(e.w, e.v)
        if item.label == StabilityLabel.DEGENERATE:
            raise DegenerateError(f'zero eigenvalue at ({e.w}, {e.v}): {item.eigenvalues}')
        return item.eigenvalues, item.eigenvectors

    def stable_direction(self, e: Equilibrium) -> tuple[float, np.ndarray]:
        """
        Negative eigenvalue and its eigenvector at a saddle
        :param e: Saddle
        :return: (eigenvalue, eigenvector)
        """
        values, vectors = self.eigenstructure(e)
        if vectors is None:
            raise DegenerateError(f'equilibrium ({e.w}, {e.v}) has no real eigenvectors')
        return values[1].real, vectors[1]

    def regime(self) -> PhaseRegime:
        """
        Case of the linear-diffusion partition by a and sigma against sigma_star
        :return: Regime
        """
        p = self.params
        if p.limiter.saturated:
            return PhaseRegime.SATURATED
        mu = p.limiter.mu
        if math.isclose(p.a, mu, rel_tol=1e-12):
            return PhaseRegime.C
        if p.at_critical_speed():
            return PhaseRegime.CRITICAL
        slow = p.sigma < p.sigma_star
        if p.a < mu:
            return PhaseRegime.A if slow else PhaseRegime.B
        return PhaseRegime.D if slow else PhaseRegime.E
