"""
Evaluators for a known data-generating model: coefficient functions with
analytic derivatives, error variance, location density and covariate moments.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np
from scipy import stats

from gwle.core.exceptions import DimensionMismatchError
from gwle.schemas.truth import DensityFamily, Monomial, SigmaFamily, TruthSpec

logger = logging.getLogger(__name__)

_Term = Tuple[float, np.ndarray]


def _terms(monomials: Sequence[Monomial]) -> List[_Term]:
    return [(m.coef, np.asarray(m.powers, dtype=int)) for m in monomials]


def _differentiate(terms: List[_Term], s: int) -> List[_Term]:
    derived = []
    for coef, powers in terms:
        if powers[s] == 0:
            continue
        lowered = powers.copy()
        lowered[s] -= 1
        derived.append((coef * powers[s], lowered))
    return derived


def _evaluate(terms: List[_Term], points: np.ndarray) -> np.ndarray:
    total = np.zeros(points.shape[0])
    for coef, powers in terms:
        total += coef * np.prod(points ** powers, axis=1)
    return total


class TruthModel:
    """
    Oracle for the leading-term formulas. Evaluators are pure and safe for
    concurrent use.
    """

    def __init__(self, spec: TruthSpec):
        """
        Initialize the model.

        Args:
            spec: Validated truth specification
        """
        self.spec = spec
        self.d = spec.dimension
        self.p = spec.p
        self.intercept = spec.covariates.intercept
        self.lower = np.asarray(spec.density.lower, dtype=float)
        self.upper = np.asarray(spec.density.upper, dtype=float)

        self._beta = [_terms(c.terms) for c in spec.beta]
        self._beta_first = [[_differentiate(t, s) for s in range(self.d)] for t in self._beta]
        self._beta_second = [
            [[_differentiate(first[s], r) for r in range(self.d)] for s in range(self.d)]
            for first in self._beta_first
        ]

        random_count = self.p - (1 if self.intercept else 0)
        self._mean_offset = np.array([m.offset for m in spec.covariates.means], dtype=float)
        self._mean_slope = np.zeros((random_count, self.d))
        for k, mean in enumerate(spec.covariates.means):
            if mean.slope:
                self._mean_slope[k] = mean.slope
        self._noise_mask = np.ones(self.p)
        if self.intercept:
            self._noise_mask[0] = 0.0
        self.noise_scale = spec.covariates.noise_scale

    def _points(self, u) -> np.ndarray:
        points = np.atleast_2d(np.asarray(u, dtype=float))
        if points.shape[1] != self.d:
            raise DimensionMismatchError(f"locations must have length {self.d}")
        return points

    # ==================== Coefficient functions ====================

    def beta_at(self, points) -> np.ndarray:
        """beta(u) for every row, shape (n, p)."""
        points = self._points(points)
        return np.column_stack([_evaluate(t, points) for t in self._beta])

    def beta(self, u) -> np.ndarray:
        return self.beta_at(u)[0]

    def beta_gradient(self, u) -> np.ndarray:
        """(d, p) matrix with entry [s, k] = d beta_k / d u_s."""
        points = self._points(u)
        return np.array(
            [[_evaluate(self._beta_first[k][s], points)[0] for k in range(self.p)]
             for s in range(self.d)]
        )

    def beta_hessian(self, u) -> np.ndarray:
        """(p, d, d) stack of Hessians of each beta_k."""
        points = self._points(u)
        return np.array(
            [[[_evaluate(self._beta_second[k][s][r], points)[0] for r in range(self.d)]
              for s in range(self.d)]
             for k in range(self.p)]
        )

    def beta_second_derivatives(self, u) -> np.ndarray:
        """(d, p) matrix with entry [s, k] = d^2 beta_k / d u_s^2."""
        hessian = self.beta_hessian(u)
        return np.array([[hessian[k, s, s] for k in range(self.p)] for s in range(self.d)])

    # ==================== Error variance ====================

    def sigma_at(self, points) -> np.ndarray:
        points = self._points(points)
        sigma = self.spec.sigma
        values = np.full(points.shape[0], sigma.level)
        if sigma.family == SigmaFamily.QUADRATIC and sigma.curvature:
            center = np.asarray(sigma.center or (0.0,) * self.d, dtype=float)
            values = values + ((points - center) ** 2) @ np.asarray(sigma.curvature, dtype=float)
        return values

    def sigma(self, u) -> float:
        return float(self.sigma_at(u)[0])

    # ==================== Location density ====================

    def _unit(self, points: np.ndarray) -> np.ndarray:
        return (points - self.lower) / (self.upper - self.lower)

    def density_at(self, points) -> np.ndarray:
        points = self._points(points)
        inside = np.all((points >= self.lower) & (points <= self.upper), axis=1)
        width = self.upper - self.lower
        if self.spec.density.family == DensityFamily.UNIFORM:
            values = np.full(points.shape[0], 1.0 / np.prod(width))
        else:
            z = self._unit(points)
            alpha = np.asarray(self.spec.density.alpha, dtype=float)
            beta = np.asarray(self.spec.density.beta, dtype=float)
            values = np.prod(stats.beta.pdf(z, alpha, beta) / width, axis=1)
        return np.where(inside, values, 0.0)

    def density(self, u) -> float:
        return float(self.density_at(u)[0])

    def density_gradient(self, u) -> np.ndarray:
        """(d,) gradient of f; zero for the uniform family."""
        points = self._points(u)
        if self.spec.density.family == DensityFamily.UNIFORM:
            return np.zeros(self.d)
        z = self._unit(points)[0]
        alpha = np.asarray(self.spec.density.alpha, dtype=float)
        beta = np.asarray(self.spec.density.beta, dtype=float)
        score = ((alpha - 1.0) / z - (beta - 1.0) / (1.0 - z)) / (self.upper - self.lower)
        return self.density(u) * score

    def location_quantile(self, q: np.ndarray) -> np.ndarray:
        """Map probabilities in (0, 1)^d to locations with marginal density f."""
        q = np.asarray(q, dtype=float)
        if self.spec.density.family == DensityFamily.UNIFORM:
            z = q
        else:
            z = stats.beta.ppf(
                q,
                np.asarray(self.spec.density.alpha, dtype=float),
                np.asarray(self.spec.density.beta, dtype=float),
            )
        return self.lower + (self.upper - self.lower) * z

    def interior_margin(self, u) -> float:
        """Smallest distance from u to the boundary of the support box."""
        u = self._points(u)[0]
        return float(np.min(np.minimum(u - self.lower, self.upper - u)))

    # ==================== Covariate moments ====================

    def gamma_at(self, points) -> np.ndarray:
        """Gamma(u) = E(x | U = u) for every row, shape (n, p)."""
        points = self._points(points)
        columns = []
        if self.intercept:
            columns.append(np.ones(points.shape[0]))
        if self._mean_offset.size:
            columns.extend((self._mean_offset + points @ self._mean_slope.T).T)
        return np.column_stack(columns)

    def gamma(self, u) -> np.ndarray:
        return self.gamma_at(u)[0]

    def omega(self, u) -> np.ndarray:
        """Omega(u) = E(x' x | U = u), shape (p, p)."""
        gamma = self.gamma(u)
        return np.outer(gamma, gamma) + self.noise_scale ** 2 * np.diag(self._noise_mask)

    def omega_gradient(self, u) -> np.ndarray:
        """(d, p, p) stack of d Omega / d u_s."""
        gamma = self.gamma(u)
        gradients = []
        for s in range(self.d):
            slope = np.zeros(self.p)
            offset = 1 if self.intercept else 0
            slope[offset:] = self._mean_slope[:, s]
            gradients.append(np.outer(slope, gamma) + np.outer(gamma, slope))
        return np.array(gradients)
