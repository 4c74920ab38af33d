"""Bernstein polynomial angular densities on (0, 1).

A density of order J is the mixture sum_i theta_i * Beta(i, J-i) over
i = 1..J-1. Weights are nonnegative, sum to one, and satisfy the moment
constraint sum_i i*theta_i = J/2, which pins the density mean at one half;
that is what makes the mixture a valid angular density for a bivariate
extreme value distribution on the unit Pareto scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .errors import DataError, NumericalError

SUM_TOL = 1e-10
GRID_EPS = 1e-6


@dataclass
class BernsteinWeights:
    """Mixture weights theta_1..theta_{J-1} for order J.

    Instances are not validated on construction: proposal moves in the sampler
    legitimately step outside the constraint set and are rejected there. Use
    validate_weights to check an instance.
    """

    J: int
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.J < 4:
            raise DataError("order J must be at least 4")
        if self.theta.shape != (self.J - 1,):
            raise DataError(
                f"order {self.J} needs {self.J - 1} weights, got {self.theta.shape}"
            )


@dataclass
class WeightReport:
    ok: bool
    sum_error: float
    mean_error: float
    min_weight: float
    violations: list[str] = field(default_factory=list)


def validate_weights(wts: BernsteinWeights, tol: float = SUM_TOL) -> WeightReport:
    """Check nonnegativity and both constraint sums, reporting any slack."""
    theta = wts.theta
    idx = np.arange(1, wts.J)
    sum_error = float(abs(theta.sum() - 1.0))
    mean_error = float(abs(idx @ theta - wts.J / 2.0))
    min_weight = float(theta.min())
    violations = []
    if not np.all(np.isfinite(theta)):
        violations.append("non-finite weight")
    if min_weight < 0.0:
        violations.append(f"negative weight {min_weight:.3e}")
    if sum_error > tol:
        violations.append(f"weights sum off by {sum_error:.3e}")
    if mean_error > tol:
        violations.append(f"moment sum off by {mean_error:.3e}")
    return WeightReport(not violations, sum_error, mean_error, min_weight, violations)


def require_valid(wts: BernsteinWeights) -> None:
    report = validate_weights(wts)
    if not report.ok:
        raise DataError("invalid weights: " + "; ".join(report.violations))


def uniform_weights(J: int) -> BernsteinWeights:
    """Equal weights 1/(J-1); both constraints hold exactly by symmetry."""
    if J < 4:
        raise DataError("order J must be at least 4")
    return BernsteinWeights(J, np.full(J - 1, 1.0 / (J - 1)))


def dirichlet_density(w, a1: int, a2: int):
    """Beta(a1, a2) density at w, computed through log gamma.

    Both shape indices must be integers >= 1, so the density is bounded and
    the mixture has no boundary singularities.
    """
    if int(a1) != a1 or int(a2) != a2 or a1 < 1 or a2 < 1:
        raise DataError("shape indices must be integers >= 1")
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr <= 0.0) or np.any(w_arr >= 1.0):
        raise DataError("w must lie strictly inside (0, 1)")
    log_norm = gammaln(a1 + a2) - gammaln(a1) - gammaln(a2)
    out = np.exp(log_norm + (a1 - 1) * np.log(w_arr) + (a2 - 1) * np.log1p(-w_arr))
    return float(out) if np.isscalar(w) else out


def bernstein_basis(J: int, w) -> np.ndarray:
    """Matrix of Beta(i, J-i) densities, shape (len(w), J-1)."""
    w_arr = np.atleast_1d(np.asarray(w, dtype=float))
    if np.any(w_arr <= 0.0) or np.any(w_arr >= 1.0):
        raise DataError("w must lie strictly inside (0, 1)")
    i = np.arange(1, J)
    log_norm = gammaln(J) - gammaln(i) - gammaln(J - i)
    logs = (
        log_norm
        + np.outer(np.log(w_arr), i - 1)
        + np.outer(np.log1p(-w_arr), J - i - 1)
    )
    return np.exp(logs)


def eval_density(wts: BernsteinWeights, w):
    """Mixture density at w; w may be a scalar or an array in (0, 1)."""
    require_valid(wts)
    values = bernstein_basis(wts.J, w) @ wts.theta
    return float(values[0]) if np.isscalar(w) else values


def density_mean(wts: BernsteinWeights) -> float:
    """Mean of the density: sum_i theta_i * i/J, one half for valid weights."""
    idx = np.arange(1, wts.J)
    return float(idx @ wts.theta / wts.J)


def sample_angle(wts: BernsteinWeights, rng: np.random.Generator, size: int | None = None):
    """Draw from the mixture: pick component i with probability theta_i,
    then draw Beta(i, J-i)."""
    require_valid(wts)
    p = wts.theta / wts.theta.sum()
    n = 1 if size is None else int(size)
    comp = rng.choice(wts.J - 1, size=n, p=p)
    draws = rng.beta(comp + 1.0, wts.J - comp - 1.0)
    # Beta draws can land on the closed boundary in floats; nudge inside.
    draws = np.clip(draws, 1e-12, 1.0 - 1e-12)
    return float(draws[0]) if size is None else draws


def default_grid(n: int = 512) -> np.ndarray:
    """Evaluation grid on (0, 1), pushed close enough to the endpoints that
    trapezoid sums capture boundary-heavy mixtures."""
    if n < 2:
        raise DataError("grid needs at least two points")
    return np.linspace(GRID_EPS, 1.0 - GRID_EPS, n)


def density_grid(wts: BernsteinWeights, n: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Density evaluated on the default grid, as (w, h) columns for export."""
    w = default_grid(n)
    return w, eval_density(wts, w)


def _mixture(theta: np.ndarray, J: int, w: float) -> float:
    # Unchecked scalar mixture value for quadrature integrands.
    i = np.arange(1, J)
    log_norm = gammaln(J) - gammaln(i) - gammaln(J - i)
    return float(
        np.exp(log_norm + (i - 1) * math.log(w) + (J - i - 1) * math.log1p(-w)) @ theta
    )


def density_integral(wts: BernsteinWeights) -> float:
    """Adaptive quadrature of the density over (0, 1); should be 1."""
    require_valid(wts)
    value, err = quad(
        lambda w: _mixture(wts.theta, wts.J, w), 0.0, 1.0,
        epsabs=1e-10, epsrel=1e-10, limit=200,
    )
    if err > 1e-8:
        raise NumericalError(f"density quadrature error {err:.2e} above 1e-8")
    return value


def bev_cdf(wts: BernsteinWeights, x: float, y: float) -> float:
    """Bivariate extreme value distribution at (x, y) on unit Frechet margins.

    G(x, y) = exp(-2 * integral of max(w/x, (1-w)/y) against the density).
    The integrand has a kink where the two branches cross, at
    w* = x/(x+y); the quadrature splits there.
    """
    require_valid(wts)
    if not (x > 0.0 and y > 0.0):
        raise DataError("x and y must be positive")
    theta, J = wts.theta, wts.J
    w_star = x / (x + y)

    def integrand(w):
        return max(w / x, (1.0 - w) / y) * _mixture(theta, J, w)

    value, err = quad(
        integrand, 0.0, 1.0, points=[w_star],
        epsabs=1e-10, epsrel=1e-10, limit=200,
    )
    if err > 1e-8:
        raise NumericalError(f"exponent quadrature error {err:.2e} above 1e-8")
    return math.exp(-2.0 * value)
