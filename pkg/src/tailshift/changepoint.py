"""Two-regime change-point model for the angular density.

Observation t belongs to regime 1 when t <= tau and to regime 2 otherwise;
each regime carries its own Bernstein weight vector of common order J. The
likelihood runs over the thresholded exceedance angles only, so it is
piecewise constant in tau with breakpoints at the exceedance times.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .angular import BernsteinWeights, bernstein_basis, require_valid, validate_weights
from .errors import DataError, NumericalError
from .margins import AngularSample


@dataclass
class ChangePointModel:
    """Regime weights, change point tau and the observation horizon T."""

    theta1: BernsteinWeights
    theta2: BernsteinWeights
    tau: float
    horizon: int

    def __post_init__(self):
        if self.theta1.J != self.theta2.J:
            raise DataError("regimes must share the same order J")

    @property
    def J(self) -> int:
        return self.theta1.J

    def to_dict(self) -> dict:
        return {
            "J": self.J,
            "theta1": [float(v) for v in self.theta1.theta],
            "theta2": [float(v) for v in self.theta2.theta],
            "tau": float(self.tau),
            "T": int(self.horizon),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChangePointModel":
        J = int(d["J"])
        return cls(
            theta1=BernsteinWeights(J, np.asarray(d["theta1"], dtype=float)),
            theta2=BernsteinWeights(J, np.asarray(d["theta2"], dtype=float)),
            tau=float(d["tau"]),
            horizon=int(d["T"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def regime_of(t: float, tau: float) -> int:
    """Regime index for time t: 1 on [0, tau], 2 on (tau, T]."""
    return 1 if t <= tau else 2


def _split_loglik(logh1: np.ndarray, logh2: np.ndarray, times: np.ndarray, tau: float) -> float:
    # Internal: both regime log densities precomputed at every observation.
    mask = times <= tau
    return float(logh1[mask].sum() + logh2[~mask].sum())


def log_likelihood(m: ChangePointModel, s: AngularSample) -> float:
    """Sum of log angular densities, regime by regime; empty regimes add 0."""
    require_valid(m.theta1)
    require_valid(m.theta2)
    if len(s) == 0:
        return 0.0
    basis = bernstein_basis(m.J, s.angles)
    h1 = basis @ m.theta1.theta
    h2 = basis @ m.theta2.theta
    mask = np.asarray(s.times) <= m.tau
    active = np.where(mask, h1, h2)
    if np.any(active <= 0.0) or not np.all(np.isfinite(active)):
        bad = int(np.argmin(np.where(active > 0.0, np.inf, 0.0)))
        raise NumericalError(
            f"density underflow at angle w={s.angles[bad]!r} (t={int(s.times[bad])})"
        )
    with np.errstate(divide="ignore"):
        return _split_loglik(np.log(h1), np.log(h2), np.asarray(s.times), m.tau)


def log_prior(m: ChangePointModel) -> float:
    """Flat prior: uniform weights on the constraint polytope and uniform tau.

    Returns -inf outside the support instead of raising, so samplers can use
    it directly in acceptance ratios.
    """
    if not 0.0 < m.tau < m.horizon:
        return -math.inf
    if not validate_weights(m.theta1).ok or not validate_weights(m.theta2).ok:
        return -math.inf
    return -math.log(m.horizon)


def log_posterior(m: ChangePointModel, s: AngularSample) -> float:
    """Unnormalized log posterior; -inf whenever the prior is."""
    lp = log_prior(m)
    if lp == -math.inf:
        return -math.inf
    return lp + log_likelihood(m, s)
