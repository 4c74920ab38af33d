"""Synthetic data generators used by the test and acceptance suites."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .angular import BernsteinWeights, sample_angle, uniform_weights, validate_weights
from .errors import DataError
from .ingest import GarchParams, ReturnSeries
from .margins import AngularSample
from .mcmc import _step_theta


def simulate_garch11(params: GarchParams, n: int, rng: np.random.Generator,
                     start: date = date(2020, 1, 1)) -> ReturnSeries:
    """Simulate a Gaussian GARCH(1,1) path started at its stationary variance."""
    if n < 1:
        raise DataError("n must be positive")
    # GarchParams already guarantees alpha + beta < 1, so this is finite.
    var0 = params.omega / (1.0 - params.alpha - params.beta)
    z = rng.standard_normal(n)
    x = np.empty(n)
    sig2 = var0
    eps_prev = 0.0
    for t in range(n):
        if t > 0:
            sig2 = params.omega + params.alpha * eps_prev ** 2 + params.beta * sig2
        eps_prev = np.sqrt(sig2) * z[t]
        x[t] = params.mu + eps_prev
    dates = [start + timedelta(days=t) for t in range(n)]
    return ReturnSeries(dates, x)


def random_weights(J: int, rng: np.random.Generator, n_steps: int = 200) -> BernsteinWeights:
    """A random valid weight vector: a constraint-preserving random walk from
    the uniform vector, rejecting steps that go negative."""
    theta = uniform_weights(J).theta
    step = 0.5 / (J - 1)
    for _ in range(n_steps):
        cand = _step_theta(theta, step, rng)
        if cand.min() >= 0.0:
            theta = cand
    wts = BernsteinWeights(J, theta)
    assert validate_weights(wts).ok
    return wts


@dataclass
class SyntheticSpec:
    """Plan for a planted change-point angular sample.

    tau_true = horizon is allowed and leaves regime 2 empty.
    """

    horizon: int
    n_exceed: int
    tau_true: float
    theta1: BernsteinWeights
    theta2: BernsteinWeights
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tau_true <= self.horizon:
            raise DataError("tau_true must lie in (0, horizon]")
        if not 1 <= self.n_exceed <= self.horizon:
            raise DataError("n_exceed must lie in 1..horizon")
        if self.theta1.J != self.theta2.J:
            raise DataError("regimes must share the same order J")

    def to_dict(self) -> dict:
        return {
            "T": self.horizon,
            "n_exceed": self.n_exceed,
            "tau_true": self.tau_true,
            "J": self.theta1.J,
            "theta1": [float(v) for v in self.theta1.theta],
            "theta2": [float(v) for v in self.theta2.theta],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        J = int(d["J"])
        return cls(
            horizon=int(d["T"]),
            n_exceed=int(d["n_exceed"]),
            tau_true=float(d["tau_true"]),
            theta1=BernsteinWeights(J, np.asarray(d["theta1"], dtype=float)),
            theta2=BernsteinWeights(J, np.asarray(d["theta2"], dtype=float)),
            seed=int(d.get("seed", 0)),
        )

    @classmethod
    def load(cls, path) -> "SyntheticSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def simulate_changepoint_angles(spec: SyntheticSpec,
                                start: date = date(2020, 1, 1)) -> AngularSample:
    """Draw exceedance times uniformly without replacement and angles from the
    regime the true change point assigns them to.

    Radii are synthetic values above an arbitrary threshold; nothing
    downstream reads them except reports.
    """
    from .angular import require_valid

    require_valid(spec.theta1)
    require_valid(spec.theta2)
    rng = np.random.default_rng(spec.seed)
    times = np.sort(rng.choice(spec.horizon, size=spec.n_exceed, replace=False) + 1)
    n1 = int(np.sum(times <= spec.tau_true))
    angles = np.empty(spec.n_exceed)
    if n1:
        angles[:n1] = sample_angle(spec.theta1, rng, size=n1)
    if spec.n_exceed - n1:
        angles[n1:] = sample_angle(spec.theta2, rng, size=spec.n_exceed - n1)
    threshold = 10.0
    radii = threshold + rng.exponential(scale=5.0, size=spec.n_exceed)
    return AngularSample(
        times=times,
        dates=[start + timedelta(days=int(t) - 1) for t in times],
        angles=angles,
        radii=radii,
        horizon=spec.horizon,
        threshold=threshold,
        level=None,
    )


def synthetic_calendar(horizon: int, start: date = date(2020, 1, 1)) -> list[date]:
    """Consecutive dates for observation indices 1..horizon."""
    return [start + timedelta(days=t) for t in range(horizon)]
