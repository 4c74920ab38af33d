"""Price ingestion, negative log returns and the GARCH(1,1) volatility filter.

Raw inputs are per-asset CSV files of daily closing prices. They are turned
into negative log returns, devolatilized with a Gaussian quasi-likelihood
GARCH(1,1) fit, and paired by calendar date. The standardized residuals are
what the rank transform downstream consumes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .errors import DataError, NumericalError

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class PriceSeries:
    """Daily closing prices sorted by date."""

    dates: list[date]
    prices: np.ndarray

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        if len(self.dates) != len(self.prices):
            raise DataError("dates and prices differ in length")
        if len(self.prices) < 2:
            raise DataError("need at least two price rows")
        if np.any(self.prices <= 0.0):
            raise DataError("prices must be strictly positive")
        for a, b in zip(self.dates, self.dates[1:]):
            if a >= b:
                raise DataError(f"dates not strictly increasing at {b}")

    def __len__(self):
        return len(self.prices)


@dataclass
class ReturnSeries:
    """Negative log returns, dated by the later of the two days involved."""

    dates: list[date]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.dates) != len(self.values):
            raise DataError("dates and values differ in length")

    def __len__(self):
        return len(self.values)


@dataclass
class GarchParams:
    """GARCH(1,1) parameters with a constant mean term."""

    mu: float
    omega: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.omega > 0.0:
            raise DataError("omega must be positive")
        if self.alpha < 0.0 or self.beta < 0.0:
            raise DataError("alpha and beta must be nonnegative")
        if not self.alpha + self.beta < 1.0:
            raise DataError("alpha + beta must be below one")


@dataclass
class GarchFit:
    """Fitted filter: parameters, conditional variances and residuals per date."""

    params: GarchParams
    dates: list[date]
    cond_var: np.ndarray
    residuals: np.ndarray
    loglik: float
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "params": {
                "mu": self.params.mu,
                "omega": self.params.omega,
                "alpha": self.params.alpha,
                "beta": self.params.beta,
            },
            "loglik": self.loglik,
            "dates": [d.isoformat() for d in self.dates],
            "cond_var": [float(v) for v in self.cond_var],
            "residuals": [float(z) for z in self.residuals],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GarchFit":
        p = d["params"]
        return cls(
            params=GarchParams(p["mu"], p["omega"], p["alpha"], p["beta"]),
            dates=[date.fromisoformat(s) for s in d["dates"]],
            cond_var=np.asarray(d["cond_var"], dtype=float),
            residuals=np.asarray(d["residuals"], dtype=float),
            loglik=float(d["loglik"]),
            warnings=list(d.get("warnings", [])),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


@dataclass
class PairedResiduals:
    """Standardized residuals of two assets on their common dates."""

    dates: list[date]
    first: np.ndarray
    second: np.ndarray

    def __len__(self):
        return len(self.dates)


@dataclass
class OptimizerSettings:
    maxiter: int = 5000
    xatol: float = 1e-6
    fatol: float = 1e-8


def load_price_csv(path) -> PriceSeries:
    """Read a `date,close` CSV into a PriceSeries.

    Dates must be ISO-8601 and unique, prices strictly positive. Rows may
    arrive in any order and are sorted by date. Malformed rows are rejected
    with their line number (the header is line 1).
    """
    rows: list[tuple[date, float]] = []
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise DataError(f"{path}: {e.strerror or e}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if [c.strip().lower() for c in header] != ["date", "close"]:
            raise DataError(f"{path}: line 1: expected header 'date,close'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise DataError(f"{path}: line {lineno}: expected two fields")
            try:
                d = date.fromisoformat(row[0].strip())
            except ValueError:
                raise DataError(
                    f"{path}: line {lineno}: bad date {row[0]!r}"
                ) from None
            try:
                p = float(row[1])
            except ValueError:
                raise DataError(
                    f"{path}: line {lineno}: bad price {row[1]!r}"
                ) from None
            if not math.isfinite(p) or p <= 0.0:
                raise DataError(f"{path}: line {lineno}: price must be positive")
            rows.append((d, p))
    if len(rows) < 2:
        raise DataError(f"{path}: need at least two price rows")
    seen: dict[date, int] = {}
    for d, _ in rows:
        seen[d] = seen.get(d, 0) + 1
    dupes = sorted(d for d, c in seen.items() if c > 1)
    if dupes:
        raise DataError(f"{path}: duplicate date {dupes[0].isoformat()}")
    rows.sort(key=lambda r: r[0])
    return PriceSeries([d for d, _ in rows], np.array([p for _, p in rows]))


def negative_log_returns(p: PriceSeries) -> ReturnSeries:
    """Negative log returns log(p[t] / p[t+1]), one fewer row than prices."""
    prices = p.prices
    values = np.log(prices[:-1] / prices[1:])
    return ReturnSeries(p.dates[1:], values)


def _conditional_variance(params: GarchParams, x: np.ndarray):
    """Variance recursion sigma2[t] = omega + alpha*eps2[t-1] + beta*sigma2[t-1].

    Seeded with presample eps2 = sigma2 = mean((x - mu)^2), so
    sigma2[0] = omega + (alpha + beta) * mean((x - mu)^2).
    """
    eps = x - params.mu
    e2 = eps * eps
    s0 = float(e2.mean())
    drive = params.omega + params.alpha * np.concatenate(([s0], e2[:-1]))
    # One-pole IIR filter: sigma2[t] = drive[t] + beta * sigma2[t-1].
    sig2, _ = lfilter([1.0], [1.0, -params.beta], drive, zi=[params.beta * s0])
    return eps, sig2


def garch_loglik(params: GarchParams, r: ReturnSeries | np.ndarray) -> float:
    """Gaussian log likelihood of returns under the GARCH(1,1) filter."""
    x = r.values if isinstance(r, ReturnSeries) else np.asarray(r, dtype=float)
    if x.size == 0:
        raise DataError("empty return series")
    eps, sig2 = _conditional_variance(params, x)
    ll = -0.5 * np.sum(LOG_2PI + np.log(sig2) + eps * eps / sig2)
    if not np.isfinite(ll):
        raise NumericalError("non-finite GARCH log likelihood")
    return float(ll)


def _pack(params: GarchParams) -> np.ndarray:
    rest = 1.0 - params.alpha - params.beta
    return np.array([
        params.mu,
        math.log(params.omega),
        math.log(params.alpha / rest),
        math.log(params.beta / rest),
    ])


def _unpack(v: np.ndarray) -> GarchParams:
    # Softmax over (alpha, beta, remainder) keeps alpha+beta < 1 for free.
    ea, eb = math.exp(v[2]), math.exp(v[3])
    denom = 1.0 + ea + eb
    return GarchParams(float(v[0]), math.exp(v[1]), ea / denom, eb / denom)


def fit_garch11(r: ReturnSeries, opt: OptimizerSettings | None = None) -> GarchFit:
    """Fit GARCH(1,1) by quasi-maximum likelihood with a Nelder-Mead search.

    The search runs in a transformed space (free mu, log omega, softmax
    weights for alpha and beta) so every candidate is a valid parameter set.
    Starts from mu = sample mean, omega = 0.1 * var, alpha = 0.1, beta = 0.8.
    """
    opt = opt or OptimizerSettings()
    x = r.values
    if len(x) < 50:
        raise DataError(f"need at least 50 returns to fit, got {len(x)}")
    var0 = float(x.var())
    if var0 <= 0.0:
        raise DataError("returns have zero variance")
    init = GarchParams(float(x.mean()), 0.1 * var0, 0.1, 0.8)
    init_ll = garch_loglik(init, x)

    def objective(v):
        try:
            return -garch_loglik(_unpack(v), x)
        except (NumericalError, OverflowError, DataError):
            return 1e12

    res = minimize(
        objective,
        _pack(init),
        method="Nelder-Mead",
        options={
            "maxiter": opt.maxiter,
            "xatol": opt.xatol,
            "fatol": opt.fatol,
        },
    )
    if not res.success:
        raise NumericalError(f"GARCH optimizer did not converge: {res.message}")
    params = _unpack(res.x)
    ll = garch_loglik(params, x)
    if ll < init_ll:
        # Nelder-Mead keeps the best vertex, so this cannot regress; guard anyway.
        params, ll = init, init_ll
    warnings = []
    if params.alpha + params.beta > 0.999:
        warnings.append(
            f"persistence alpha+beta = {params.alpha + params.beta:.6f} "
            "is at the unit boundary"
        )
    eps, sig2 = _conditional_variance(params, x)
    return GarchFit(
        params=params,
        dates=list(r.dates),
        cond_var=sig2,
        residuals=eps / np.sqrt(sig2),
        loglik=ll,
        warnings=warnings,
    )


def align_pairs(a: GarchFit, b: GarchFit) -> PairedResiduals:
    """Pair two fitted series on the intersection of their dates, in order."""
    in_b = {d: i for i, d in enumerate(b.dates)}
    shared = [(i, in_b[d]) for i, d in enumerate(a.dates) if d in in_b]
    if not shared:
        raise DataError("no overlapping dates between the two series")
    ia = np.array([i for i, _ in shared])
    ib = np.array([j for _, j in shared])
    return PairedResiduals(
        dates=[a.dates[i] for i in ia],
        first=a.residuals[ia],
        second=b.residuals[ib],
    )
