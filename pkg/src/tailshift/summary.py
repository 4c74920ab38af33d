"""Posterior summaries and plot-ready exports.

Everything here is computed from retained draws: the predictive angular
density per regime (pointwise mean over draws), the change-point estimate
(posterior mode over unit-day bins) and its credible interval, and the
delimited files a report or external plotting tool consumes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .angular import bernstein_basis, default_grid
from .errors import DataError
from .margins import AngularSample
from .mcmc import PosteriorDraws


@dataclass
class DensityCurve:
    grid: np.ndarray
    values: np.ndarray
    regime: int | str

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))


def predictive_density(draws: PosteriorDraws, regime: int,
                       grid: np.ndarray | None = None,
                       label: int | str | None = None) -> DensityCurve:
    """Pointwise average of the regime's density over all draws.

    The density is linear in the weights, so the average curve equals the
    curve at the averaged weights; one basis product computes it exactly.
    """
    if len(draws) == 0:
        raise DataError("no draws")
    if regime == 1:
        thetas = draws.theta1
    elif regime == 2:
        thetas = draws.theta2
    else:
        raise DataError("regime must be 1 or 2")
    if grid is None:
        grid = default_grid()
    values = bernstein_basis(draws.J, grid) @ thetas.mean(axis=0)
    return DensityCurve(np.asarray(grid, dtype=float), values, label or regime)


def tau_estimate(draws: PosteriorDraws,
                 calendar: list[date] | None = None) -> tuple[int, date | None]:
    """Posterior mode of tau over unit-day bins [d, d+1); earliest day wins ties.

    Day d is the last whole observation day of regime 1. With a horizon
    calendar it is mapped to that day's date.
    """
    if len(draws) == 0:
        raise DataError("no draws")
    days = np.floor(draws.tau).astype(int)
    counts = np.bincount(days)
    day = int(np.argmax(counts))
    when = None
    if calendar:
        when = calendar[min(max(day, 1), len(calendar)) - 1]
    return day, when


def tau_interval(draws: PosteriorDraws, level: float = 0.95) -> tuple[float, float]:
    """Equal-tailed credible interval from empirical quantiles."""
    if not 0.0 < level < 1.0:
        raise DataError("level must be in (0, 1)")
    if len(draws) < 2:
        raise DataError("need at least two draws")
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws.tau, [a, 1.0 - a], method="linear")
    return float(lo), float(hi)


def _known_seed(draws: PosteriorDraws) -> int | None:
    """Seed that produced the draws, or None for draws reloaded from disk."""
    if "seed" in draws.diagnostics:
        return draws.diagnostics["seed"]
    if "chains" in draws.diagnostics:
        return draws.config.seed
    return None


def _write_histogram(path, edges: np.ndarray, counts: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for i, c in enumerate(counts):
            writer.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), int(c)])


def _write_curve(path, curve: DensityCurve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["w", "h"])
        for w, h in zip(curve.grid, curve.values):
            writer.writerow([repr(float(w)), repr(float(h))])


def export_plot_data(s: AngularSample, draws: PosteriorDraws, out_dir,
                     pooled: PosteriorDraws | None = None,
                     calendar: list[date] | None = None,
                     bins: int = 20, grid_points: int = 512,
                     extra: dict | None = None) -> dict[str, Path]:
    """Write histogram, density and summary files into out_dir.

    Angle histograms (fixed edges on [0, 1]) are written for the whole sample
    and for the two regimes split at the estimated change day, so the regime
    counts partition the whole-sample counts. Predictive density grids are
    written per regime, plus a pooled single-regime curve when a pooled refit
    is supplied; pooled_refit.json records whether one was.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    day, when = tau_estimate(draws, calendar)
    lo, hi = tau_interval(draws)

    edges = np.linspace(0.0, 1.0, bins + 1)
    in_regime1 = np.asarray(s.times) <= day
    paths: dict[str, Path] = {}
    for name, sel in (
        ("hist_whole", np.ones(len(s), dtype=bool)),
        ("hist_regime1", in_regime1),
        ("hist_regime2", ~in_regime1),
    ):
        counts, _ = np.histogram(s.angles[sel], bins=edges)
        paths[name] = out_dir / f"{name}.csv"
        _write_histogram(paths[name], edges, counts)

    grid = default_grid(grid_points)
    for regime in (1, 2):
        curve = predictive_density(draws, regime, grid)
        paths[f"density_regime{regime}"] = out_dir / f"density_regime{regime}.csv"
        _write_curve(paths[f"density_regime{regime}"], curve)
    if pooled is not None:
        curve = predictive_density(pooled, 1, grid, label="pooled")
        paths["density_regimepooled"] = out_dir / "density_regimepooled.csv"
        _write_curve(paths["density_regimepooled"], curve)

    fixed_tau = None
    if pooled is not None:
        fixed_tau = pooled.config.fix_tau
        if fixed_tau is None and np.all(pooled.tau == pooled.tau[0]):
            # Reloaded draws carry no config; the constant tau column is it.
            fixed_tau = float(pooled.tau[0])
    marker = {
        "pooled_refit": pooled is not None,
        "fixed_tau": fixed_tau,
        "n_draws": None if pooled is None else len(pooled),
    }
    paths["pooled_refit"] = out_dir / "pooled_refit.json"
    with open(paths["pooled_refit"], "w") as fh:
        json.dump(marker, fh, indent=2)
        fh.write("\n")

    summary = {
        "tau_day": day,
        "tau_date": when.isoformat() if when else None,
        "tau_interval": [lo, hi],
        "interval_level": 0.95,
        "K": len(draws),
        "J": draws.J,
        "T": draws.horizon,
        "threshold": s.threshold,
        "q": s.level,
        "n_exceedances": len(s),
        "seed": _known_seed(draws),
    }
    if extra:
        summary.update(extra)
    paths["summary"] = out_dir / "summary.json"
    with open(paths["summary"], "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return paths


def load_density_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back a (w, h) grid file written by export_plot_data."""
    w, h = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["w", "h"]:
            raise DataError(f"{path}: expected header 'w,h'")
        for row in reader:
            w.append(float(row[0]))
            h.append(float(row[1]))
    return np.array(w), np.array(h)
