"""Report figures rendered straight from a fitted draw set."""

from __future__ import annotations

from datetime import date
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .angular import default_grid
from .margins import AngularSample
from .mcmc import PosteriorDraws
from .summary import predictive_density, tau_estimate, tau_interval

CURVE = "#B03A2E"


def render_report(s: AngularSample, draws: PosteriorDraws, out_dir,
                  pooled: PosteriorDraws | None = None,
                  calendar: list[date] | None = None,
                  bins: int = 20) -> list[Path]:
    """Render the angle histograms with predictive overlays and the tau
    posterior to PNG files; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    day, when = tau_estimate(draws, calendar)
    lo, hi = tau_interval(draws)
    grid = default_grid()
    in_regime1 = np.asarray(s.times) <= day

    panels = [
        ("Whole period", np.ones(len(s), dtype=bool),
         predictive_density(pooled, 1, grid, label="pooled") if pooled else None),
        (f"Regime 1 (t <= {day})", in_regime1, predictive_density(draws, 1, grid)),
        (f"Regime 2 (t > {day})", ~in_regime1, predictive_density(draws, 2, grid)),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.8), sharey=True)
    for ax, (title, sel, curve) in zip(axes, panels):
        ax.hist(s.angles[sel], bins=np.linspace(0, 1, bins + 1),
                density=True, color="0.75", edgecolor="0.4")
        if curve is not None:
            ax.plot(curve.grid, curve.values, color=CURVE, lw=1.8)
        ax.set_title(title, fontsize=10)
        ax.set_xlabel("pseudo-angle w")
    axes[0].set_ylabel("density")
    fig.tight_layout()
    angles_path = out_dir / "fig_regimes.png"
    fig.savefig(angles_path, dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 3.2))
    day_edges = np.arange(np.floor(draws.tau.min()), np.ceil(draws.tau.max()) + 1)
    if len(day_edges) < 2:
        day_edges = np.array([day, day + 1.0])
    ax.hist(draws.tau, bins=day_edges, color="0.75", edgecolor="0.4")
    ax.axvline(day + 0.5, color=CURVE, lw=1.8, label=f"mode day {day}")
    ax.axvspan(lo, hi, color=CURVE, alpha=0.15, label="95% interval")
    label = f"change day (T = {draws.horizon})"
    if when is not None:
        label += f", mode = {when.isoformat()}"
    ax.set_xlabel(label)
    ax.set_ylabel("draws")
    ax.legend(fontsize=8)
    fig.tight_layout()
    tau_path = out_dir / "fig_tau_posterior.png"
    fig.savefig(tau_path, dpi=150)
    plt.close(fig)
    return [angles_path, tau_path]
