"""Rank-based unit Pareto margins, pseudo-angles and radial thresholding."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import DataError
from .ingest import PairedResiduals


@dataclass
class ParetoPairs:
    """Componentwise unit Pareto scores for a pair of residual series."""

    times: np.ndarray
    dates: list[date] | None
    first: np.ndarray
    second: np.ndarray

    def __len__(self):
        return len(self.first)


@dataclass
class AngularSample:
    """Pseudo-angles and radii at observation times 1..horizon.

    Before thresholding the sample holds one row per paired observation and
    threshold is None; afterwards only radial exceedances remain, threshold is
    the smallest retained radius and level records the quantile used.
    """

    times: np.ndarray
    dates: list[date] | None
    angles: np.ndarray
    radii: np.ndarray
    horizon: int
    threshold: float | None = None
    level: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times)
        self.angles = np.asarray(self.angles, dtype=float)
        self.radii = np.asarray(self.radii, dtype=float)
        n = len(self.angles)
        if len(self.times) != n or len(self.radii) != n:
            raise DataError("times, angles and radii differ in length")
        if self.dates is not None and len(self.dates) != n:
            raise DataError("dates differ in length")
        if n and (np.any(self.angles <= 0.0) or np.any(self.angles >= 1.0)):
            raise DataError("angles must lie strictly inside (0, 1)")
        if n and np.any(np.diff(self.times) <= 0):
            raise DataError("times must be strictly increasing")
        if n and (self.times[0] < 1 or self.times[-1] > self.horizon):
            raise DataError("times must lie in 1..horizon")

    def __len__(self):
        return len(self.angles)


def rank_pareto_transform(values: np.ndarray) -> np.ndarray:
    """Map values to unit Pareto scale through their ranks.

    A value of rank R (1 = smallest, ties kept in input order) becomes
    1 / (1 - R/(n+1)), so outputs live in (1, n+1] and depend on the data
    only through the ordering.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DataError("need a 1-d array of at least two values")
    if not np.all(np.isfinite(x)):
        raise DataError("values must be finite")
    ranks = rankdata(x, method="ordinal")
    n = len(x)
    return 1.0 / (1.0 - ranks / (n + 1.0))


def pareto_pairs(paired: PairedResiduals) -> ParetoPairs:
    """Apply the rank transform to each margin of a paired residual series."""
    n = len(paired)
    return ParetoPairs(
        times=np.arange(1, n + 1),
        dates=list(paired.dates),
        first=rank_pareto_transform(paired.first),
        second=rank_pareto_transform(paired.second),
    )


def make_angular_sample(pairs: ParetoPairs) -> AngularSample:
    """Decompose Pareto pairs into pseudo-angles w = e1/(e1+e2) and radii e1+e2."""
    if len(pairs) == 0:
        raise DataError("empty pair sample")
    r = pairs.first + pairs.second
    return AngularSample(
        times=np.asarray(pairs.times),
        dates=list(pairs.dates) if pairs.dates is not None else None,
        angles=pairs.first / r,
        radii=r,
        horizon=len(pairs),
    )


def threshold_exceedances(s: AngularSample, q: float = 0.90) -> AngularSample:
    """Keep the ceil((1-q)*horizon) observations with the largest radii.

    Ties are broken in favor of earlier times. The recorded threshold is the
    smallest retained radius, so re-applying at the same level is the identity.
    """
    if not 0.0 < q < 1.0:
        raise DataError("quantile level must be in (0, 1)")
    if len(s) == 0:
        raise DataError("empty angular sample")
    # The 1e-9 guard keeps exact-integer products from rounding up.
    k = math.ceil((1.0 - q) * s.horizon - 1e-9)
    if k <= 0:
        raise DataError(f"level {q} leaves no exceedances for horizon {s.horizon}")
    k = min(k, len(s))
    order = np.lexsort((s.times, -s.radii))[:k]
    keep = np.sort(order)
    return AngularSample(
        times=s.times[keep],
        dates=[s.dates[i] for i in keep] if s.dates is not None else None,
        angles=s.angles[keep],
        radii=s.radii[keep],
        horizon=s.horizon,
        threshold=float(s.radii[keep].min()),
        level=q,
    )


def write_angular_sample(s: AngularSample, csv_path, calendar: list[date] | None = None) -> Path:
    """Write a `t,date,w,r` CSV plus a JSON sidecar with sample metadata.

    The sidecar records horizon, threshold and level, and optionally the full
    horizon calendar (one date per observation index 1..horizon) so later
    stages can place a change point on a real date.
    """
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "date", "w", "r"])
        for i in range(len(s)):
            d = s.dates[i].isoformat() if s.dates is not None else ""
            writer.writerow([int(s.times[i]), d, repr(float(s.angles[i])),
                             repr(float(s.radii[i]))])
    sidecar = {
        "horizon": int(s.horizon),
        "threshold": s.threshold,
        "q": s.level,
        "n": len(s),
        "calendar": [d.isoformat() for d in calendar] if calendar else None,
    }
    with open(csv_path.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    return csv_path


def load_angular_sample(csv_path) -> tuple[AngularSample, list[date] | None]:
    """Read a sample written by write_angular_sample; returns (sample, calendar)."""
    csv_path = Path(csv_path)
    times, dates, angles, radii = [], [], [], []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["t", "date", "w", "r"]:
            raise DataError(f"{csv_path}: expected header 't,date,w,r'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{csv_path}: line {lineno}: expected four fields")
            try:
                times.append(int(row[0]))
                dates.append(date.fromisoformat(row[1]) if row[1] else None)
                angles.append(float(row[2]))
                radii.append(float(row[3]))
            except ValueError:
                raise DataError(f"{csv_path}: line {lineno}: malformed row") from None
    sidecar_path = csv_path.with_suffix(".json")
    if not sidecar_path.exists():
        raise DataError(f"missing sidecar {sidecar_path}")
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    calendar = meta.get("calendar")
    sample = AngularSample(
        times=np.array(times, dtype=int),
        dates=dates if all(d is not None for d in dates) and dates else None,
        angles=np.array(angles),
        radii=np.array(radii),
        horizon=int(meta["horizon"]),
        threshold=meta.get("threshold"),
        level=meta.get("q"),
    )
    return sample, [date.fromisoformat(s) for s in calendar] if calendar else None
