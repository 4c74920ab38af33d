"""Componentwise adaptive Metropolis sampler for the change-point model.

Each iteration makes one block update of the regime 1 weights, one of the
regime 2 weights, and one of tau. Weight proposals move along a null-space
direction of the two linear constraints, so every visited weight vector keeps
its sums exactly; nonnegativity is enforced by rejection, never by clipping.
tau proposals are truncated normal on (0, T) with the exact Hastings
correction. Step sizes adapt batchwise toward 0.44 acceptance during burn-in
with the diminishing schedule delta(n) = min(0.01, n^(-1/2)), and are frozen
afterwards.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from .angular import BernsteinWeights, bernstein_basis, uniform_weights, validate_weights
from .changepoint import ChangePointModel
from .errors import DataError
from .margins import AngularSample


@dataclass
class ChainConfig:
    iterations: int = 15000
    burn_in: int = 5000
    thin: int = 10
    batch_size: int = 50
    target_accept: float = 0.44
    seed: int = 0
    fix_tau: float | None = None

    def __post_init__(self):
        if self.burn_in < 0 or self.burn_in >= self.iterations:
            raise DataError("burn_in must be nonnegative and below iterations")
        if self.thin < 1:
            raise DataError("thin must be at least 1")
        if self.batch_size < 1:
            raise DataError("batch_size must be at least 1")
        if not 0.0 < self.target_accept < 1.0:
            raise DataError("target_accept must be in (0, 1)")

    @property
    def n_retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class AdaptiveScale:
    """Log step size plus batch bookkeeping for one proposal block."""

    log_step: float
    batch_accepts: int = 0
    batch_index: int = 0

    @property
    def step(self) -> float:
        return math.exp(self.log_step)


def adapt_scale(scale: AdaptiveScale, batch_accept_rate: float,
                batch_n: int, target: float = 0.44) -> AdaptiveScale:
    """One diminishing-adaptation update after batch batch_n (1-based).

    Rates strictly above the target raise the log step by
    min(0.01, batch_n^(-1/2)); ties and everything below lower it.
    """
    if batch_n < 1:
        raise DataError("batch_n is 1-based")
    delta = min(0.01, batch_n ** -0.5)
    sign = 1.0 if batch_accept_rate > target else -1.0
    return AdaptiveScale(scale.log_step + sign * delta, 0, batch_n)


def nullspace_direction(i: int, j: int, k: int) -> np.ndarray:
    """Unit direction (j-k, k-i, i-j)/norm for weight indices i, j, k.

    Adding any multiple of it to (theta_i, theta_j, theta_k) changes neither
    the weight sum nor the moment sum.
    """
    if len({i, j, k}) != 3:
        raise DataError("indices must be distinct")
    d = np.array([j - k, k - i, i - j], dtype=float)
    return d / np.linalg.norm(d)


def _step_theta(theta: np.ndarray, step: float, rng: np.random.Generator) -> np.ndarray:
    # One null-space move on three random components; indices are 1-based
    # weight labels, positions are their 0-based array slots.
    pos = rng.choice(len(theta), size=3, replace=False)
    i, j, k = (int(p) + 1 for p in pos)
    eps = step * rng.standard_normal()
    cand = theta.copy()
    cand[pos] += eps * nullspace_direction(i, j, k)
    return cand


def propose_weights(wts: BernsteinWeights, scale: AdaptiveScale,
                    rng: np.random.Generator) -> BernsteinWeights:
    """Symmetric constraint-preserving proposal; may go negative, in which
    case the Metropolis step rejects it."""
    return BernsteinWeights(wts.J, _step_theta(wts.theta, scale.step, rng))


def _log_trunc_mass(tau: float, s: float, horizon: float) -> float:
    z = ndtr((horizon - tau) / s) - ndtr(-tau / s)
    return math.log(max(z, 1e-300))


def propose_tau(tau: float, scale: AdaptiveScale, horizon: float,
                rng: np.random.Generator) -> tuple[float, float]:
    """Truncated-normal proposal on (0, T) centered at tau.

    Returns (tau_new, log_correction) where the correction
    log q(tau | tau_new) - log q(tau_new | tau) reduces to the log ratio of
    the two truncation masses; it penalizes moves toward the center, exactly
    cancelling the proposal's center bias.
    """
    if not 0.0 < tau < horizon:
        raise DataError("tau must lie inside (0, horizon)")
    s = scale.step
    lo = ndtr(-tau / s)
    hi = ndtr((horizon - tau) / s)
    u = rng.random()
    tau_new = tau + s * ndtri(lo + u * (hi - lo))
    # ndtri at the extreme quantiles can land on the closed boundary.
    eps = 1e-9 * horizon
    tau_new = float(min(max(tau_new, eps), horizon - eps))
    correction = _log_trunc_mass(tau, s, horizon) - _log_trunc_mass(tau_new, s, horizon)
    return tau_new, correction


@dataclass
class PosteriorDraws:
    """Retained post burn-in states in array form, one row per draw."""

    J: int
    horizon: int
    theta1: np.ndarray
    theta2: np.ndarray
    tau: np.ndarray
    accept_flags: np.ndarray
    accept_stats: dict
    diagnostics: dict
    config: ChainConfig

    def __len__(self):
        return len(self.tau)

    def model(self, k: int) -> ChangePointModel:
        return ChangePointModel(
            theta1=BernsteinWeights(self.J, self.theta1[k].copy()),
            theta2=BernsteinWeights(self.J, self.theta2[k].copy()),
            tau=float(self.tau[k]),
            horizon=self.horizon,
        )

    def models(self):
        return (self.model(k) for k in range(len(self)))

    def save_jsonl(self, path) -> Path:
        path = Path(path)
        with open(path, "w") as fh:
            for k in range(len(self)):
                fh.write(self.model(k).to_json())
                fh.write("\n")
        return path

    @classmethod
    def load_jsonl(cls, path, config: ChainConfig | None = None) -> "PosteriorDraws":
        models = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    models.append(ChangePointModel.from_dict(json.loads(line)))
        if not models:
            raise DataError(f"{path}: no draws")
        J = models[0].J
        horizon = models[0].horizon
        if any(m.J != J or m.horizon != horizon for m in models):
            raise DataError(f"{path}: draws disagree on J or T")
        return cls(
            J=J,
            horizon=horizon,
            theta1=np.stack([m.theta1.theta for m in models]),
            theta2=np.stack([m.theta2.theta for m in models]),
            tau=np.array([m.tau for m in models]),
            accept_flags=np.zeros((len(models), 3), dtype=int),
            accept_stats={},
            diagnostics={"source": str(path)},
            config=config or ChainConfig(),
        )

    def save_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w") as fh:
            fh.write("k,tau,accept_theta1,accept_theta2,accept_tau\n")
            for k in range(len(self)):
                f = self.accept_flags[k]
                fh.write(f"{k + 1},{float(self.tau[k])!r},{f[0]},{f[1]},{f[2]}\n")
        return path

    def save_diagnostics(self, path) -> Path:
        path = Path(path)
        payload = {
            "acceptance": self.accept_stats,
            "n_draws": len(self),
            "J": self.J,
            "T": self.horizon,
            **self.diagnostics,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        return path


_BLOCKS = ("theta1", "theta2", "tau")


def run_chain(data: AngularSample, J: int, cfg: ChainConfig,
              state_callback=None) -> PosteriorDraws:
    """Run one adaptive chain and return the retained draws.

    Starts from uniform weights in both regimes and tau = T/2 (or at
    cfg.fix_tau, in which case the tau block is skipped). Every thin-th
    post burn-in state is retained. The run is a pure function of
    (data, J, cfg). state_callback, when given, is called as
    callback(iteration, theta1, theta2, tau) after every iteration with
    read-only views.
    """
    if len(data) == 0:
        raise DataError("empty angular sample")
    if J < 4:
        raise DataError("order J must be at least 4")
    rng = np.random.default_rng(cfg.seed)
    times = np.asarray(data.times, dtype=float)
    horizon = float(data.horizon)
    sample_tau = cfg.fix_tau is None
    tau = horizon / 2.0 if sample_tau else float(cfg.fix_tau)
    if sample_tau and not 0.0 < tau < horizon:
        raise DataError("initial tau outside (0, T)")

    basis = bernstein_basis(J, data.angles)
    th1 = uniform_weights(J).theta
    th2 = uniform_weights(J).theta
    with np.errstate(divide="ignore"):
        logh1 = np.log(basis @ th1)
        logh2 = np.log(basis @ th2)
    mask = times <= tau
    ll = logh1[mask].sum() + logh2[~mask].sum()

    scales = {
        "theta1": AdaptiveScale(math.log(0.5 / (J - 1))),
        "theta2": AdaptiveScale(math.log(0.5 / (J - 1))),
        "tau": AdaptiveScale(math.log(horizon / 20.0)),
    }
    post_accepts = {b: 0 for b in _BLOCKS}
    batch_history: dict[str, list[float]] = {b: [] for b in _BLOCKS}
    reject_streak = {b: 0 for b in _BLOCKS}
    warned = {b: False for b in _BLOCKS}
    warnings: list[str] = []

    K = cfg.n_retained
    out_th1 = np.empty((K, J - 1))
    out_th2 = np.empty((K, J - 1))
    out_tau = np.empty(K)
    out_flags = np.zeros((K, 3), dtype=int)

    def tally(block, accepted, it):
        nonlocal warnings
        if it <= cfg.burn_in:
            scales[block].batch_accepts += int(accepted)
        else:
            post_accepts[block] += int(accepted)
        if accepted:
            reject_streak[block] = 0
        else:
            reject_streak[block] += 1
            if reject_streak[block] >= 1000 and not warned[block]:
                warned[block] = True
                warnings.append(
                    f"{block}: 1000 consecutive rejections by iteration {it}"
                )

    for it in range(1, cfg.iterations + 1):
        flags = [0, 0, 0]

        # Weight blocks share one code path; tuples keep rng order fixed.
        for bi, block in enumerate(("theta1", "theta2")):
            cur = th1 if block == "theta1" else th2
            cand = _step_theta(cur, scales[block].step, rng)
            accepted = False
            if cand.min() >= 0.0:
                with np.errstate(divide="ignore"):
                    logh_c = np.log(basis @ cand)
                if block == "theta1":
                    ll_c = logh_c[mask].sum() + logh2[~mask].sum()
                else:
                    ll_c = logh1[mask].sum() + logh_c[~mask].sum()
                if math.log(rng.random() or 5e-324) < ll_c - ll:
                    accepted = True
                    ll = ll_c
                    if block == "theta1":
                        th1, logh1 = cand, logh_c
                    else:
                        th2, logh2 = cand, logh_c
            flags[bi] = int(accepted)
            tally(block, accepted, it)

        if sample_tau:
            tau_c, corr = propose_tau(tau, scales["tau"], horizon, rng)
            mask_c = times <= tau_c
            ll_c = logh1[mask_c].sum() + logh2[~mask_c].sum()
            accepted = math.log(rng.random() or 5e-324) < ll_c - ll + corr
            if accepted:
                tau, mask, ll = tau_c, mask_c, ll_c
            flags[2] = int(accepted)
            tally("tau", accepted, it)

        if it <= cfg.burn_in and it % cfg.batch_size == 0:
            batch_n = it // cfg.batch_size
            for block in _BLOCKS:
                if block == "tau" and not sample_tau:
                    continue
                rate = scales[block].batch_accepts / cfg.batch_size
                batch_history[block].append(rate)
                scales[block] = adapt_scale(
                    scales[block], rate, batch_n, cfg.target_accept
                )

        if it > cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            k = (it - cfg.burn_in) // cfg.thin - 1
            if k < K:
                out_th1[k] = th1
                out_th2[k] = th2
                out_tau[k] = tau
                out_flags[k] = flags

        if state_callback is not None:
            state_callback(it, th1, th2, tau)

    denom = cfg.iterations - cfg.burn_in
    accept_stats = {
        "theta1": post_accepts["theta1"] / denom,
        "theta2": post_accepts["theta2"] / denom,
        "tau": post_accepts["tau"] / denom if sample_tau else None,
    }
    diagnostics = {
        "step_sizes": {b: scales[b].step for b in _BLOCKS},
        "batch_history": batch_history,
        "warnings": warnings,
        "seed": cfg.seed,
        "fixed_tau": cfg.fix_tau,
    }
    return PosteriorDraws(
        J=J,
        horizon=int(horizon),
        theta1=out_th1,
        theta2=out_th2,
        tau=out_tau,
        accept_flags=out_flags,
        accept_stats=accept_stats,
        diagnostics=diagnostics,
        config=cfg,
    )


def _chain_worker(args):
    data, J, cfg = args
    return run_chain(data, J, cfg)


def merge_draws(parts: list[PosteriorDraws]) -> PosteriorDraws:
    """Concatenate chains in the given order into one draw set."""
    if not parts:
        raise DataError("nothing to merge")
    first = parts[0]
    if any(p.J != first.J or p.horizon != first.horizon for p in parts):
        raise DataError("chains disagree on J or T")
    if len(parts) == 1:
        return first
    return PosteriorDraws(
        J=first.J,
        horizon=first.horizon,
        theta1=np.concatenate([p.theta1 for p in parts]),
        theta2=np.concatenate([p.theta2 for p in parts]),
        tau=np.concatenate([p.tau for p in parts]),
        accept_flags=np.concatenate([p.accept_flags for p in parts]),
        accept_stats={
            b: (None if first.accept_stats[b] is None
                else float(np.mean([p.accept_stats[b] for p in parts])))
            for b in _BLOCKS
        },
        diagnostics={
            "chains": [
                {"acceptance": p.accept_stats, **p.diagnostics} for p in parts
            ],
        },
        config=first.config,
    )


def run_chains(data: AngularSample, J: int, cfg: ChainConfig,
               chains: int = 1) -> PosteriorDraws:
    """Run `chains` independent chains (seeds seed+0..seed+chains-1) and
    concatenate their draws in chain order; parallel when chains > 1."""
    if chains < 1:
        raise DataError("chains must be at least 1")
    if chains == 1:
        return run_chain(data, J, cfg)
    configs = [replace(cfg, seed=cfg.seed + i) for i in range(chains)]
    jobs = [(data, J, c) for c in configs]
    with ProcessPoolExecutor(max_workers=min(chains, 8)) as pool:
        parts = list(pool.map(_chain_worker, jobs))
    return merge_draws(parts)
