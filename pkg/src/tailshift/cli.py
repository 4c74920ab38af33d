"""Command line entry points.

One binary, four subcommands:

  pipeline    prices -> returns -> GARCH residuals -> angles -> exceedances
  simulate    planted change-point angular sample from a spec file
  fit         adaptive MCMC on an angle file, summaries, report files
  summarize   re-derive summaries and figures from saved draws

Every subcommand accepts --config pointing at a JSON file of flag defaults;
explicit flags win. Exit codes: 0 success, 2 bad input or validation,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .errors import DataError, NumericalError
from . import ingest, margins
from .figures import render_report
from .mcmc import ChainConfig, PosteriorDraws, run_chain, run_chains
from .simulate import SyntheticSpec, simulate_changepoint_angles, synthetic_calendar
from .summary import export_plot_data, tau_estimate, tau_interval


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"config {path}: {e}") from None
    if not isinstance(cfg, dict):
        raise DataError(f"config {path}: expected a JSON object")
    return cfg


def _pick(args, config: dict, key: str, default):
    # Flag beats config file beats built-in default.
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _resolve_order(order, n: int) -> int:
    if order in (None, "auto"):
        return max(4, n // 2)
    try:
        J = int(order)
    except (TypeError, ValueError):
        raise DataError(f"bad order {order!r}: expected an integer or 'auto'") from None
    if J < 4:
        raise DataError("order must be at least 4")
    return J


def cmd_pipeline(args) -> int:
    config = _load_config(args.config)
    prices_a = _pick(args, config, "prices_a", None)
    prices_b = _pick(args, config, "prices_b", None)
    q = float(_pick(args, config, "q", 0.90))
    out = _pick(args, config, "out", None)
    if not prices_a or not prices_b or not out:
        raise DataError("pipeline needs --prices-a, --prices-b and --out")
    from pathlib import Path

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    fits = []
    for path, tag in ((prices_a, "a"), (prices_b, "b")):
        series = ingest.load_price_csv(path)
        returns = ingest.negative_log_returns(series)
        fit = ingest.fit_garch11(returns)
        fit.save(out / f"garch_{tag}.json")
        fits.append(fit)
    paired = ingest.align_pairs(fits[0], fits[1])
    sample = margins.make_angular_sample(margins.pareto_pairs(paired))
    exceed = margins.threshold_exceedances(sample, q)
    margins.write_angular_sample(exceed, out / "angles.csv", calendar=paired.dates)
    print(f"exceedances: {len(exceed)}")
    print(f"horizon: {exceed.horizon}")
    print(f"threshold: {exceed.threshold}")
    return 0


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    spec_path = _pick(args, config, "spec", None)
    out = _pick(args, config, "out", None)
    if not spec_path or not out:
        raise DataError("simulate needs --spec and --out")
    from pathlib import Path

    spec = SyntheticSpec.load(spec_path)
    seed = _pick(args, config, "seed", None)
    if seed is not None:
        spec = replace(spec, seed=int(seed))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    sample = simulate_changepoint_angles(spec)
    margins.write_angular_sample(sample, out / "angles.csv",
                                 calendar=synthetic_calendar(spec.horizon))
    with open(out / "truth.json", "w") as fh:
        json.dump(spec.to_dict(), fh, indent=2)
        fh.write("\n")
    print(f"angles: {len(sample)}")
    print(f"horizon: {sample.horizon}")
    return 0


def _write_summary_outputs(sample, draws, pooled, calendar, out, extra):
    export_plot_data(sample, draws, out, pooled=pooled, calendar=calendar,
                     extra=extra)
    render_report(sample, draws, out, pooled=pooled, calendar=calendar)
    day, when = tau_estimate(draws, calendar)
    lo, hi = tau_interval(draws)
    print(f"tau day: {day}" + (f" ({when.isoformat()})" if when else ""))
    print(f"tau 95% interval: [{lo:.2f}, {hi:.2f}]")
    print(f"draws: {len(draws)}")
    print(f"out: {out}")


def cmd_fit(args) -> int:
    config = _load_config(args.config)
    angles_path = _pick(args, config, "angles", None)
    out = _pick(args, config, "out", None)
    if not angles_path or not out:
        raise DataError("fit needs --angles and --out")
    from pathlib import Path

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    sample, calendar = margins.load_angular_sample(angles_path)
    J = _resolve_order(_pick(args, config, "order", "auto"), len(sample))
    seed = _pick(args, config, "seed", None)
    if seed is None:
        # No seed given: draw one from OS entropy and record it.
        seed = int(np.random.SeedSequence().entropy % (2 ** 32))
    chains = int(_pick(args, config, "chains", 1))
    cfg = ChainConfig(
        iterations=int(_pick(args, config, "iters", 15000)),
        burn_in=int(_pick(args, config, "burnin", 5000)),
        thin=int(_pick(args, config, "thin", 10)),
        seed=int(seed),
    )
    draws = run_chains(sample, J, cfg, chains=chains)
    pooled = None
    if not args.no_pooled:
        # Single-regime refit for the whole-period curve: tau pinned at T.
        pooled_cfg = replace(cfg, fix_tau=float(sample.horizon))
        pooled = run_chain(sample, J, pooled_cfg)
    print(f"order J: {J}")
    print(f"seed: {cfg.seed}")
    draws.save_jsonl(out / "draws.jsonl")
    draws.save_csv(out / "draws.csv")
    draws.save_diagnostics(out / "diagnostics.json")
    if pooled is not None:
        pooled.save_jsonl(out / "draws_pooled.jsonl")
    _write_summary_outputs(sample, draws, pooled, calendar, out,
                           extra={"chains": chains})
    return 0


def cmd_summarize(args) -> int:
    config = _load_config(args.config)
    angles_path = _pick(args, config, "angles", None)
    draws_path = _pick(args, config, "draws", None)
    out = _pick(args, config, "out", None)
    if not angles_path or not draws_path or not out:
        raise DataError("summarize needs --angles, --draws and --out")
    from pathlib import Path

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    sample, calendar = margins.load_angular_sample(angles_path)
    draws = PosteriorDraws.load_jsonl(draws_path)
    pooled_path = _pick(args, config, "pooled_draws", None)
    pooled = PosteriorDraws.load_jsonl(pooled_path) if pooled_path else None
    _write_summary_outputs(sample, draws, pooled, calendar, out, extra=None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailshift",
        description="Change-point estimation for the angular density of "
                    "bivariate extremes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="prices to thresholded pseudo-angles")
    p.add_argument("--prices-a", dest="prices_a", help="first asset price CSV")
    p.add_argument("--prices-b", dest="prices_b", help="second asset price CSV")
    p.add_argument("--q", type=float, help="radial quantile level (default 0.90)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON config file; flags win")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("simulate", help="planted change-point angle sample")
    p.add_argument("--spec", help="synthetic spec JSON")
    p.add_argument("--seed", type=int,
                   help="override the seed stored in the --spec file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON config file; flags win")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run the sampler and write reports")
    p.add_argument("--angles", help="angles CSV from pipeline or simulate")
    p.add_argument("--order", help="Bernstein order J or 'auto' (max(4, N/2))")
    p.add_argument("--iters", type=int, help="iterations (default 15000)")
    p.add_argument("--burnin", type=int, help="burn-in iterations (default 5000)")
    p.add_argument("--thin", type=int, help="thinning stride (default 10)")
    p.add_argument("--seed", type=int, help="RNG seed; drawn and recorded if omitted")
    p.add_argument("--chains", type=int, help="independent chains (default 1)")
    p.add_argument("--no-pooled", action="store_true",
                   help="skip the pooled single-regime refit")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON config file; flags win")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("summarize", help="summaries and figures from saved draws")
    p.add_argument("--angles", help="angles CSV the draws were fitted on")
    p.add_argument("--draws", help="draws JSON-lines file")
    p.add_argument("--pooled-draws", dest="pooled_draws",
                   help="pooled refit draws JSON-lines file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="JSON config file; flags win")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
