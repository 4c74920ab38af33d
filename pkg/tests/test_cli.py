import json
from datetime import date, timedelta

import numpy as np
import pytest

from tailshift import cli, margins
from tailshift.errors import NumericalError
from tailshift.ingest import GarchParams
from tailshift.simulate import simulate_garch11

from conftest import THETA_EDGES, THETA_MIDDLE


def write_prices(path, returns_seed, n_prices, start=date(2021, 1, 4),
                 start_price=100.0):
    """Price CSV whose negative log returns follow a GARCH path."""
    params = GarchParams(mu=0.0, omega=0.02, alpha=0.1, beta=0.8)
    r = simulate_garch11(params, n_prices - 1,
                         np.random.default_rng(returns_seed)).values
    prices = start_price * np.exp(np.concatenate([[0.0], np.cumsum(-r)]))
    with open(path, "w") as fh:
        fh.write("date,close\n")
        for t, p in enumerate(prices):
            fh.write(f"{(start + timedelta(days=t)).isoformat()},{float(p)!r}\n")
    return path


def write_spec(path, horizon=400, n_exceed=80, tau_true=150.0, seed=9):
    spec = {
        "T": horizon, "n_exceed": n_exceed, "tau_true": tau_true,
        "J": 4, "theta1": list(THETA_EDGES), "theta2": list(THETA_MIDDLE),
        "seed": seed,
    }
    path.write_text(json.dumps(spec))
    return path


class TestPipeline:
    def test_counts_and_outputs(self, tmp_path, capsys):
        a = write_prices(tmp_path / "a.csv", 90, 121)
        b = write_prices(tmp_path / "b.csv", 91, 121)
        out = tmp_path / "out"
        rc = cli.main(["pipeline", "--prices-a", str(a), "--prices-b", str(b),
                       "--out", str(out)])
        assert rc == 0
        stdout = capsys.readouterr().out
        # 120 shared return days keep the top 10%: 12 exceedances
        assert "exceedances: 12" in stdout
        assert "horizon: 120" in stdout
        sample, calendar = margins.load_angular_sample(out / "angles.csv")
        assert len(sample) == 12
        assert sample.horizon == 120
        assert len(calendar) == 120
        assert np.all((sample.times >= 1) & (sample.times <= 120))
        for tag in ("a", "b"):
            fit = json.loads((out / f"garch_{tag}.json").read_text())
            assert set(fit["params"]) == {"mu", "omega", "alpha", "beta"}

    def test_quantile_flag(self, tmp_path, capsys):
        a = write_prices(tmp_path / "a.csv", 92, 121)
        b = write_prices(tmp_path / "b.csv", 93, 121)
        rc = cli.main(["pipeline", "--prices-a", str(a), "--prices-b", str(b),
                       "--q", "0.95", "--out", str(tmp_path / "out")])
        assert rc == 0
        assert "exceedances: 6" in capsys.readouterr().out

    def test_missing_file_exits_2(self, tmp_path, capsys):
        b = write_prices(tmp_path / "b.csv", 94, 60)
        rc = cli.main(["pipeline", "--prices-a", str(tmp_path / "nope.csv"),
                       "--prices-b", str(b), "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_file_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("date,close\n2021-01-04,100\n2021-01-05,zero\n")
        b = write_prices(tmp_path / "b.csv", 95, 60)
        rc = cli.main(["pipeline", "--prices-a", str(bad), "--prices-b", str(b),
                       "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "line 3" in capsys.readouterr().err

    def test_disjoint_dates_exit_2(self, tmp_path, capsys):
        a = write_prices(tmp_path / "a.csv", 96, 60, start=date(2019, 1, 1))
        b = write_prices(tmp_path / "b.csv", 97, 60, start=date(2023, 1, 1))
        rc = cli.main(["pipeline", "--prices-a", str(a), "--prices-b", str(b),
                       "--out", str(tmp_path / "out")])
        assert rc == 2

    def test_missing_required_flag_exits_2(self, tmp_path, capsys):
        rc = cli.main(["pipeline", "--out", str(tmp_path / "out")])
        assert rc == 2


class TestSimulate:
    def test_outputs_and_determinism(self, tmp_path, capsys):
        spec = write_spec(tmp_path / "spec.json")
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert cli.main(["simulate", "--spec", str(spec), "--out", str(out1)]) == 0
        assert "angles: 80" in capsys.readouterr().out
        assert cli.main(["simulate", "--spec", str(spec), "--out", str(out2)]) == 0
        assert (out1 / "angles.csv").read_bytes() == (out2 / "angles.csv").read_bytes()
        truth = json.loads((out1 / "truth.json").read_text())
        assert truth["tau_true"] == 150.0
        assert truth["seed"] == 9

    def test_seed_flag_overrides_spec(self, tmp_path):
        spec = write_spec(tmp_path / "spec.json")
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert cli.main(["simulate", "--spec", str(spec), "--out", str(out1)]) == 0
        assert cli.main(["simulate", "--spec", str(spec), "--seed", "11",
                         "--out", str(out2)]) == 0
        assert json.loads((out2 / "truth.json").read_text())["seed"] == 11
        assert (out1 / "angles.csv").read_bytes() != (out2 / "angles.csv").read_bytes()

    def test_missing_spec_exits_2(self, tmp_path, capsys):
        rc = cli.main(["simulate", "--spec", str(tmp_path / "none.json"),
                       "--out", str(tmp_path / "out")])
        assert rc == 2


@pytest.fixture(scope="module")
def sim_angles(tmp_path_factory):
    base = tmp_path_factory.mktemp("sim")
    spec = write_spec(base / "spec.json")
    assert cli.main(["simulate", "--spec", str(spec), "--out", str(base)]) == 0
    return base / "angles.csv"


FAST_FIT = ["--iters", "400", "--burnin", "200", "--thin", "4"]


class TestFit:
    def test_outputs(self, tmp_path, capsys, sim_angles):
        out = tmp_path / "fit"
        rc = cli.main(["fit", "--angles", str(sim_angles), "--order", "4",
                       "--seed", "5", "--out", str(out)] + FAST_FIT)
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "order J: 4" in stdout
        assert "seed: 5" in stdout
        for name in ("draws.jsonl", "draws.csv", "diagnostics.json",
                     "draws_pooled.jsonl", "summary.json", "pooled_refit.json",
                     "fig_regimes.png", "fig_tau_posterior.png"):
            assert (out / name).exists(), name
        assert (out / "fig_regimes.png").read_bytes()[:8] == \
            b"\x89PNG\r\n\x1a\n"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["K"] == 50
        assert summary["seed"] == 5
        assert summary["chains"] == 1
        marker = json.loads((out / "pooled_refit.json").read_text())
        assert marker["pooled_refit"] is True
        assert marker["fixed_tau"] == 400.0

    def test_same_seed_same_bytes(self, tmp_path, sim_angles):
        outs = []
        for name in ("f1", "f2"):
            out = tmp_path / name
            rc = cli.main(["fit", "--angles", str(sim_angles), "--order", "4",
                           "--seed", "5", "--out", str(out)] + FAST_FIT)
            assert rc == 0
            outs.append(out)
        for fname in ("draws.jsonl", "draws.csv", "draws_pooled.jsonl"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()

    def test_auto_order(self, tmp_path, capsys, sim_angles):
        rc = cli.main(["fit", "--angles", str(sim_angles), "--seed", "1",
                       "--no-pooled", "--out", str(tmp_path / "fit")] + FAST_FIT)
        assert rc == 0
        # 80 angles: auto order is max(4, 80 // 2)
        assert "order J: 40" in capsys.readouterr().out

    def test_entropy_seed_recorded(self, tmp_path, capsys, sim_angles):
        out = tmp_path / "fit"
        rc = cli.main(["fit", "--angles", str(sim_angles), "--order", "4",
                       "--no-pooled", "--out", str(out)] + FAST_FIT)
        assert rc == 0
        stdout = capsys.readouterr().out
        seed = int(stdout.split("seed: ")[1].split("\n")[0])
        assert json.loads((out / "summary.json").read_text())["seed"] == seed

    def test_no_pooled(self, tmp_path, sim_angles):
        out = tmp_path / "fit"
        rc = cli.main(["fit", "--angles", str(sim_angles), "--order", "4",
                       "--seed", "2", "--no-pooled", "--out", str(out)] + FAST_FIT)
        assert rc == 0
        assert not (out / "draws_pooled.jsonl").exists()
        assert not (out / "density_regimepooled.csv").exists()
        marker = json.loads((out / "pooled_refit.json").read_text())
        assert marker == {"pooled_refit": False, "fixed_tau": None,
                          "n_draws": None}

    def test_config_file_with_flag_override(self, tmp_path, sim_angles):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "angles": str(sim_angles), "order": 4, "seed": 3,
            "iters": 400, "burnin": 100, "thin": 4, "no_pooled": True,
        }))
        out = tmp_path / "fit"
        rc = cli.main(["fit", "--config", str(cfg), "--iters", "260",
                       "--no-pooled", "--out", str(out)])
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        # flag iters=260 beats config 400; burnin/thin come from the config
        assert summary["K"] == (260 - 100) // 4
        assert summary["seed"] == 3

    def test_bad_order_exits_2(self, tmp_path, capsys, sim_angles):
        rc = cli.main(["fit", "--angles", str(sim_angles), "--order", "3",
                       "--seed", "1", "--out", str(tmp_path / "fit")] + FAST_FIT)
        assert rc == 2
        assert "order" in capsys.readouterr().err

    def test_numerical_failure_exits_3(self, tmp_path, capsys, sim_angles,
                                       monkeypatch):
        def boom(*a, **kw):
            raise NumericalError("log-density underflow")

        monkeypatch.setattr(cli, "run_chains", boom)
        rc = cli.main(["fit", "--angles", str(sim_angles), "--order", "4",
                       "--seed", "1", "--out", str(tmp_path / "fit")] + FAST_FIT)
        assert rc == 3
        assert "numerical failure" in capsys.readouterr().err


@pytest.fixture(scope="module")
def fit_dir(tmp_path_factory, sim_angles):
    out = tmp_path_factory.mktemp("fit")
    rc = cli.main(["fit", "--angles", str(sim_angles), "--order", "4",
                   "--seed", "5", "--out", str(out)] + FAST_FIT)
    assert rc == 0
    return out


class TestSummarize:
    def test_reproduces_summary(self, tmp_path, sim_angles, fit_dir):
        out = tmp_path / "sum"
        rc = cli.main(["summarize", "--angles", str(sim_angles),
                       "--draws", str(fit_dir / "draws.jsonl"),
                       "--pooled-draws", str(fit_dir / "draws_pooled.jsonl"),
                       "--out", str(out)])
        assert rc == 0
        fresh = json.loads((out / "summary.json").read_text())
        fitted = json.loads((fit_dir / "summary.json").read_text())
        assert fresh["tau_day"] == fitted["tau_day"]
        assert fresh["tau_interval"] == fitted["tau_interval"]
        # reloaded draws: provenance fields are unknown, draws not re-saved
        assert fresh["seed"] is None
        assert "chains" not in fresh
        assert not (out / "draws.jsonl").exists()
        marker = json.loads((out / "pooled_refit.json").read_text())
        assert marker["pooled_refit"] is True
        assert marker["fixed_tau"] == 400.0
        assert (out / "fig_regimes.png").exists()

    def test_without_pooled(self, tmp_path, sim_angles, fit_dir):
        out = tmp_path / "sum"
        rc = cli.main(["summarize", "--angles", str(sim_angles),
                       "--draws", str(fit_dir / "draws.jsonl"),
                       "--out", str(out)])
        assert rc == 0
        marker = json.loads((out / "pooled_refit.json").read_text())
        assert marker["pooled_refit"] is False

    def test_missing_draws_exits_2(self, tmp_path, sim_angles):
        rc = cli.main(["summarize", "--angles", str(sim_angles),
                       "--draws", str(tmp_path / "none.jsonl"),
                       "--out", str(tmp_path / "sum")])
        assert rc == 2
