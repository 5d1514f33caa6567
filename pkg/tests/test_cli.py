"""Tests for the end-to-end runs and the command-line interface."""
import io
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from typer.testing import CliRunner

import pyqubofolio as qf
from pyqubofolio.cli import app
from pyqubofolio.pipeline import frontier_percentiles, prepare_universe

runner = CliRunner()

CONFIG = """
input = "{input}"
output = "{output}"
seed = 11
n_jobs = {n_jobs}
window = 20

[reduction]
max_clusters = 5

[encoding]
total_bundles = 5
bit_depth = 2

[holding]
min_hold_days = {hold}

[sampler]
n_reads = 8
sweeps = 20

[baseline]
count = 5

[[packages]]
label = "Minimum risk"
gamma = 50.0

[[packages]]
label = "Balanced"
gamma = 1.0
risk_cap = {cap}
"""


@pytest.fixture()
def prices(tmp_path):
    path = tmp_path / "prices.csv"
    market = qf.synthetic_prices(7, n_assets=5, n_days=100, n_groups=5)
    qf.write_prices(market.prices, path)
    return path


def write_config(folder: Path, prices: Path, n_jobs=1, hold=7, cap=1.0) -> Path:
    folder.mkdir(parents=True, exist_ok=True)
    path = folder / "run.toml"
    text = CONFIG.format(input=prices.as_posix(), output="out", n_jobs=n_jobs, hold=hold, cap=cap)
    path.write_text(text)
    return path


def optimize(config: Path):
    return runner.invoke(app, ["optimize", "--config", str(config)])


def frontier_file(path: Path, sharpes: dict) -> Path:
    rows = [(label, 0.1, 0.05, s) for label, values in sharpes.items() for s in values]
    pd.DataFrame(rows, columns=["label", "annualized_volatility", "annualized_return", "sharpe"]).to_csv(
        path, index=False
    )
    return path


class TestOptimize:
    def test_artifacts(self, tmp_path, prices):
        config = write_config(tmp_path / "a", prices)
        result = optimize(config)
        assert result.exit_code == 0, result.output
        out = config.parent / "out"
        for name in ("trajectory_minimum_risk.csv", "trajectory_balanced.csv", "clusters.csv", "variance_curve.csv"):
            assert (out / name).exists()
        frontier = pd.read_csv(out / "frontier.csv")
        assert list(frontier.columns) == ["label", "annualized_volatility", "annualized_return", "sharpe"]
        assert frontier["label"].tolist()[:2] == ["Minimum risk", "Balanced"]
        assert (frontier["label"] == "baseline").sum() == 5

        verified = runner.invoke(
            app, ["verify", "--trajectory", str(out / "trajectory_balanced.csv"), "--hold", "7"]
        )
        assert verified.exit_code == 0
        assert "feasible" in verified.output

    def test_deterministic(self, tmp_path, prices):
        runs = [
            write_config(tmp_path / "first", prices),
            write_config(tmp_path / "second", prices),
            write_config(tmp_path / "parallel", prices, n_jobs=2),
        ]
        for config in runs:
            assert optimize(config).exit_code == 0
        outputs = [sorted((c.parent / "out").iterdir()) for c in runs]
        names = [p.name for p in outputs[0]]
        assert all([p.name for p in out] == names for out in outputs)
        for files in zip(*outputs):
            assert files[0].read_bytes() == files[1].read_bytes() == files[2].read_bytes()

    def test_invalid_hold(self, tmp_path, prices):
        result = optimize(write_config(tmp_path, prices, hold=0))
        assert result.exit_code == 2
        assert "holding.min_hold_days" in result.output

    def test_empty_universe(self, tmp_path, prices):
        result = optimize(write_config(tmp_path, prices, cap=1e-6))
        assert result.exit_code == 3
        assert "Balanced" in result.output

    def test_missing_prices(self, tmp_path):
        result = optimize(write_config(tmp_path, tmp_path / "nowhere.csv"))
        assert result.exit_code == 2

    def test_sweep(self, tmp_path, prices):
        config = qf.RunConfig.from_toml(write_config(tmp_path, prices))
        universe = prepare_universe(config)
        balanced = config.packages[1]
        sweep = qf.sweep_gamma(universe, config, balanced, [50.0, 0.5, 5.0])
        assert sweep.table["gamma"].tolist() == [0.5, 5.0, 50.0]
        vol = sweep.table["annualized_volatility"].to_numpy()
        assert sweep.best_gamma == sweep.table["gamma"].iloc[int(np.argmax(vol))]
        unchanged = qf.sweep_gamma(universe, config, config.packages[0], [0.5, 5.0])
        assert unchanged.best_gamma == config.packages[0].gamma

        result = runner.invoke(app, ["optimize", "--config", str(tmp_path / "run.toml"), "--sweep-gamma", "0.5,5"])
        assert result.exit_code == 0
        assert (tmp_path / "out" / "gamma_sweep_balanced.csv").exists()

    @pytest.mark.slow()
    def test_beats_random(self, tmp_path):
        path = tmp_path / "prices.csv"
        qf.write_prices(qf.synthetic_prices(0, n_assets=20, n_days=311).prices, path)
        config = qf.RunConfig.from_dict(
            {
                "input": path.as_posix(),
                "output": (tmp_path / "out").as_posix(),
                "n_jobs": -1,
                "sampler": {"n_reads": 128, "sweeps": 300},
                "packages": [
                    {"label": "Minimum risk", "gamma": 50.0},
                    {"label": "Balanced", "gamma": 5.0, "risk_cap": 0.3},
                ],
            }
        )
        qf.run_optimize(config)
        table = frontier_percentiles(pd.read_csv(tmp_path / "out" / "frontier.csv"))
        assert (table["percentile"] > 90).all()


class TestConfig:
    base = {"input": "p.csv", "output": "out", "packages": [{"label": "A", "gamma": 1.0}]}

    def test_full_investment(self):
        assert qf.RunConfig.from_dict(self.base).full_investment
        config = qf.RunConfig.from_dict({**self.base, "selection": {"full_investment": False}})
        assert not config.full_investment
        with pytest.raises(qf.ConfigError) as ex:
            qf.RunConfig.from_dict({**self.base, "selection": {"full_investment": 1}})
        assert "selection.full_investment" in str(ex.value)


class TestVerify:
    def test_early_sale(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text(
            "date,asset_id,weight\n"
            "2020-01-01,X,0.2\n2020-01-01,Y,0.0\n"
            "2020-01-02,X,0.2\n2020-01-02,Y,0.0\n"
            "2020-01-03,X,0.0\n2020-01-03,Y,0.2\n"
        )
        result = runner.invoke(app, ["verify", "--trajectory", str(path), "--hold", "7"])
        assert result.exit_code == 1
        assert "2020-01-03" in result.output
        assert "X" in result.output
        assert runner.invoke(app, ["verify", "--trajectory", str(path), "--hold", "2"]).exit_code == 0

    @pytest.mark.parametrize(
        "body",
        [
            "2020-01-01,X,0.2\n2020-01-01,Y,0.0\n2020-01-02,X,\n2020-01-02,Y,0.2\n",
            "2020-01-01,X,0.2\n2020-01-01,Y,0.0\n2020-01-02,Y,0.2\n",
        ],
        ids=["blank_weight", "missing_row"],
    )
    def test_malformed(self, tmp_path, body):
        path = tmp_path / "traj.csv"
        path.write_text("date,asset_id,weight\n" + body)
        result = runner.invoke(app, ["verify", "--trajectory", str(path), "--hold", "7"])
        assert result.exit_code == 2
        assert "could not be parsed" in result.output

    def test_empty_file(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("")
        assert runner.invoke(app, ["verify", "--trajectory", str(path), "--hold", "7"]).exit_code == 2

    def test_bad_hold(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("date,asset_id,weight\n2020-01-01,X,1.0\n")
        assert runner.invoke(app, ["verify", "--trajectory", str(path), "--hold", "0"]).exit_code == 2


class TestReport:
    def test_above_all(self, tmp_path):
        path = frontier_file(tmp_path / "f.csv", {"Balanced": [2.0], "baseline": [0.1, 0.5, 0.9]})
        result = runner.invoke(app, ["report", "--frontier", str(path)])
        assert result.exit_code == 0
        assert "3 baseline trajectories" in result.output
        assert "percentile 100.0" in result.output

    def test_median(self, tmp_path):
        path = frontier_file(tmp_path / "f.csv", {"Balanced": [0.5], "baseline": [0.1, 0.5, 0.9]})
        assert "percentile 50.0" in qf.run_report(path)

    def test_no_baseline(self, tmp_path):
        path = frontier_file(tmp_path / "f.csv", {"Balanced": [0.5]})
        assert "percentile undefined" in qf.run_report(path)

    def test_missing(self, tmp_path):
        result = runner.invoke(app, ["report", "--frontier", str(tmp_path / "none.csv")])
        assert result.exit_code == 2


class TestGenData:
    def test_write(self, tmp_path):
        out = tmp_path / "prices.csv"
        result = runner.invoke(app, ["gen-data", "--seed", "3", "--out", str(out)])
        assert result.exit_code == 0
        series = qf.load_prices(out)
        assert len(series) == 20
        assert all(len(s.prices) == 311 for s in series)


class TestVersions:
    def test_show_versions(self):
        buffer = io.StringIO()
        qf.show_versions(file=buffer)
        text = buffer.getvalue()
        assert "SYS INFO" in text
        assert "pyqubofolio" in text
        assert "blas" in text
        assert "workers" in text
