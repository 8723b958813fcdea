"""
tests/test_cli.py
"""

import json

import pandas as pd
import pytest
from click.testing import CliRunner

from poisoncert.__version__ import __version__
from poisoncert.cli.commands.common import EXIT_DOMINANCE, EXIT_USAGE
from poisoncert.cli.main import cli

QUICK = ["--T", "200", "--burn-in", "50", "--seeds", "2"]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def invoke(runner, tmp_path):
    config = str(tmp_path / "missing.yaml")

    def run(*args):
        return runner.invoke(cli, ["--config", config, *args])

    return run


def report_of(run_dir):
    return json.loads((run_dir / "report.json").read_text())


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_config_save(runner, tmp_path):
    path = tmp_path / "config.yaml"
    result = runner.invoke(cli, ["--config", str(path), "config", "--save"])
    assert result.exit_code == 0
    assert path.exists()


def test_broken_config_is_a_usage_error(runner, tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("plotting: {}\n")
    result = runner.invoke(cli, ["--config", str(path), "config"])
    assert result.exit_code == EXIT_USAGE


class TestCertifyMean:

    def test_writes_run_directory(self, invoke, tmp_path):
        out = tmp_path / "run"
        result = invoke("certify", "mean", "--d", "1", *QUICK, "--out", str(out))
        assert result.exit_code in (0, EXIT_DOMINANCE), result.output
        assert {"report.json", "table.csv", "config.txt", "schema.json"} <= {p.name for p in out.iterdir()}
        record = report_of(out)["records"][0]
        assert record["certificate_verified"] >= 0.0
        assert {a["policy"] for a in record["attack_results"]} == {"greedy", "fgsm"}

    def test_hash_ignores_out_and_threads(self, invoke, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        invoke("simulate", "mean", "--d", "1", *QUICK, "--out", str(first))
        invoke("simulate", "mean", "--d", "1", *QUICK, "--out", str(second), "--threads", "2")
        assert report_of(first)["config_hash"] == report_of(second)["config_hash"]

    def test_hash_tracks_parameters(self, invoke, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        invoke("simulate", "mean", "--d", "1", *QUICK, "--out", str(first))
        invoke("simulate", "mean", "--d", "1", "--eta", "0.2", *QUICK, "--out", str(second))
        assert report_of(first)["config_hash"] != report_of(second)["config_hash"]

    def test_eta_out_of_range(self, invoke, tmp_path):
        result = invoke("certify", "mean", "--eta", "1.5", "--out", str(tmp_path / "run"))
        assert result.exit_code == EXIT_USAGE


class TestSimulate:

    def test_mean(self, invoke, tmp_path):
        out = tmp_path / "run"
        result = invoke("simulate", "mean", "--d", "2", "--attacks", "none,greedy", *QUICK, "--out", str(out))
        assert result.exit_code == 0, result.output
        table = pd.read_csv(out / "table.csv")
        assert table["policy"].tolist() == ["none", "greedy"]
        assert table["certificate"].isna().all()

    def test_unknown_attack(self, invoke, tmp_path):
        result = invoke("simulate", "mean", "--attacks", "bogus", *QUICK, "--out", str(tmp_path / "run"))
        assert result.exit_code == EXIT_USAGE

    def test_class_on_blobs(self, invoke, tmp_path):
        out = tmp_path / "run"
        result = invoke("simulate", "class", "--n-points", "20", "--eta", "0.05", "--sigma", "0.5",
                        "--attacks", "none,label_flip", *QUICK, "--out", str(out))
        assert result.exit_code == 0, result.output
        assert report_of(out)["records"][0]["kind"] == "class"

    def test_class_with_missing_file(self, invoke, tmp_path):
        result = invoke("simulate", "class", "--data", str(tmp_path / "absent.csv"), *QUICK,
                        "--out", str(tmp_path / "run"))
        assert result.exit_code == EXIT_USAGE


class TestReport:

    def test_merge(self, invoke, tmp_path):
        runs = [tmp_path / "a", tmp_path / "b"]
        for run_dir in runs:
            invoke("simulate", "mean", "--d", "1", "--attacks", "none", *QUICK, "--out", str(run_dir))
        merged = tmp_path / "merged.csv"
        result = invoke("report", *map(str, runs), "--out", str(merged))
        assert result.exit_code == 0, result.output
        assert pd.read_csv(merged)["run"].tolist() == ["a", "b"]

    def test_shared_options(self, invoke, tmp_path):
        runs = [tmp_path / "c", tmp_path / "a", tmp_path / "b"]
        for run_dir in runs:
            invoke("simulate", "mean", "--d", "1", "--attacks", "none", *QUICK, "--out", str(run_dir))
        merged = tmp_path / "merged.csv"
        result = invoke("report", *map(str, runs), "--out", str(merged), "--threads", "2", "--seed", "3")
        assert result.exit_code == 0, result.output
        assert pd.read_csv(merged)["run"].tolist() == ["c", "a", "b"]
        help_text = invoke("report", "--help").output
        assert "--seed" in help_text and "--threads" in help_text

    def test_missing_run(self, invoke, tmp_path):
        result = invoke("report", str(tmp_path / "nowhere"), "--out", str(tmp_path / "merged.csv"))
        assert result.exit_code == EXIT_USAGE


@pytest.mark.slow
def test_meta(invoke, tmp_path):
    out = tmp_path / "run"
    result = invoke("meta", "--d", "2", "--K", "2", "--iterations", "1", "--test-tasks", "2", *QUICK,
                    "--out", str(out))
    assert result.exit_code == 0, result.output
    assert (out / "meta_trace.json").exists()
    assert pd.read_csv(out / "S.csv", header=None).shape == (2, 2)
    kinds = [record["kind"] for record in report_of(out)["records"]]
    assert kinds == ["meta:learned", "meta:none", "meta:isotropic"]


@pytest.mark.slow
def test_grid(invoke, tmp_path):
    out = tmp_path / "run"
    result = invoke("grid", "--n-points", "6", "--d", "1", "--epsilons", "0.0,0.05", "--etas", "0.05",
                    "--sigmas", "0.5", "--attacks", "label_flip", *QUICK, "--out", str(out))
    assert result.exit_code in (0, EXIT_DOMINANCE), result.output
    report = report_of(out)
    assert len(report["records"]) == 2
    assert set(report["notes"]["selected"]) == {"0", "0.05"}
