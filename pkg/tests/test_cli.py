"""
Tests for the ee-models command line.
"""

import json
import os

import pandas as pd
import pytest
from click.testing import CliRunner

from ee_models import __version__
from ee_models.cli import cli
from ee_models.data.io import write_counts


@pytest.fixture
def runner(monkeypatch):
    monkeypatch.delenv("EE_MODELS_SPEC", raising=False)
    monkeypatch.delenv("EE_MODELS_LOG", raising=False)
    monkeypatch.delenv("EE_MODELS_LOG_FILE", raising=False)
    monkeypatch.delenv("EE_MODELS_LOG_CONFIG", raising=False)
    return CliRunner()


@pytest.fixture
def hhh4_inputs(tmp_path, count_series):
    """Counts, adjacency and an endemic+ar+ne NegBin1 spec on disk."""
    counts = tmp_path / "counts.csv"
    write_counts(count_series, str(counts))
    adjacency = tmp_path / "adjacency.txt"
    adjacency.write_text("u1,u2\nu2,u3\nu3,u4\n")
    spec = tmp_path / "hhh4.json"
    spec.write_text(json.dumps({
        "model": "hhh4",
        "family": "NegBin1",
        "endemic": {"intercept": True},
        "ar": {"intercept": True},
        "ne": {"intercept": True, "weights": {"kind": "firstOrder"}},
    }))
    return {"counts": str(counts), "adjacency": str(adjacency), "spec": str(spec)}


def fit_args(inputs, out):
    return ["fit-hhh4", "--spec", inputs["spec"], "--counts", inputs["counts"],
            "--adjacency", inputs["adjacency"], "--out", str(out)]


def test_version(runner):
    """--version prints the package version."""
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_fit_hhh4_writes_artifacts(runner, hhh4_inputs, tmp_path):
    """A converged hhh4 fit writes the coefficient table, record, report and manifest."""
    out = tmp_path / "fit"
    result = runner.invoke(cli, fit_args(hhh4_inputs, out))
    assert result.exit_code == 0, result.output
    assert sorted(os.listdir(out)) == ["coefficients.tsv", "fit.json", "manifest.json",
                                       "report.txt"]

    table = pd.read_csv(out / "coefficients.tsv", sep="\t")
    assert "ar.1" in set(table.iloc[:, 0])
    record = json.loads((out / "fit.json").read_text())
    assert record["subset"] == [2, 120]
    assert 0 < record["maxEV"] < 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "fit-hhh4"
    assert manifest["converged"] is True
    assert manifest["version"] == __version__
    assert manifest["inputs"]["counts"] == hhh4_inputs["counts"]
    assert "hhh4 fit" in (out / "report.txt").read_text()


def test_output_exists_without_force(runner, hhh4_inputs, tmp_path):
    """A non-empty output directory is refused unless --force is given."""
    out = tmp_path / "fit"
    out.mkdir()
    (out / "old.txt").write_text("keep")
    result = runner.invoke(cli, fit_args(hhh4_inputs, out))
    assert result.exit_code == 1
    assert "error=output-exists" in result.output
    assert (out / "old.txt").read_text() == "keep"

    result = runner.invoke(cli, fit_args(hhh4_inputs, out) + ["--force"])
    assert result.exit_code == 0, result.output
    assert (out / "manifest.json").exists()


def test_missing_spec(runner, hhh4_inputs, tmp_path):
    """Without --spec or EE_MODELS_SPEC the run fails as missing input."""
    result = runner.invoke(cli, ["fit-hhh4", "--counts", hhh4_inputs["counts"],
                                 "--out", str(tmp_path / "fit")])
    assert result.exit_code == 1
    assert "error=missing-input" in result.output


def test_spec_from_environment(runner, hhh4_inputs, tmp_path, monkeypatch):
    """EE_MODELS_SPEC stands in for --spec."""
    monkeypatch.setenv("EE_MODELS_SPEC", hhh4_inputs["spec"])
    out = tmp_path / "fit"
    result = runner.invoke(cli, ["fit-hhh4", "--counts", hhh4_inputs["counts"],
                                 "--adjacency", hhh4_inputs["adjacency"], "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "fit.json").exists()


def test_invalid_spec_is_validation_error(runner, hhh4_inputs, tmp_path):
    """Unknown spec keys are rejected with a validation error."""
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"model": "hhh4", "family": "NegBin1", "colour": "red"}))
    result = runner.invoke(cli, ["fit-hhh4", "--spec", str(spec),
                                 "--counts", hhh4_inputs["counts"],
                                 "--out", str(tmp_path / "fit")])
    assert result.exit_code == 1
    assert "error=validation" in result.output


def test_wrong_spec_kind(runner, hhh4_inputs, tmp_path):
    """fit-twinsir refuses an hhh4 spec."""
    result = runner.invoke(cli, ["fit-twinsir", "--spec", hhh4_inputs["spec"],
                                 "--out", str(tmp_path / "fit")])
    assert result.exit_code == 1
    assert "error=validation" in result.output
    assert "TwinSIRSpec" in result.output


def test_fit_twinsir_has_no_map_option(runner, hhh4_inputs, tmp_path):
    """twinSIR reads coordinates from the individuals; --map is not an option."""
    result = runner.invoke(cli, ["fit-twinsir", "--help"])
    assert result.exit_code == 0
    assert "--map" not in result.output
    assert "--map" in runner.invoke(cli, ["fit-hhh4", "--help"]).output

    result = runner.invoke(cli, ["fit-twinsir", "--spec", hhh4_inputs["spec"],
                                 "--map", "tiles.geojson", "--out", str(tmp_path / "fit")])
    assert result.exit_code == 2
    assert "No such option" in result.output


def test_threads_must_be_positive(runner, hhh4_inputs, tmp_path):
    """--threads 0 is a validation error."""
    result = runner.invoke(cli, fit_args(hhh4_inputs, tmp_path / "fit") + ["--threads", "0"])
    assert result.exit_code == 1
    assert "error=validation" in result.output


def test_simulate_needs_seed(runner, hhh4_inputs, tmp_path):
    """simulate without --seed is refused before anything is written."""
    out = tmp_path / "sim"
    result = runner.invoke(cli, ["simulate", "--spec", hhh4_inputs["spec"],
                                 "--counts", hhh4_inputs["counts"], "--out", str(out)])
    assert result.exit_code == 1
    assert "error=validation" in result.output
    assert not out.exists()


def test_simulate_hhh4(runner, hhh4_inputs, tmp_path):
    """Two seeded replicates write one count table each plus the final sizes."""
    out = tmp_path / "sim"
    result = runner.invoke(cli, ["simulate", "--spec", hhh4_inputs["spec"],
                                 "--counts", hhh4_inputs["counts"],
                                 "--adjacency", hhh4_inputs["adjacency"],
                                 "--seed", "3", "--nsim", "2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    for name in ("sim_0001.csv", "sim_0002.csv", "final_sizes.csv", "coefficients.tsv"):
        assert (out / name).exists()
    sizes = pd.read_csv(out / "final_sizes.csv")
    assert list(sizes["replicate"]) == [1, 2]
    sim = pd.read_csv(out / "sim_0001.csv")
    assert list(sim.columns) == ["u1", "u2", "u3", "u4"]
    assert json.loads((out / "manifest.json").read_text())["seed"] == 3


def test_predict_then_score(runner, hhh4_inputs, tmp_path):
    """Predictions written by predict are scored by score."""
    pred_out = tmp_path / "pred"
    result = runner.invoke(cli, ["predict", "--spec", hhh4_inputs["spec"],
                                 "--counts", hhh4_inputs["counts"],
                                 "--adjacency", hhh4_inputs["adjacency"],
                                 "--tp", "100", "119", "--out", str(pred_out)])
    assert result.exit_code == 0, result.output
    predictions = pd.read_csv(pred_out / "predictions.csv")
    assert len(predictions) == 20 * 4

    score_out = tmp_path / "score"
    result = runner.invoke(cli, ["score", "--predictions", str(pred_out / "predictions.csv"),
                                 "--bins", "5", "--out", str(score_out)])
    assert result.exit_code == 0, result.output
    scores = pd.read_csv(score_out / "scores.csv")
    assert set(scores["score"]) == {"logs", "rps", "ses"}
    pit = pd.read_csv(score_out / "pit.csv")
    assert len(pit) == 5
    assert pit["height"].mean() == pytest.approx(1.0)
    assert not (score_out / "coefficients.tsv").exists()
    assert (score_out / "manifest.json").exists()


def test_predict_needs_tp(runner, hhh4_inputs, tmp_path):
    """predict without --tp fails as missing input."""
    result = runner.invoke(cli, ["predict", "--spec", hhh4_inputs["spec"],
                                 "--counts", hhh4_inputs["counts"],
                                 "--out", str(tmp_path / "pred")])
    assert result.exit_code == 1
    assert "error=missing-input" in result.output
    assert "--tp" in result.output


def test_score_needs_predictions(runner, tmp_path):
    """score without --predictions fails as missing input."""
    result = runner.invoke(cli, ["score", "--out", str(tmp_path / "score")])
    assert result.exit_code == 1
    assert "error=missing-input" in result.output


def test_score_missing_file(runner, tmp_path):
    """A predictions path that does not exist is missing input."""
    result = runner.invoke(cli, ["score", "--predictions", str(tmp_path / "nope.csv"),
                                 "--out", str(tmp_path / "score")])
    assert result.exit_code == 1
    assert "error=missing-input" in result.output


def test_convert_aggregates_counts(runner, hhh4_inputs, tmp_path):
    """Weekly counts aggregate to a coarser frequency with the same total."""
    out = tmp_path / "conv"
    result = runner.invoke(cli, ["convert", "--counts", hhh4_inputs["counts"],
                                 "--nfreq", "13", "--out", str(out)])
    assert result.exit_code == 0, result.output
    weekly = pd.read_csv(hhh4_inputs["counts"]).to_numpy().sum()
    coarse = pd.read_csv(out / "counts.csv")
    assert coarse.to_numpy().sum() == pytest.approx(weekly)
    assert len(coarse) == 120 // 4
    assert "Conversion" in (out / "report.txt").read_text()
