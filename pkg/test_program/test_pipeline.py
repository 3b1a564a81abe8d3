"""
Stage orchestration, atomic artifacts and the checksum manifest.
"""
import os

import pandas as pd
import pytest

from satisfaction_app.config import load_config
from satisfaction_app.errors import StageError
from satisfaction_app.pipeline import STUDY_STAGES, PipelineRun, file_checksum, run_pipeline, stages_for

SMALL_RUN = {"synthetic.n_respondents": "600", "seed": "11"}


def small_config(out_dir, **extra):
    return load_config(flags={**SMALL_RUN, "out_dir": str(out_dir), **extra}, environ={})


def manifest_lines(path):
    with open(path, encoding="utf-8") as handle:
        return handle.read().splitlines()


def test_commands_run_a_prefix_of_the_stages():
    assert stages_for("generate") == ("generate",)
    assert stages_for("ingest") == ("generate", "join")
    assert stages_for("features") == ("generate", "join", "features")
    assert stages_for("run")[-1] == "report"
    assert stages_for("smote-study") == STUDY_STAGES
    with pytest.raises(ValueError):
        stages_for("deploy")


def test_features_run_writes_committed_artifacts(tmp_path):
    artifacts = run_pipeline(small_config(tmp_path / "a"), "features")
    for name in ("data/surveys.csv", "sample_report.txt", "features.csv", "design.csv", "design.meta.txt",
                 "manifest.txt"):
        assert name in artifacts
        assert os.path.isfile(artifacts[name])
    leftovers = [f for _, _, files in os.walk(tmp_path) for f in files if f.endswith(".partial")]
    assert leftovers == []
    lines = manifest_lines(artifacts["manifest.txt"])
    assert lines[0].startswith("config_hash: ")
    assert "stages: generate,join,features" in lines
    assert f"artifact.design.csv: {file_checksum(artifacts['design.csv'])}" in lines
    assert not any(line.startswith("setting.out_dir") for line in lines)


def test_same_config_and_seed_give_identical_artifacts(tmp_path):
    first = run_pipeline(small_config(tmp_path / "a"), "features")
    second = run_pipeline(small_config(tmp_path / "b"), "features")
    assert manifest_lines(first["manifest.txt"]) == manifest_lines(second["manifest.txt"])
    with open(first["features.csv"], "rb") as a, open(second["features.csv"], "rb") as b:
        assert a.read() == b.read()


def test_sample_report_counts(tmp_path):
    artifacts = run_pipeline(small_config(tmp_path), "ingest")
    report = dict(line.split(": ", 1) for line in manifest_lines(artifacts["sample_report.txt"]))
    assert report["surveys"] == "600"
    assert int(report["joined"]) + int(report["rejected"]) == 600
    assert int(report["kept"]) <= int(report["joined"])


def test_missing_input_table_fails_in_the_join_stage(tmp_path):
    generated = run_pipeline(small_config(tmp_path / "gen"), "generate")
    config = small_config(tmp_path / "out", **{"paths.surveys": generated["data/surveys.csv"],
                                               "paths.weather": generated["data/weather.csv"]})
    run = PipelineRun(config)
    with pytest.raises(StageError) as caught:
        run.execute("ingest")
    assert caught.value.stage == "join"
    assert caught.value.exit_code == 3
    assert run.stages_run == ["generate"]


@pytest.mark.slow
def test_full_run_writes_every_report(tmp_path):
    config = load_config(
        variant="col4_dissat",
        flags={"synthetic.n_respondents": "3000", "seed": "5", "out_dir": str(tmp_path),
               "features.groups": "roster,delay,dissat,termdis,airl"},
        environ={},
    )
    artifacts = run_pipeline(config, "run")
    for name in ("selection.txt", "fit.csv", "fit_summary.txt", "shift.csv", "shift_summary.txt",
                 "descriptives.csv", "delay_ratings.csv", "fit_table.csv", "manifest.txt"):
        assert name in artifacts
    summary = dict(line.split(": ", 1) for line in manifest_lines(artifacts["fit_summary.txt"]))
    assert summary["converged"] == "true"
    assert summary["variant"] == "col4_dissat"
    bias = dict(line.split(": ", 1) for line in manifest_lines(artifacts["bias.txt"]))
    assert bias["true_rho"] == "-0.3"
    assert bias["flagged"] == "false"


def test_simulate_stage_writes_the_bias_report(tmp_path):
    artifacts = run_pipeline(small_config(tmp_path, **{"features.groups": "roster,delay,dissat,termdis"}), "run")
    bias = dict(line.split(": ", 1) for line in manifest_lines(artifacts["bias.txt"]))
    assert set(bias) == {"rho_naive", "rho_controlled", "pct_drop", "flagged", "true_rho", "distance_naive",
                         "distance_controlled"}
    assert float(bias["distance_naive"]) == pytest.approx(abs(float(bias["rho_naive"]) + 0.3), abs=1e-8)
    assert f"artifact.bias.txt: {file_checksum(artifacts['bias.txt'])}" in manifest_lines(artifacts["manifest.txt"])


def test_roster_and_delay_only_run_skips_the_bias_report(tmp_path):
    artifacts = run_pipeline(small_config(tmp_path, **{"features.groups": "roster,delay"}), "run")
    assert "bias.txt" not in artifacts
    assert "fit.csv" in artifacts


@pytest.mark.slow
def test_flagship_variant_runs_end_to_end_and_reproduces_its_manifest(tmp_path):
    def flagship(out_dir):
        return load_config(variant="col5_full", flags={"seed": "7", "out_dir": str(out_dir)}, environ={})

    first = run_pipeline(flagship(tmp_path / "a"), "run")
    second = run_pipeline(flagship(tmp_path / "b"), "run")
    summary = dict(line.split(": ", 1) for line in manifest_lines(first["fit_summary.txt"]))
    assert summary["converged"] == "true"
    assert manifest_lines(first["manifest.txt"]) == manifest_lines(second["manifest.txt"])
    selection = manifest_lines(first["selection.txt"])
    union = next(line for line in selection if line.startswith("union: ")).split(": ", 1)[1].split(", ")
    controls = int(next(line for line in selection if line.startswith("controls: ")).split(": ", 1)[1])
    assert len(union) < controls
    fit = pd.read_csv(first["fit.csv"])
    cut_se = fit.loc[fit["variable"].str.startswith("cut"), "se"]
    assert len(cut_se) == 9
    assert cut_se.notna().all() and (cut_se > 0).all()
