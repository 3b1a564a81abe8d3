"""
Command-line parsing and exit codes.
"""
import os

import pytest

from satisfaction_app.app import build_parser, flag_settings, main
from satisfaction_app.data.synthetic_data import SyntheticConfig, synthesize_dataset, write_dataset


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in list(os.environ):
        if name.startswith("SATISFACTION_") and name != "SATISFACTION_LOG_LEVEL":
            monkeypatch.delenv(name)


def test_flags_become_dotted_settings():
    args = build_parser().parse_args(["fit", "--seed", "9", "--out", "runs/x", "--threads", "2",
                                      "--set", "lasso.c=1.2", "--set", "smote.enabled = true"])
    assert flag_settings(args) == {
        "lasso.c": "1.2",
        "smote.enabled": "true",
        "seed": "9",
        "out_dir": "runs/x",
        "threads": "2",
    }


def test_features_command_succeeds(tmp_path):
    out = tmp_path / "out"
    code = main(["features", "--seed", "11", "--out", str(out), "--set", "synthetic.n_respondents=400"])
    assert code == 0
    assert (out / "design.csv").is_file()
    assert (out / "manifest.txt").is_file()
    assert not (out / "fit.csv").exists()


@pytest.mark.parametrize("extra", [
    ["--set", "variant=col9_missing"],
    ["--set", "nope=1"],
    ["--set", "features.board_quantile=1.5"],
])
def test_configuration_errors_exit_with_two(tmp_path, extra):
    assert main(["run", "--out", str(tmp_path)] + extra) == 2


def test_unknown_variant_choice_is_rejected_by_the_parser():
    with pytest.raises(SystemExit) as caught:
        main(["run", "--variant", "col0"])
    assert caught.value.code == 2


def test_missing_flights_table_exits_with_three(tmp_path):
    paths = write_dataset(synthesize_dataset(SyntheticConfig(n_respondents=200, seed=3)), str(tmp_path / "in"))
    code = main(["ingest", "--out", str(tmp_path / "out"),
                 "--set", f"paths.surveys={paths['surveys']}", "--set", f"paths.weather={paths['weather']}"])
    assert code == 3
    assert not (tmp_path / "out" / "sample_report.txt").exists()
