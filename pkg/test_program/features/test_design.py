"""
Feature frame and design-matrix assembly.
"""
from datetime import datetime, timedelta

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from satisfaction_app.data.joining import filter_sample, join_records
from satisfaction_app.data.loaders import load_flights, load_surveys, load_terminal_hours, load_weather
from satisfaction_app.errors import AssemblyError, ContractError, DataError
from satisfaction_app.features.design import (
    DELAY_ROSTER,
    DISSAT_COLUMNS,
    GROUP_AIRL,
    GROUP_DELAY,
    GROUP_DISSAT,
    GROUP_PANDEMIC,
    GROUP_ROSTER,
    ROSTER_COLUMNS,
    DesignMatrix,
    FeatureSpec,
    assemble_delay_design,
    assemble_design,
    build_feature_frame,
    dissat_ratios,
    resolve_duplicate_columns,
)


@pytest.fixture(scope="module")
def sample_records(small_dataset):
    joined = join_records(load_surveys(small_dataset.surveys), load_flights(small_dataset.flights),
                          load_weather(small_dataset.weather), load_terminal_hours(small_dataset.terminal_hours))
    return filter_sample(joined.joined).kept


@pytest.fixture(scope="module")
def sample_frame(sample_records):
    return build_feature_frame(sample_records)


def varied_records(joined_factory, survey_factory, flight_factory, year=2019, airlines=("G3", "G3", "AD", "JJ")):
    records = []
    for i, airline in enumerate(airlines):
        sched = datetime(year, 5, 10 + i, 11, 0)
        survey = survey_factory(respondent_id=f"R{i:06d}", interview_at=sched - timedelta(minutes=30 + 10 * i),
                                global_rating=5 + i, flight_no=f"{airline}100{i}")
        flight = flight_factory(flight_no=f"{airline}100{i}", airline=airline, sched_dep=sched,
                                actual_dep=sched + timedelta(minutes=5 + 20 * i))
        records.append(joined_factory(survey=survey, flight=flight))
    return records


def test_roster_only_design_has_twenty_unpenalized_columns(sample_frame):
    matrix = assemble_design(sample_frame, FeatureSpec(include_groups={GROUP_ROSTER}))
    assert matrix.names == list(ROSTER_COLUMNS)
    assert not matrix.penalized.any()
    assert matrix.n == len(sample_frame)
    assert set(np.unique(matrix.y)) <= set(range(1, 11))


def test_default_design_orders_focal_before_controls(sample_frame):
    matrix = assemble_design(sample_frame)
    assert matrix.focal_names == list(ROSTER_COLUMNS) + ["DEL"]
    assert matrix.names[:21] == matrix.focal_names
    controls = matrix.control_names
    assert [c for c in controls if c.startswith("DISSAT")] == list(DISSAT_COLUMNS)
    assert "TERMDIS" in controls
    assert any(c.startswith("AIRL (") for c in controls)
    assert all("|" in c for c in matrix.cluster_id)
    assert {"respondent_id", "BSNFLIER", "LSRFLIER", "DEL"} <= set(matrix.aux.columns)


def test_dissat_columns_are_non_negative(sample_frame):
    values = sample_frame[list(DISSAT_COLUMNS)].to_numpy()
    assert np.all(np.isfinite(values)) and np.all(values >= 0)


def test_homogeneous_hour_gives_unit_ratios():
    keys = pd.Series(["2019-05|10"] * 4 + ["2019-05|11"] * 3)
    ratios = dissat_ratios(np.array([3, 3, 3, 3, 5, 5, 5]), keys)
    assert_allclose(ratios, [1, 1, 1, 1, 0, 0, 0])


def test_board_windows_partition_the_sample(sample_frame):
    windows = sample_frame[["BOARD (NOT)", "BOARD (CALL)", "BOARD (NOW)"]].to_numpy()
    assert_array_equal(windows.sum(axis=1), np.ones(len(sample_frame)))


def test_three_airlines_give_two_dummies(joined_factory, survey_factory, flight_factory):
    records = varied_records(joined_factory, survey_factory, flight_factory)
    matrix = assemble_design(records, FeatureSpec(include_groups={GROUP_AIRL}, min_level_count=1))
    assert matrix.names == ["AIRL (AD)", "AIRL (JJ)"]
    assert matrix.reference_levels["AIRL"] == "G3"
    assert matrix.penalized.all()


def test_pandemic_block_dropped_when_sample_is_all_2018(joined_factory, survey_factory, flight_factory):
    records = varied_records(joined_factory, survey_factory, flight_factory, year=2018)
    matrix = assemble_design(records, FeatureSpec(include_groups={GROUP_PANDEMIC, GROUP_AIRL},
                                                  min_level_count=1))
    assert not any(name.startswith("PANDEMIC") for name in matrix.names)
    assert any("constant columns dropped" in note for note in matrix.notes)


def test_delay_encodings(joined_factory, survey_factory, flight_factory):
    records = varied_records(joined_factory, survey_factory, flight_factory)
    deldur = assemble_design(records, FeatureSpec(include_groups={GROUP_DELAY}, delay_encoding="deldur"))
    assert deldur.names == ["DELDUR", "DELDUR2"]
    # delays are 5, 25, 45 and 65 minutes
    assert_allclose(deldur.column("DELDUR"), [0.0, 25 / 60, 45 / 60, 65 / 60])
    assert_allclose(deldur.column("DELDUR2"), deldur.column("DELDUR") ** 2)
    strict = assemble_design(records, FeatureSpec(include_groups={GROUP_DELAY}, delay_threshold_min=30))
    assert_array_equal(strict.column("DEL"), [0, 0, 1, 1])


def test_duplicate_focal_column_is_an_error():
    X = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])
    matrix = DesignMatrix(y=np.array([1, 2, 3]), X=X, names=["A", "B", "C"],
                          penalized=np.array([False, False, True]), cluster_id=np.array(["a", "b", "c"]))
    with pytest.raises(AssemblyError) as caught:
        resolve_duplicate_columns(matrix)
    assert caught.value.columns == ("A", "B")


def test_duplicate_control_column_is_dropped():
    X = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]])
    matrix = DesignMatrix(y=np.array([1, 2, 3]), X=X, names=["A", "B", "C"],
                          penalized=np.array([False, True, True]), cluster_id=np.array(["a", "b", "c"]))
    resolved = resolve_duplicate_columns(matrix)
    assert resolved.names == ["A", "C"]
    assert resolved.notes == ["duplicate columns dropped: B"]


def test_record_order_does_not_change_the_design(sample_records):
    forward = assemble_design(sample_records)
    order = np.random.default_rng(4).permutation(len(sample_records))
    shuffled = assemble_design([sample_records[i] for i in order])
    assert shuffled.names == forward.names
    lookup = {rid: i for i, rid in enumerate(shuffled.aux["respondent_id"])}
    rows = [lookup[rid] for rid in forward.aux["respondent_id"]]
    assert_allclose(shuffled.X[rows], forward.X)
    assert_array_equal(shuffled.y[rows], forward.y)
    assert_array_equal(shuffled.cluster_id[rows], forward.cluster_id)


def test_saved_design_loads_back(tmp_path, sample_frame):
    matrix = assemble_design(sample_frame)
    matrix = matrix.drop_columns(["WIFI"], note="lasso drop")
    matrix.save(str(tmp_path / "design.csv"), str(tmp_path / "design.meta"))
    loaded = DesignMatrix.load(str(tmp_path / "design.csv"), str(tmp_path / "design.meta"))
    assert loaded.names == matrix.names
    assert_array_equal(loaded.penalized, matrix.penalized)
    assert loaded.groups == matrix.groups
    assert loaded.reference_levels == matrix.reference_levels
    assert loaded.notes == matrix.notes
    assert_allclose(loaded.X, matrix.X)
    assert_array_equal(loaded.y, matrix.y)
    assert list(loaded.aux["respondent_id"]) == list(matrix.aux["respondent_id"])


def test_delay_design(sample_frame):
    matrix = assemble_delay_design(sample_frame)
    assert matrix.names == list(DELAY_ROSTER)
    assert matrix.outcome == "DEL"
    assert set(np.unique(matrix.y)) <= {0, 1}
    with pytest.raises(DataError):
        assemble_delay_design(sample_frame.drop(columns=["LOADFAC"]))


def test_empty_record_list_is_rejected():
    with pytest.raises(DataError):
        build_feature_frame([])


def test_dissat_controls_only(sample_frame):
    matrix = assemble_design(sample_frame, FeatureSpec(include_groups={GROUP_DISSAT}))
    assert matrix.names == list(DISSAT_COLUMNS)
    assert matrix.focal_names == []


def test_rare_levels_fold_into_the_reference(joined_factory, survey_factory, flight_factory):
    records = varied_records(joined_factory, survey_factory, flight_factory, airlines=("G3", "G3", "AD", "AD", "JJ"))
    matrix = assemble_design(records, FeatureSpec(include_groups={GROUP_AIRL}, min_level_count=2))
    assert matrix.reference_levels["AIRL"] == "AD"
    assert matrix.names == ["AIRL (G3)"]
    assert_array_equal(matrix.column("AIRL (G3)"), [1, 1, 0, 0, 0])
    assert "rare AIRL levels merged into reference: JJ" in matrix.notes


def test_min_level_count_must_be_positive():
    with pytest.raises(ContractError):
        FeatureSpec(min_level_count=0)
