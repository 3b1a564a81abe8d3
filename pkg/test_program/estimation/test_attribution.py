"""
Delay-stage probit and the internal/external split of predicted delay.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import ndtr

from satisfaction_app.data.joining import filter_sample, join_records
from satisfaction_app.data.loaders import load_flights, load_surveys, load_terminal_hours, load_weather
from satisfaction_app.errors import DataError
from satisfaction_app.estimation.attribution import (
    DEL_EXT,
    DEL_INT,
    EXTERNAL,
    INTERNAL,
    PUBLISHED_DELAY_COEFFICIENTS,
    DelayStageFit,
    decompose_predictions,
    fit_delay_stage,
    plug_into_satisfaction,
)
from satisfaction_app.estimation.probit import INTERCEPT
from satisfaction_app.features.design import (
    DELAY_ROSTER,
    GROUP_ATTRIBUTION,
    DesignMatrix,
    assemble_delay_design,
    build_feature_frame,
)


def rows(**columns):
    names = list(columns)
    X = np.column_stack([np.asarray(columns[name], dtype=float) for name in names])
    n = X.shape[0]
    return DesignMatrix(y=np.zeros(n, dtype=int), X=X, names=names, penalized=np.zeros(len(names), dtype=bool),
                        cluster_id=np.full(n, "c"), outcome="DEL")


def test_destination_weather_increment():
    stage = DelayStageFit.from_coefficients({"WEATHER (DST)": PUBLISHED_DELAY_COEFFICIENTS["WEATHER (DST)"]},
                                            intercept=0.0)
    split = decompose_predictions(stage, rows(**{"WEATHER (DST)": [1.0]}))
    assert split.del_int[0] == pytest.approx(0.5)
    assert split.del_ext[0] == pytest.approx(ndtr(0.1347) - 0.5)
    assert split.del_ext[0] == pytest.approx(0.0536, abs=1e-4)


def test_clear_weather_has_no_external_share():
    stage = DelayStageFit.from_coefficients({"WEATHER (ORG)": 0.029, "WEATHER (DST)": 0.1347, "LOADFAC": 0.27},
                                            intercept=-1.2)
    data = rows(**{"WEATHER (ORG)": [0, 0, 1], "WEATHER (DST)": [0, 0, 1], "LOADFAC": [0.5, 0.9, 0.8]})
    split = decompose_predictions(stage, data)
    assert_allclose(split.del_ext[:2], 0.0)
    assert_allclose(split.del_int, ndtr(-1.2 + 0.27 * np.array([0.5, 0.9, 0.8])))
    assert_allclose(split.del_int + split.del_ext, ndtr(split.eta_int + split.eta_ext))
    assert split.n_floored == 0


def test_negative_weather_increment_is_floored():
    stage = DelayStageFit.from_coefficients({"WEATHER (DST)": -0.4}, intercept=0.3)
    split = decompose_predictions(stage, rows(**{"WEATHER (DST)": [1.0, 0.0]}))
    assert_allclose(split.del_ext, 0.0)
    assert split.n_floored == 1


def test_marginalized_predictions_scale_by_the_random_intercept():
    stage = DelayStageFit.from_coefficients({"WEATHER (DST)": 0.5}, intercept=0.4, sigma_u=1.0)
    data = rows(**{"WEATHER (DST)": [1.0]})
    conditional = decompose_predictions(stage, data)
    marginal = decompose_predictions(stage, data, marginalize=True)
    assert conditional.del_int[0] == pytest.approx(ndtr(0.4))
    assert marginal.del_int[0] == pytest.approx(ndtr(0.4 / np.sqrt(2.0)))
    assert marginal.del_ext[0] == pytest.approx(ndtr(0.9 / np.sqrt(2.0)) - ndtr(0.4 / np.sqrt(2.0)))


def test_supplied_coefficients_are_tagged():
    stage = DelayStageFit.from_coefficients(PUBLISHED_DELAY_COEFFICIENTS, intercept=-2.0)
    assert stage.fit.names[0] == INTERCEPT
    assert stage.external_names == ["WEATHER (ORG)", "WEATHER (DST)"]
    assert len(stage.internal_names) == len(DELAY_ROSTER) - 2
    assert stage.tags["SMALLTERM"] == INTERNAL and stage.tags["WEATHER (DST)"] == EXTERNAL
    assert stage.fit.vcov is None


def test_missing_roster_column_in_rows():
    stage = DelayStageFit.from_coefficients({"LOADFAC": 0.2}, intercept=0.0)
    with pytest.raises(DataError):
        decompose_predictions(stage, rows(CARGO=[1.0]))


def test_tags_must_cover_every_covariate():
    stage = DelayStageFit.from_coefficients({"LOADFAC": 0.2}, intercept=0.0)
    with pytest.raises(DataError):
        DelayStageFit(fit=stage.fit, tags={})


def test_plug_swaps_the_delay_column():
    base = DesignMatrix(
        y=np.array([3, 7, 9]), X=np.array([[1.0, 0.2], [0.0, 0.5], [1.0, 0.9]]), names=["DEL", "WIFI"],
        penalized=np.array([False, False]), cluster_id=np.array(["a", "b", "c"]),
    )
    plugged = plug_into_satisfaction(np.array([0.1, 0.2, 0.3]), np.array([0.0, 0.05, 0.01]), base)
    assert plugged.names == ["WIFI", DEL_INT, DEL_EXT]
    assert plugged.p == base.p + 1
    assert list(plugged.penalized) == [False, True, True]
    assert plugged.groups[-2:] == [GROUP_ATTRIBUTION, GROUP_ATTRIBUTION]
    assert_allclose(plugged.column(DEL_EXT), [0.0, 0.05, 0.01])
    with pytest.raises(DataError):
        plug_into_satisfaction(np.zeros(2), np.zeros(2), base)


def test_fitted_delay_stage_on_synthetic_sample(small_dataset):
    joined = join_records(load_surveys(small_dataset.surveys), load_flights(small_dataset.flights),
                          load_weather(small_dataset.weather), load_terminal_hours(small_dataset.terminal_hours))
    frame = build_feature_frame(filter_sample(joined.joined).kept)
    matrix = assemble_delay_design(frame)
    stage = fit_delay_stage(matrix, random_intercept=False)
    assert stage.fit.names[0] == INTERCEPT
    assert set(stage.external_names) <= {"WEATHER (ORG)", "WEATHER (DST)"}
    split = decompose_predictions(stage, matrix)
    assert np.all((split.del_int >= 0) & (split.del_int <= 1))
    assert np.all(split.del_ext >= 0)
    assert np.all(split.del_int + split.del_ext <= 1 + 1e-12)
    with pytest.raises(DataError):
        fit_delay_stage(matrix.drop_columns(["LOADFAC"]), random_intercept=False)
