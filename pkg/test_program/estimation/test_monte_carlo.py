"""
Seeded Monte-Carlo checks of the estimators and of the synthetic study design.

Every suite fans its replications out with joblib; replication r uses base seed + r.
"""
from dataclasses import replace

import numpy as np
import pytest
from joblib import Parallel, delayed
from scipy.special import ndtr

from satisfaction_app.data.joining import filter_sample, join_records
from satisfaction_app.data.loaders import load_flights, load_surveys, load_terminal_hours, load_weather
from satisfaction_app.data.synthetic_data import SyntheticConfig, synthesize_dataset
from satisfaction_app.estimation.attribution import (
    DEL_EXT,
    DEL_INT,
    decompose_predictions,
    fit_delay_stage,
    plug_into_satisfaction,
)
from satisfaction_app.estimation.effects import compare_bias, simulate_delay_shift
from satisfaction_app.estimation.lasso import pds_select, select_controls
from satisfaction_app.estimation.probit import (
    ProbitOptions,
    fit_binary_probit,
    fit_ordered_probit,
    fit_random_intercept_probit,
)
from satisfaction_app.features.design import (
    GROUP_DELAY,
    GROUP_DISSAT,
    GROUP_ROSTER,
    GROUP_TERMDIS,
    DesignMatrix,
    FeatureSpec,
    assemble_delay_design,
    assemble_design,
    build_feature_frame,
)

pytestmark = pytest.mark.slow

REPLICATIONS = 100
ORDERED_BETA = np.array([0.5, -0.3, 0.2, 0.0, 0.0])
ORDERED_CUTS = np.linspace(-2.0, 2.0, 9)
NAIVE_SPEC = FeatureSpec(include_groups={GROUP_ROSTER, GROUP_DELAY})
CONTROLLED_SPEC = FeatureSpec(include_groups={GROUP_ROSTER, GROUP_DELAY, GROUP_DISSAT, GROUP_TERMDIS})


def fan_out(function, base_seed, replications=REPLICATIONS):
    return Parallel(n_jobs=-1)(delayed(function)(base_seed + r) for r in range(replications))


def feature_frame(dataset):
    joined = join_records(load_surveys(dataset.surveys), load_flights(dataset.flights),
                          load_weather(dataset.weather), load_terminal_hours(dataset.terminal_hours))
    return build_feature_frame(filter_sample(joined.joined).kept)


def ordered_coverage(seed):
    rng = np.random.default_rng(seed)
    n = 5000
    X = rng.standard_normal((n, len(ORDERED_BETA)))
    y = 1 + np.searchsorted(ORDERED_CUTS, X @ ORDERED_BETA + rng.standard_normal(n))
    matrix = DesignMatrix(y=y, X=X, names=[f"x{j}" for j in range(X.shape[1])],
                          penalized=np.zeros(X.shape[1], dtype=bool), cluster_id=np.array([f"r{i}" for i in range(n)]))
    fit = fit_ordered_probit(matrix, ProbitOptions(cluster=False))
    return fit.converged, np.abs(fit.beta - ORDERED_BETA) < 3.0 * fit.se


def binary_null_slope(seed):
    rng = np.random.default_rng(seed)
    n = 1000
    x = rng.standard_normal(n)
    y = (rng.random(n) < ndtr(-0.5)).astype(int)
    matrix = DesignMatrix(y=y, X=x[:, None], names=["x0"], penalized=np.zeros(1, dtype=bool),
                          cluster_id=np.array([f"r{i}" for i in range(n)]), outcome="DEL")
    fit = fit_binary_probit(matrix, ProbitOptions(cluster=False))
    return abs(fit.coefficient("x0")) < 3.0 * fit.se[fit.names.index("x0")]


def random_intercept_scale(seed):
    rng = np.random.default_rng(seed)
    n_groups, per_group = 200, 25
    group = np.repeat(np.arange(n_groups), per_group)
    x = rng.standard_normal(n_groups * per_group)
    effect = rng.standard_normal(n_groups)
    y = (rng.random(len(x)) < ndtr(-0.3 + 0.5 * x + effect[group])).astype(int)
    matrix = DesignMatrix(y=y, X=x[:, None], names=["x0"], penalized=np.zeros(1, dtype=bool),
                          cluster_id=np.array([f"g{g}" for g in group]), outcome="DEL")
    return fit_random_intercept_probit(matrix, quad_nodes=12).sigma_u


def confounder_in_union(seed):
    rng = np.random.default_rng(seed)
    n, p = 2000, 50
    controls = rng.standard_normal((n, p))
    delayed_flag = (0.8 * controls[:, 0] + rng.standard_normal(n) > 0.9).astype(float)
    y = -0.3 * delayed_flag + 0.5 * controls[:, 0] + rng.standard_normal(n)
    result = pds_select(y, delayed_flag[:, None], controls, np.array([f"g{i % 100}" for i in range(n)]),
                        ["DEL"], [f"c{j}" for j in range(p)])
    return "c0" in result.selected


def bias_comparison(seed):
    dataset = synthesize_dataset(SyntheticConfig(seed=seed))
    report = compare_bias(feature_frame(dataset), NAIVE_SPEC, CONTROLLED_SPEC, truth=dataset.truth)
    return report.pct_drop, report.distance_controlled < report.distance_naive, report.flagged


def attribution_mirror(seed):
    dataset = synthesize_dataset(SyntheticConfig(seed=seed, internal_blame_only=True))
    frame = feature_frame(dataset)
    delay_design = assemble_delay_design(frame)
    stage = fit_delay_stage(delay_design)
    split = decompose_predictions(stage, delay_design)
    plugged = plug_into_satisfaction(split.del_int, split.del_ext, assemble_design(frame, FeatureSpec()))
    _, result = select_controls(plugged)
    z = {name: stage.fit.beta[j] / stage.fit.se[j] for j, name in enumerate(stage.fit.names)}
    weather_found = all(z[name] > 1.96 for name in ("WEATHER (ORG)", "WEATHER (DST)"))
    return DEL_INT in result.selected, DEL_EXT in result.selected, weather_found


def test_ordered_probit_covers_the_true_coefficients():
    results = fan_out(ordered_coverage, 3000)
    assert sum(converged for converged, _ in results) == REPLICATIONS
    covered = np.array([inside for _, inside in results])
    # the last two coefficients are pure noise
    assert np.all(covered.sum(axis=0) >= 95)


def test_binary_probit_slope_of_an_unrelated_covariate():
    assert sum(fan_out(binary_null_slope, 3500)) >= 95


def test_random_intercept_scale_is_recovered():
    sigmas = np.array(fan_out(random_intercept_scale, 4000))
    assert np.sum((sigmas >= 0.7) & (sigmas <= 1.3)) >= 90


def test_confounder_of_outcome_and_delay_is_selected():
    assert sum(fan_out(confounder_in_union, 5000)) > 95


def test_psychosituational_controls_shrink_the_delay_effect():
    results = fan_out(bias_comparison, 6000)
    drops = np.array([drop for drop, _, _ in results])
    assert not any(flagged for _, _, flagged in results)
    assert 12.0 <= drops.mean() <= 30.0
    assert sum(closer for _, closer, _ in results) >= 90


def test_external_delay_share_is_dropped_when_only_internal_delay_matters():
    results = fan_out(attribution_mirror, 7000)
    assert sum(internal and not external for internal, external, _ in results) >= 80
    assert sum(weather for _, _, weather in results) >= 90


@pytest.fixture(scope="module")
def flagship_fit():
    matrix = assemble_design(feature_frame(synthesize_dataset(SyntheticConfig())), CONTROLLED_SPEC)
    return fit_ordered_probit(matrix), matrix


@pytest.mark.parametrize("coefficient, low, high", [(-0.34, 3.0, 8.0), (-0.056, 0.3, 2.0)])
def test_rating_shift_for_published_delay_magnitudes(flagship_fit, coefficient, low, high):
    fit, matrix = flagship_fit
    assert fit.converged
    beta = fit.beta.copy()
    beta[fit.names.index("DEL")] = coefficient
    report = simulate_delay_shift(replace(fit, beta=beta), matrix)
    assert low <= -report.mean_pct_change <= high
