"""
Ordered, binary and random-intercept probit fits and their variances.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import ndtri

from satisfaction_app.errors import ContractError
from satisfaction_app.estimation.probit import (
    INTERCEPT,
    OrderedFit,
    binary_loglik_grad,
    cluster_sandwich_vcov,
    coefficient_table,
    cutpoint_jacobian,
    cutpoints_from_theta,
    fit_binary_probit,
    fit_ordered_probit,
    fit_random_intercept_probit,
    info_criteria,
    ordered_category_probs,
    ordered_loglik_grad,
    re_probit_loglik,
    re_probit_loglik_grad,
    sandwich,
    theta_from_cutpoints,
)
from satisfaction_app.features.design import DesignMatrix


def bare_matrix(y, X=None, clusters=None):
    y = np.asarray(y)
    X = np.empty((len(y), 0)) if X is None else np.asarray(X, dtype=float)
    names = [f"x{j}" for j in range(X.shape[1])]
    clusters = np.array([f"c{i % 10}" for i in range(len(y))]) if clusters is None else clusters
    return DesignMatrix(y=y, X=X, names=names, penalized=np.zeros(len(names), dtype=bool), cluster_id=clusters)


def central_difference(function, theta, h=1e-5):
    numeric = np.empty_like(theta)
    for j in range(len(theta)):
        step = np.zeros_like(theta)
        step[j] = h
        numeric[j] = (function(theta + step) - function(theta - step)) / (2.0 * h)
    return numeric


def max_relative_error(analytic, numeric):
    return float(np.max(np.abs(analytic - numeric) / np.maximum(np.abs(analytic), 1.0)))


@pytest.mark.parametrize("n_categories", [3, 10])
@pytest.mark.parametrize("seed", range(20))
def test_ordered_gradient_matches_finite_differences(ordered_factory, seed, n_categories):
    rng = np.random.default_rng(1000 + seed)
    true_cuts = np.cumsum(rng.uniform(0.3, 0.8, n_categories - 1))
    true_cuts -= true_cuts.mean()
    matrix = ordered_factory(200, 0.5 * rng.standard_normal(5), true_cuts, seed=seed)
    beta = 0.5 * rng.standard_normal(5)
    cutpoints = true_cuts + rng.uniform(-0.1, 0.1, n_categories - 1)
    _, gradient = ordered_loglik_grad(beta, cutpoints, matrix)
    theta = np.concatenate([beta, theta_from_cutpoints(cutpoints)])

    def loglik(t):
        return ordered_loglik_grad(t[:5], cutpoints_from_theta(t[5:]), matrix)[0]

    assert max_relative_error(gradient, central_difference(loglik, theta)) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_binary_gradient_matches_finite_differences(binary_factory, seed):
    matrix = binary_factory(200, -0.5, [0.6, -0.3, 0.2], seed=seed)
    beta = np.array([-0.4, 0.5, -0.2, 0.1])
    _, gradient = binary_loglik_grad(beta, matrix)
    numeric = central_difference(lambda b: binary_loglik_grad(b, matrix)[0], beta)
    assert max_relative_error(gradient, numeric) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_random_intercept_gradient_matches_finite_differences(binary_factory, seed):
    matrix = binary_factory(200, -0.3, [0.5, -0.4], seed=seed, n_clusters=20, sigma_u=0.8)
    theta = np.array([-0.2, 0.4, -0.3, np.log(0.7)])
    _, gradient = re_probit_loglik_grad(theta[:-1], theta[-1], matrix)
    assert len(gradient) == 4

    def loglik(t):
        return re_probit_loglik_grad(t[:-1], t[-1], matrix)[0]

    assert max_relative_error(gradient, central_difference(loglik, theta)) < 1e-6
    assert loglik(theta) == pytest.approx(re_probit_loglik(theta[:-1], 0.7, matrix), rel=1e-12)


def test_cutpoint_parameterization_round_trip():
    cutpoints = np.array([-1.2, -0.3, 0.4, 2.0])
    assert_allclose(cutpoints_from_theta(theta_from_cutpoints(cutpoints)), cutpoints)
    with pytest.raises(ContractError):
        theta_from_cutpoints([0.0, 0.0, 1.0])


def test_two_categories_without_covariates():
    fit = fit_ordered_probit(bare_matrix([1] * 50 + [2] * 50))
    assert fit.converged
    assert fit.loglik == pytest.approx(100 * np.log(0.5), abs=1e-9)
    assert_allclose(fit.cutpoints, [0.0], atol=1e-8)


def test_three_category_probabilities():
    probs = ordered_category_probs(np.zeros((1, 1)), [0.0], [-1.0, 1.0])
    assert_allclose(probs[0], [0.158655, 0.682689, 0.158655], atol=1e-6)
    assert probs.sum() == pytest.approx(1.0)


def test_ordered_fit_recovers_known_coefficients(ordered_factory):
    beta = [0.5, -0.3, 0.0]
    cutpoints = [-1.0, -0.2, 0.6, 1.4]
    fit = fit_ordered_probit(ordered_factory(4000, beta, cutpoints, seed=7))
    assert fit.converged
    assert fit.gradient_norm < 1e-6
    assert np.all(np.abs(fit.beta - beta) < 4 * fit.se)
    assert np.all(np.diff(fit.cutpoints) > 0)
    assert_allclose(fit.cutpoints, cutpoints, atol=0.15)
    assert fit.n_clusters == 40
    assert fit.k == 3 + 4
    assert fit.aic == pytest.approx(2 * fit.k - 2 * fit.loglik)


def test_unobserved_categories_are_merged(ordered_factory):
    matrix = ordered_factory(600, [0.6], [-0.5, 0.5], seed=2)
    matrix.y = np.where(matrix.y == 3, 4, matrix.y)
    fit = fit_ordered_probit(matrix)
    assert list(fit.categories) == [1, 2, 4]
    assert len(fit.cutpoints) == 2


def test_constant_or_collinear_columns_are_rejected(ordered_factory):
    matrix = ordered_factory(200, [0.5, 0.2], [0.0], seed=3)
    constant = DesignMatrix(y=matrix.y, X=np.column_stack([matrix.X, np.ones(matrix.n)]),
                            names=["x0", "x1", "flat"], penalized=np.zeros(3, dtype=bool),
                            cluster_id=matrix.cluster_id)
    with pytest.raises(ContractError, match="flat"):
        fit_ordered_probit(constant)
    collinear = DesignMatrix(y=matrix.y, X=np.column_stack([matrix.X, matrix.X[:, 0] - 2 * matrix.X[:, 1]]),
                             names=["x0", "x1", "combo"], penalized=np.zeros(3, dtype=bool),
                             cluster_id=matrix.cluster_id)
    with pytest.raises(ContractError, match="combo"):
        fit_ordered_probit(collinear)


def test_information_criteria():
    criteria = info_criteria(-100.0, 5, 50)
    assert criteria["aic"] == pytest.approx(210.0)
    assert criteria["bic"] == pytest.approx(219.56, abs=0.01)
    with pytest.raises(ContractError):
        info_criteria(-1.0, 1, 0)


def test_intercept_only_binary_matches_the_sample_share():
    fit = fit_binary_probit(bare_matrix([1] * 17 + [0] * 83))
    assert fit.names == [INTERCEPT]
    assert fit.intercept == pytest.approx(ndtri(0.17), abs=1e-6)
    assert fit.intercept == pytest.approx(-0.954, abs=1e-3)


def test_two_category_ordered_probit_is_binary_probit(binary_factory):
    binary = binary_factory(800, 0.2, [0.5, -0.4], seed=3)
    ordered = DesignMatrix(y=binary.y + 1, X=binary.X, names=binary.names, penalized=binary.penalized,
                           cluster_id=binary.cluster_id)
    fit_b = fit_binary_probit(binary)
    fit_o = fit_ordered_probit(ordered)
    assert fit_b.converged and fit_o.converged
    assert fit_o.loglik == pytest.approx(fit_b.loglik, abs=1e-6)
    assert_allclose(fit_o.beta, fit_b.beta[1:], atol=1e-5)
    assert fit_o.cutpoints[0] == pytest.approx(-fit_b.intercept, abs=1e-5)


def test_flipping_labels_negates_coefficients(binary_factory):
    matrix = binary_factory(600, -0.3, [0.7], seed=5)
    flipped = DesignMatrix(y=1 - matrix.y, X=matrix.X, names=matrix.names, penalized=matrix.penalized,
                           cluster_id=matrix.cluster_id, outcome="DEL")
    fit, fit_flipped = fit_binary_probit(matrix), fit_binary_probit(flipped)
    assert_allclose(fit_flipped.beta, -fit.beta, atol=1e-6)
    assert fit_flipped.loglik == pytest.approx(fit.loglik, abs=1e-8)
    assert_allclose(fit_flipped.se, fit.se, rtol=1e-5)


def test_perfect_separation_is_not_converged():
    x = np.concatenate([np.linspace(-2.0, -0.5, 20), np.linspace(0.5, 2.0, 20)])
    fit = fit_binary_probit(bare_matrix((x > 0).astype(int), x[:, None]))
    assert not fit.converged
    assert fit.vcov is None
    assert np.all(np.isnan(fit.se))


def test_binary_outcome_must_be_zero_one():
    with pytest.raises(ContractError):
        fit_binary_probit(bare_matrix([0, 1, 2, 1]))
    with pytest.raises(ContractError):
        fit_binary_probit(bare_matrix([1, 1, 1, 1]))


def test_sandwich_with_identity_information():
    scores = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
    vcov, n_clusters = sandwich(np.eye(2), scores, np.array(["a", "b", "c"]))
    assert n_clusters == 3
    assert_allclose(vcov, scores.T @ scores * 1.5)
    pooled, n_pooled = sandwich(np.eye(2), scores, np.array(["a", "a", "b"]))
    summed = np.array([[1.0, 2.0], [1.0, 1.0]])
    assert n_pooled == 2
    assert_allclose(pooled, summed.T @ summed * 2.0)


def test_singular_information_is_a_contract_error():
    with pytest.raises(ContractError, match="singular"):
        sandwich(np.zeros((2, 2)), np.ones((3, 2)), np.array(["a", "b", "c"]))


def test_unclustered_variance_treats_rows_as_clusters(binary_factory):
    matrix = binary_factory(500, 0.1, [0.4], seed=9)
    fit = fit_binary_probit(matrix)
    vcov, n_clusters = cluster_sandwich_vcov(fit, matrix, clustered=False)
    assert n_clusters == matrix.n
    assert vcov.shape == (2, 2)
    assert np.all(np.diag(vcov) > 0)


def test_coefficient_table_columns(binary_factory):
    fit = fit_binary_probit(binary_factory(500, 0.1, [1.0, 0.0], seed=4))
    table = coefficient_table(fit)
    assert list(table.index) == [INTERCEPT, "x0", "x1"]
    assert list(table.columns) == ["coef", "se", "z", "p", "stars"]
    assert table.loc["x0", "stars"] == "***"


def test_zero_random_intercept_equals_pooled_probit(binary_factory):
    matrix = binary_factory(200, 0.0, [0.5], seed=6, n_clusters=50, sigma_u=0.5)
    pooled = fit_binary_probit(matrix)
    assert re_probit_loglik(pooled.beta, 0.0, matrix) == pytest.approx(pooled.loglik, abs=1e-8)


def test_quadrature_refinement_is_stable(binary_factory):
    matrix = binary_factory(200, 0.0, [0.5], seed=6, n_clusters=50, sigma_u=0.5)
    beta = np.array([0.05, 0.45])
    coarse = re_probit_loglik(beta, 0.5, matrix, quad_nodes=12)
    fine = re_probit_loglik(beta, 0.5, matrix, quad_nodes=32)
    assert coarse == pytest.approx(fine, abs=1e-5)
    with pytest.raises(ContractError):
        re_probit_loglik(beta, -0.1, matrix)


def test_random_intercept_fit_finds_group_variation(binary_factory):
    matrix = binary_factory(3000, -0.5, [0.6, -0.3], seed=12, n_clusters=150, sigma_u=0.8)
    fit = fit_random_intercept_probit(matrix)
    assert fit.converged
    assert fit.sigma_u == pytest.approx(0.8, abs=0.3)
    assert fit.n_groups == 150
    assert fit.quad_nodes == 12
    assert fit.k == 4
    assert_allclose(fit.beta[1:], [0.6, -0.3], atol=0.15)
    pooled = fit_binary_probit(matrix)
    assert fit.loglik > pooled.loglik


def test_random_intercept_needs_enough_nodes(binary_factory):
    with pytest.raises(ContractError):
        fit_random_intercept_probit(binary_factory(100, 0.0, [0.5]), quad_nodes=3)


def test_cutpoint_jacobian_matches_finite_differences():
    theta_cut = theta_from_cutpoints([-0.9, -0.2, 0.6, 1.5])
    numeric = np.column_stack([
        (cutpoints_from_theta(theta_cut + step) - cutpoints_from_theta(theta_cut - step)) / 2e-6
        for step in 1e-6 * np.eye(4)
    ])
    assert_allclose(cutpoint_jacobian(theta_cut), numeric, rtol=1e-7, atol=1e-9)


def test_cutpoint_standard_errors_use_the_delta_method():
    vcov = np.diag([0.25, 0.01, 0.04, 0.09])
    fit = OrderedFit(beta=np.array([0.2]), cutpoints=np.array([-1.0, 0.0, 2.0]), names=["x0"], loglik=-10.0,
                     vcov=vcov, converged=True, n=50, k=4, aic=28.0, bic=35.0, categories=np.arange(1, 5))
    # increments exp(0)=1 and exp(ln 2)=2
    assert_allclose(fit.cutpoint_se, np.sqrt([0.01, 0.05, 0.41]))
    assert_allclose(fit.se, [0.5])
    fit.vcov = None
    assert np.all(np.isnan(fit.cutpoint_se))
