# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Ordered, binary and random-intercept probit with clustered sandwich variances
"""
Probit-family maximum likelihood.

Ordered probit cutpoints are optimized in log-increment form,
kappa_m = kappa_1 + sum_{j<=m} exp(a_j), so monotonicity never needs a
constraint. All three likelihoods have analytic gradients. The ordered and
binary models also have analytic Hessians. The random-intercept Hessian is
a central difference of its analytic gradient.

Every fit runs scipy BFGS first and then a Newton polish with step halving.
A fit is converged when the gradient max-norm is below the tolerance. Fits
report their status and never raise for non-convergence.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg, sparse
from scipy.optimize import minimize
from scipy.special import log_ndtr, logsumexp, ndtr, ndtri, roots_hermite
from scipy.stats import norm

from satisfaction_app.errors import ContractError
from satisfaction_app.features.design import DesignMatrix
from satisfaction_app.utils.formatting import format_stars
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

PROBABILITY_FLOOR = 1e-300
INTERCEPT = "const"
SIGMA_COLLAPSE = 1e-4


@dataclass(frozen=True)
class ProbitOptions:
    max_iter: int = 1000
    tol: float = 1e-6
    newton_steps: int = 100
    cluster: bool = True


@dataclass
class OrderedFit:
    beta: np.ndarray
    cutpoints: np.ndarray
    names: List[str]
    loglik: float
    vcov: Optional[np.ndarray]
    converged: bool
    n: int
    k: int
    aic: float
    bic: float
    categories: np.ndarray
    n_clusters: int = 0
    iterations: int = 0
    gradient_norm: float = np.nan
    loglik_history: List[float] = field(default_factory=list)
    message: str = ""

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.beta, theta_from_cutpoints(self.cutpoints)])

    @property
    def se(self) -> np.ndarray:
        if self.vcov is None:
            return np.full(len(self.beta), np.nan)
        return np.sqrt(np.clip(np.diag(self.vcov)[: len(self.beta)], 0.0, None))

    @property
    def cutpoint_se(self) -> np.ndarray:
        """Delta-method standard errors of the cutpoints themselves."""
        if self.vcov is None:
            return np.full(len(self.cutpoints), np.nan)
        p = len(self.beta)
        jac = cutpoint_jacobian(theta_from_cutpoints(self.cutpoints))
        vcov = jac @ self.vcov[p:, p:] @ jac.T
        return np.sqrt(np.clip(np.diag(vcov), 0.0, None))

    def coefficient(self, name: str) -> float:
        return float(self.beta[self.names.index(name)])


@dataclass
class BinaryFit:
    beta: np.ndarray
    names: List[str]
    loglik: float
    vcov: Optional[np.ndarray]
    converged: bool
    n: int
    k: int
    aic: float
    bic: float
    sigma_u: Optional[float] = None
    group_label: Optional[str] = None
    groups: Optional[np.ndarray] = None
    n_groups: int = 0
    quad_nodes: int = 0
    n_clusters: int = 0
    iterations: int = 0
    gradient_norm: float = np.nan
    loglik_history: List[float] = field(default_factory=list)
    message: str = ""

    @property
    def se(self) -> np.ndarray:
        if self.vcov is None:
            return np.full(len(self.beta), np.nan)
        return np.sqrt(np.clip(np.diag(self.vcov)[: len(self.beta)], 0.0, None))

    @property
    def intercept(self) -> float:
        return float(self.beta[self.names.index(INTERCEPT)])

    def coefficient(self, name: str) -> float:
        return float(self.beta[self.names.index(name)])


ModelFit = Union[OrderedFit, BinaryFit]


# ---------------------------------------------------------------------- helpers

def info_criteria(loglik: float, k: int, n: int) -> Dict[str, float]:
    if n < 1:
        raise ContractError(f"information criteria need n >= 1, got {n}")
    return {"aic": 2.0 * k - 2.0 * loglik, "bic": k * np.log(n) - 2.0 * loglik}


def theta_from_cutpoints(cutpoints: Sequence[float]) -> np.ndarray:
    cutpoints = np.asarray(cutpoints, dtype=float)
    gaps = np.diff(cutpoints)
    if np.any(gaps <= 0) or not np.all(np.isfinite(cutpoints)):
        raise ContractError(f"cutpoints must be finite and strictly increasing, got {cutpoints}")
    return np.concatenate([cutpoints[:1], np.log(gaps)])


def cutpoints_from_theta(theta_cut: Sequence[float]) -> np.ndarray:
    theta_cut = np.asarray(theta_cut, dtype=float)
    return theta_cut[0] + np.concatenate([[0.0], np.cumsum(np.exp(theta_cut[1:]))])


def cutpoint_jacobian(theta_cut: Sequence[float]) -> np.ndarray:
    """d cutpoints / d (kappa_1, log increments)."""
    theta_cut = np.asarray(theta_cut, dtype=float)
    m = len(theta_cut)
    jac = np.zeros((m, m))
    jac[:, 0] = 1.0
    for j in range(1, m):
        jac[j:, j] = np.exp(theta_cut[j])
    return jac


def collinear_columns(X: np.ndarray, names: Sequence[str], include_constant: bool = False,
                      tol: float = 1e-8) -> List[str]:
    """Columns that lie in the span of the columns before them (and of a constant if asked)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    basis = np.empty((n, X.shape[1] + 1))
    size = 0
    if include_constant and n:
        basis[:, 0] = 1.0 / np.sqrt(n)
        size = 1
    found: List[str] = []
    for j, name in enumerate(names):
        column = X[:, j]
        scale = np.linalg.norm(column)
        if scale == 0:
            found.append(name)
            continue
        residual = column.copy()
        # two Gram-Schmidt passes keep the basis orthogonal to working precision
        for _ in range(2):
            residual -= basis[:, :size] @ (basis[:, :size].T @ residual)
        norm_r = np.linalg.norm(residual)
        if norm_r <= tol * scale:
            found.append(name)
        else:
            basis[:, size] = residual / norm_r
            size += 1
    return found


def check_design(X: np.ndarray, names: Sequence[str], absorbs_constant: bool) -> None:
    """Raise on constant or collinear columns, naming them."""
    if X.shape[1] == 0:
        return
    constant = [name for name, col in zip(names, X.T) if np.ptp(col) == 0]
    if constant:
        raise ContractError(f"constant columns are not identified: {', '.join(constant)}")
    collinear = collinear_columns(X, names, include_constant=absorbs_constant)
    if collinear:
        raise ContractError(f"design is rank-deficient; collinear columns: {', '.join(collinear)}")


def sandwich(information: np.ndarray, scores: np.ndarray, cluster_id: np.ndarray) -> Tuple[np.ndarray, int]:
    """H^-1 (sum_g s_g s_g') H^-1 with the G/(G-1) small-sample factor."""
    eigenvalues = linalg.eigvalsh(information)
    top = np.max(np.abs(eigenvalues)) if len(eigenvalues) else 0.0
    if len(eigenvalues) and (eigenvalues.min() <= 1e-12 * max(top, 1.0)):
        raise ContractError(
            f"information matrix is singular or indefinite: smallest eigenvalue {eigenvalues.min():.3e}, "
            f"largest {eigenvalues.max():.3e}"
        )
    codes, cluster_index = np.unique(np.asarray(cluster_id).astype(str), return_inverse=True)
    n_clusters = len(codes)
    summed = np.zeros((n_clusters, scores.shape[1]))
    np.add.at(summed, cluster_index, scores)
    meat = summed.T @ summed
    bread_meat = linalg.solve(information, meat, assume_a="sym")
    vcov = linalg.solve(information, bread_meat.T, assume_a="sym").T
    if n_clusters > 1:
        vcov *= n_clusters / (n_clusters - 1.0)
    return 0.5 * (vcov + vcov.T), n_clusters


def _maximize(objective: Callable[[np.ndarray], Tuple[float, np.ndarray]],
              hessian: Callable[[np.ndarray], np.ndarray], theta0: np.ndarray,
              options: ProbitOptions) -> Tuple[np.ndarray, float, np.ndarray, int, List[float], str]:
    history: List[float] = []

    def negative(theta: np.ndarray) -> Tuple[float, np.ndarray]:
        ll, grad = objective(theta)
        return -ll, -grad

    def record(xk: np.ndarray) -> None:
        history.append(objective(xk)[0])

    result = minimize(negative, theta0, jac=True, method="BFGS", callback=record,
                      options={"maxiter": options.max_iter, "gtol": options.tol})
    theta = result.x
    ll, grad = objective(theta)
    iterations = int(result.nit)
    message = str(result.message)

    for _ in range(options.newton_steps):
        if np.max(np.abs(grad)) < options.tol:
            break
        try:
            step = -linalg.solve(hessian(theta), grad, assume_a="sym")
        except (linalg.LinAlgError, ValueError):
            message = "Newton polish stopped: singular Hessian"
            break
        if not np.all(np.isfinite(step)) or grad @ step <= 0:
            message = "Newton polish stopped: Hessian not negative definite"
            break
        t = 1.0
        while t > 1e-10:
            candidate = theta + t * step
            ll_c, grad_c = objective(candidate)
            if np.isfinite(ll_c) and ll_c >= ll:
                break
            t *= 0.5
        else:
            message = "Newton polish stopped: no ascent along the Newton direction"
            break
        theta, ll, grad = candidate, ll_c, grad_c
        history.append(ll)
        iterations += 1
    return theta, ll, grad, iterations, history, message


# ---------------------------------------------------------------------- ordered probit

def _category_codes(y: np.ndarray, n_categories: int) -> np.ndarray:
    y = np.asarray(y)
    if np.any((y < 1) | (y > n_categories)) or np.any(y != np.round(y)):
        raise ContractError(f"outcomes must be integers in 1..{n_categories}")
    return y.astype(np.int64)


def _ordered_terms(theta: np.ndarray, X: np.ndarray, y: np.ndarray, n_categories: int,
                   want_hessian: bool = False):
    """Log-likelihood, per-row scores in theta space and optionally the Hessian."""
    p = X.shape[1]
    beta, theta_cut = theta[:p], theta[p:]
    kappa = cutpoints_from_theta(theta_cut)
    m = n_categories - 1
    xb = X @ beta

    has_upper = y <= m
    has_lower = y >= 2
    k_upper = np.where(has_upper, kappa[np.minimum(y, m) - 1], np.inf)
    k_lower = np.where(has_lower, kappa[np.maximum(y, 2) - 2], -np.inf)
    u = k_upper - xb
    l = k_lower - xb
    # survival form keeps precision in the upper tail
    prob = np.where(l > 0, ndtr(-l) - ndtr(-u), ndtr(u) - ndtr(l))
    prob = np.maximum(prob, PROBABILITY_FLOOR)
    loglik = float(np.sum(np.log(prob)))

    u_f = np.where(has_upper, u, 0.0)
    l_f = np.where(has_lower, l, 0.0)
    A = np.where(has_upper, norm.pdf(u_f), 0.0)
    B = np.where(has_lower, norm.pdf(l_f), 0.0)

    rows = np.arange(len(y))
    U = np.zeros((len(y), m))
    L = np.zeros((len(y), m))
    U[rows[has_upper], y[has_upper] - 1] = 1.0
    L[rows[has_lower], y[has_lower] - 2] = 1.0

    score_kappa = U * (A / prob)[:, None] - L * (B / prob)[:, None]
    score_beta = X * ((B - A) / prob)[:, None]
    jac = cutpoint_jacobian(theta_cut)
    increments = np.exp(theta_cut[1:])
    scores = np.hstack([score_beta, score_kappa @ jac])
    if not want_hessian:
        return loglik, scores

    h_uu = (-u_f * A) / prob - (A / prob) ** 2
    h_ll = (l_f * B) / prob - (B / prob) ** 2
    h_ul = (A * B) / prob ** 2
    h_bb = X.T @ (X * (h_uu + 2.0 * h_ul + h_ll)[:, None])
    h_bk = -X.T @ (U * (h_uu + h_ul)[:, None] + L * (h_ul + h_ll)[:, None])
    h_kk = (U.T @ (U * h_uu[:, None]) + L.T @ (L * h_ll[:, None])
            + U.T @ (L * h_ul[:, None]) + L.T @ (U * h_ul[:, None]))

    h_theta_kk = jac.T @ h_kk @ jac
    g_kappa = score_kappa.sum(axis=0)
    for j in range(1, m):
        h_theta_kk[j, j] += increments[j - 1] * g_kappa[j:].sum()
    hessian = np.block([[h_bb, h_bk @ jac], [(h_bk @ jac).T, h_theta_kk]])
    return loglik, scores, hessian


def ordered_loglik_grad(beta: Sequence[float], cutpoints: Sequence[float],
                        matrix: DesignMatrix) -> Tuple[float, np.ndarray]:
    """Log-likelihood and its gradient over (beta, kappa_1, log cutpoint increments)."""
    theta = np.concatenate([np.asarray(beta, dtype=float), theta_from_cutpoints(cutpoints)])
    n_categories = len(cutpoints) + 1
    y = _category_codes(matrix.y, n_categories)
    loglik, scores = _ordered_terms(theta, matrix.X, y, n_categories)
    return loglik, scores.sum(axis=0)


def ordered_category_probs(X: np.ndarray, beta: Sequence[float], cutpoints: Sequence[float]) -> np.ndarray:
    """Per-row category probabilities, shape (n, number of categories)."""
    xb = np.asarray(X, dtype=float) @ np.asarray(beta, dtype=float)
    edges = np.concatenate([[-np.inf], np.asarray(cutpoints, dtype=float), [np.inf]])
    cdf = ndtr(edges[None, :] - xb[:, None])
    return np.diff(cdf, axis=1)


def _dense_categories(y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    levels = np.unique(y)
    expected = np.arange(levels.min(), levels.max() + 1)
    if len(levels) != len(expected) or levels.min() != 1:
        missing = sorted(set(range(1, int(levels.max()) + 1)) - set(levels.tolist()))
        logger.warning(f"outcome categories {missing} are unobserved; merged with the adjacent lower category")
    codes = np.searchsorted(levels, y) + 1
    return codes.astype(np.int64), levels


def fit_ordered_probit(matrix: DesignMatrix, options: Optional[ProbitOptions] = None) -> OrderedFit:
    """Ordered probit MLE from beta = 0 and quantile-matched cutpoints."""
    options = options or ProbitOptions()
    X = matrix.X
    check_design(X, matrix.names, absorbs_constant=True)
    codes, levels = _dense_categories(np.asarray(matrix.y))
    n_categories = len(levels)
    if n_categories < 2:
        raise ContractError("ordered probit needs at least two observed categories")

    shares = np.bincount(codes, minlength=n_categories + 1)[1:] / len(codes)
    start_cut = ndtri(np.cumsum(shares)[:-1])
    theta0 = np.concatenate([np.zeros(matrix.p), theta_from_cutpoints(start_cut)])

    theta, loglik, grad, iterations, history, message = _maximize(
        lambda t: _objective_ordered(t, X, codes, n_categories),
        lambda t: _ordered_terms(t, X, codes, n_categories, want_hessian=True)[2],
        theta0, options,
    )
    gradient_norm = float(np.max(np.abs(grad))) if len(grad) else 0.0
    converged = gradient_norm < options.tol
    k = len(theta)
    criteria = info_criteria(loglik, k, matrix.n)
    fit = OrderedFit(
        beta=theta[: matrix.p],
        cutpoints=cutpoints_from_theta(theta[matrix.p:]),
        names=list(matrix.names),
        loglik=loglik,
        vcov=None,
        converged=converged,
        n=matrix.n,
        k=k,
        aic=criteria["aic"],
        bic=criteria["bic"],
        categories=levels,
        iterations=iterations,
        gradient_norm=gradient_norm,
        loglik_history=history,
        message="converged" if converged else f"not converged (max |gradient| {gradient_norm:.2e}); {message}",
    )
    if converged:
        fit.vcov, fit.n_clusters = cluster_sandwich_vcov(fit, matrix, clustered=options.cluster)
    else:
        logger.warning(f"ordered probit did not converge: {fit.message}")
    logger.info(f"ordered probit: loglik {loglik:.3f}, {iterations} iterations, converged={converged}")
    return fit


def _objective_ordered(theta: np.ndarray, X: np.ndarray, y: np.ndarray, n_categories: int):
    loglik, scores = _ordered_terms(theta, X, y, n_categories)
    return loglik, scores.sum(axis=0)


# ---------------------------------------------------------------------- binary probit

def _with_intercept(matrix: DesignMatrix) -> Tuple[np.ndarray, List[str]]:
    if INTERCEPT in matrix.names:
        raise ContractError(f"column name '{INTERCEPT}' is reserved for the intercept")
    return np.hstack([np.ones((matrix.n, 1)), matrix.X]), [INTERCEPT] + list(matrix.names)


def _binary_outcome(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y)
    if not np.all(np.isin(y, (0, 1))):
        raise ContractError("binary probit outcome must be 0/1")
    if y.min() == y.max():
        raise ContractError("binary probit needs both outcome classes")
    return y.astype(float)


def _binary_terms(beta: np.ndarray, X: np.ndarray, y: np.ndarray, want_hessian: bool = False):
    q = 2.0 * y - 1.0
    s = q * (X @ beta)
    log_cdf = log_ndtr(s)
    mills = np.exp(norm.logpdf(s) - log_cdf)
    scores = X * (q * mills)[:, None]
    if not want_hessian:
        return float(log_cdf.sum()), scores
    hessian = -X.T @ (X * (mills * (mills + s))[:, None])
    return float(log_cdf.sum()), scores, hessian


def binary_loglik_grad(beta: Sequence[float], matrix: DesignMatrix) -> Tuple[float, np.ndarray]:
    """Probit log-likelihood and its gradient; beta includes the intercept first."""
    y = _binary_outcome(matrix.y)
    X, _ = _with_intercept(matrix)
    return _sum_scores(_binary_terms(np.asarray(beta, dtype=float), X, y))


def fit_binary_probit(matrix: DesignMatrix, options: Optional[ProbitOptions] = None) -> BinaryFit:
    """Probit MLE with an explicit intercept named 'const'."""
    options = options or ProbitOptions()
    y = _binary_outcome(matrix.y)
    check_design(matrix.X, matrix.names, absorbs_constant=True)
    X, names = _with_intercept(matrix)
    theta0 = np.zeros(X.shape[1])
    theta0[0] = ndtri(y.mean())

    theta, loglik, grad, iterations, history, message = _maximize(
        lambda b: _sum_scores(_binary_terms(b, X, y)),
        lambda b: _binary_terms(b, X, y, want_hessian=True)[2],
        theta0, options,
    )
    gradient_norm = float(np.max(np.abs(grad)))
    converged = gradient_norm < options.tol
    margin = (2.0 * y - 1.0) * (X @ theta)
    if np.all(margin > 5.0):
        converged = False
        message = "perfect separation: every row is predicted with certainty"
    criteria = info_criteria(loglik, len(theta), matrix.n)
    fit = BinaryFit(
        beta=theta,
        names=names,
        loglik=loglik,
        vcov=None,
        converged=converged,
        n=matrix.n,
        k=len(theta),
        aic=criteria["aic"],
        bic=criteria["bic"],
        iterations=iterations,
        gradient_norm=gradient_norm,
        loglik_history=history,
        message="converged" if converged else f"not converged (max |gradient| {gradient_norm:.2e}); {message}",
    )
    if converged:
        fit.vcov, fit.n_clusters = cluster_sandwich_vcov(fit, matrix, clustered=options.cluster)
    else:
        logger.warning(f"binary probit did not converge: {fit.message}")
    return fit


def _sum_scores(terms):
    return terms[0], terms[1].sum(axis=0)


# ---------------------------------------------------------------------- random-intercept probit

def _group_indicator(groups: np.ndarray) -> Tuple[sparse.csr_matrix, np.ndarray]:
    labels, index = np.unique(np.asarray(groups).astype(str), return_inverse=True)
    indicator = sparse.csr_matrix((np.ones(len(index)), (index, np.arange(len(index)))),
                                  shape=(len(labels), len(index)))
    return indicator, index


def _re_terms(theta: np.ndarray, X: np.ndarray, y: np.ndarray, indicator: sparse.csr_matrix,
              index: np.ndarray, nodes: np.ndarray, weights: np.ndarray, log_sigma: bool = True):
    """Log-likelihood and per-row scores over (beta, ln sigma)."""
    beta = theta[:-1]
    sigma = np.exp(theta[-1]) if log_sigma else theta[-1]
    q = 2.0 * y - 1.0
    xb = X @ beta
    shift = np.sqrt(2.0) * sigma * nodes
    s = q[:, None] * (xb[:, None] + shift[None, :])
    log_cdf = log_ndtr(s)
    group_logs = np.asarray(indicator @ log_cdf)
    log_terms = np.log(weights)[None, :] - 0.5 * np.log(np.pi) + group_logs
    log_lik_g = logsumexp(log_terms, axis=1)
    posterior = np.exp(log_terms - log_lik_g[:, None])

    mills = np.exp(norm.logpdf(s) - log_cdf)
    row_post = posterior[index]
    row_weight = q * np.sum(row_post * mills, axis=1)
    sigma_weight = q * np.sqrt(2.0) * sigma * np.sum(row_post * mills * nodes[None, :], axis=1)
    scores = np.hstack([X * row_weight[:, None], sigma_weight[:, None]])
    return float(log_lik_g.sum()), scores


def re_probit_loglik(beta: Sequence[float], sigma_u: float, matrix: DesignMatrix,
                     group: Optional[Sequence[str]] = None, quad_nodes: int = 12) -> float:
    """Random-intercept log-likelihood at (beta, sigma_u); beta includes the intercept first."""
    if sigma_u < 0:
        raise ContractError("sigma_u must be non-negative")
    y = _binary_outcome(matrix.y)
    X, _ = _with_intercept(matrix)
    indicator, index = _group_indicator(matrix.cluster_id if group is None else group)
    nodes, weights = roots_hermite(quad_nodes)
    theta = np.concatenate([np.asarray(beta, dtype=float), [sigma_u]])
    return _re_terms(theta, X, y, indicator, index, nodes, weights, log_sigma=False)[0]


def re_probit_loglik_grad(beta: Sequence[float], log_sigma_u: float, matrix: DesignMatrix,
                          group: Optional[Sequence[str]] = None,
                          quad_nodes: int = 12) -> Tuple[float, np.ndarray]:
    """Random-intercept log-likelihood and its gradient over (beta, ln sigma_u)."""
    y = _binary_outcome(matrix.y)
    X, _ = _with_intercept(matrix)
    indicator, index = _group_indicator(matrix.cluster_id if group is None else group)
    nodes, weights = roots_hermite(quad_nodes)
    theta = np.concatenate([np.asarray(beta, dtype=float), [log_sigma_u]])
    return _sum_scores(_re_terms(theta, X, y, indicator, index, nodes, weights))


def _numeric_hessian(gradient: Callable[[np.ndarray], np.ndarray], theta: np.ndarray) -> np.ndarray:
    k = len(theta)
    hessian = np.empty((k, k))
    for j in range(k):
        h = 1e-5 * max(1.0, abs(theta[j]))
        up, down = theta.copy(), theta.copy()
        up[j] += h
        down[j] -= h
        hessian[:, j] = (gradient(up) - gradient(down)) / (2.0 * h)
    return 0.5 * (hessian + hessian.T)


def fit_random_intercept_probit(matrix: DesignMatrix, group: Optional[Sequence[str]] = None,
                                quad_nodes: int = 12, options: Optional[ProbitOptions] = None,
                                group_label: str = "terminal x date") -> BinaryFit:
    """Probit with a normal random intercept per group, integrated by Gauss-Hermite quadrature."""
    options = options or ProbitOptions()
    if quad_nodes < 4:
        raise ContractError(f"quad_nodes must be at least 4, got {quad_nodes}")
    groups = np.asarray(matrix.cluster_id if group is None else group).astype(str)
    if len(groups) != matrix.n or np.any(groups == ""):
        raise ContractError("every row needs a non-empty group label")
    pooled = fit_binary_probit(matrix, options)
    y = _binary_outcome(matrix.y)
    X, names = _with_intercept(matrix)
    indicator, index = _group_indicator(groups)
    nodes, weights = roots_hermite(quad_nodes)

    def objective(theta: np.ndarray):
        return _sum_scores(_re_terms(theta, X, y, indicator, index, nodes, weights))

    def gradient(theta: np.ndarray) -> np.ndarray:
        return objective(theta)[1]

    theta0 = np.concatenate([pooled.beta, [np.log(0.3)]])
    theta, loglik, grad, iterations, history, message = _maximize(
        objective, lambda t: _numeric_hessian(gradient, t), theta0, options)
    sigma = float(np.exp(theta[-1]))
    n_groups = indicator.shape[0]

    if theta[-1] < -10.0 or sigma < SIGMA_COLLAPSE:
        logger.warning("random-intercept scale collapsed to 0; returning the pooled probit fit")
        pooled.sigma_u = 0.0
        pooled.group_label = group_label
        pooled.groups = groups
        pooled.n_groups = n_groups
        pooled.quad_nodes = quad_nodes
        pooled.message = f"{pooled.message}; random-intercept scale collapsed to 0"
        return pooled

    gradient_norm = float(np.max(np.abs(grad)))
    converged = gradient_norm < options.tol
    criteria = info_criteria(loglik, len(theta), matrix.n)
    fit = BinaryFit(
        beta=theta[:-1],
        names=names,
        loglik=loglik,
        vcov=None,
        converged=converged,
        n=matrix.n,
        k=len(theta),
        aic=criteria["aic"],
        bic=criteria["bic"],
        sigma_u=sigma,
        group_label=group_label,
        groups=groups,
        n_groups=n_groups,
        quad_nodes=quad_nodes,
        iterations=iterations,
        gradient_norm=gradient_norm,
        loglik_history=history,
        message="converged" if converged else f"not converged (max |gradient| {gradient_norm:.2e}); {message}",
    )
    if converged:
        fit.vcov, fit.n_clusters = cluster_sandwich_vcov(fit, matrix, clustered=options.cluster)
    else:
        logger.warning(f"random-intercept probit did not converge: {fit.message}")
    logger.info(f"random-intercept probit: sigma_u {sigma:.4f} over {n_groups} groups, loglik {loglik:.3f}")
    return fit


# ---------------------------------------------------------------------- variance and reports

def cluster_sandwich_vcov(fit: ModelFit, matrix: DesignMatrix, clustered: bool = True) -> Tuple[np.ndarray, int]:
    """Clustered sandwich over all fitted parameters, clustered on matrix.cluster_id.

    With clustered=False each row is its own cluster.
    """
    if isinstance(fit, OrderedFit):
        codes = np.searchsorted(fit.categories, np.asarray(matrix.y)) + 1
        _, scores, hessian = _ordered_terms(fit.theta, matrix.X, codes, len(fit.categories), want_hessian=True)
    elif fit.sigma_u:
        X, _ = _with_intercept(matrix)
        y = _binary_outcome(matrix.y)
        indicator, index = _group_indicator(fit.groups)
        nodes, weights = roots_hermite(fit.quad_nodes)
        theta = np.concatenate([fit.beta, [np.log(fit.sigma_u)]])

        def row_scores(t: np.ndarray) -> np.ndarray:
            return _re_terms(t, X, y, indicator, index, nodes, weights)[1]

        scores = row_scores(theta)
        hessian = _numeric_hessian(lambda t: row_scores(t).sum(axis=0), theta)
    else:
        X, _ = _with_intercept(matrix)
        _, scores, hessian = _binary_terms(fit.beta, X, _binary_outcome(matrix.y), want_hessian=True)
    clusters = matrix.cluster_id if clustered else np.arange(matrix.n)
    return sandwich(-hessian, scores, clusters)


def coefficient_table(fit: ModelFit) -> pd.DataFrame:
    """coef, se, z, p and significance stars per covariate."""
    se = fit.se
    with np.errstate(divide="ignore", invalid="ignore"):
        z = fit.beta / se
    p = 2.0 * norm.sf(np.abs(z))
    return pd.DataFrame({
        "coef": fit.beta,
        "se": se,
        "z": z,
        "p": p,
        "stars": [format_stars(value) for value in p],
    }, index=pd.Index(fit.names, name="variable"))
