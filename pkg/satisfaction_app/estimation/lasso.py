# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Weighted LASSO, cluster penalty loadings and post-double-selection
"""
Weighted LASSO with cluster-robust penalty loadings.

The solver minimizes

    (1/2n) ||y - X b||^2 + (lambda/n) sum_j psi_j |b_j|

over every column, with psi_j = 0 for unpenalized columns. Penalized columns
move by exact soft-threshold coordinate steps. The unpenalized block moves by
one least-squares step on the partial residual. Columns are rescaled to unit
mean square internally and coefficients are mapped back before returning.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg
from scipy.stats import norm

from satisfaction_app.errors import ContractError
from satisfaction_app.estimation.probit import collinear_columns
from satisfaction_app.features.design import DesignMatrix
from satisfaction_app.utils.formatting import format_float
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_C = 1.1
DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITER = 10_000
LASSO_DROP = "(lasso drop)"
# refined loadings never fall below this share of the first-pass loadings
LOADING_FLOOR = 0.05
# residual variance share under which a target counts as spanned by the controls
SPAN_TOLERANCE = 1e-8


@dataclass
class PenalizedProblem:
    y: np.ndarray
    X: np.ndarray
    penalized: np.ndarray
    loadings: np.ndarray
    lam: float
    cluster_id: Optional[np.ndarray] = None
    tolerance: float = DEFAULT_TOLERANCE
    max_iter: int = DEFAULT_MAX_ITER
    names: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.y), -1)
        self.penalized = np.asarray(self.penalized, dtype=bool)
        self.loadings = np.where(self.penalized, np.asarray(self.loadings, dtype=float), 0.0)
        p = self.X.shape[1]
        if len(self.penalized) != p or len(self.loadings) != p:
            raise ContractError("penalized flags and loadings need one entry per column")
        if np.any(self.loadings < 0) or not np.all(np.isfinite(self.loadings)):
            raise ContractError("penalty loadings must be finite and non-negative")
        if self.lam < 0 or not np.isfinite(self.lam):
            raise ContractError(f"lambda must be finite and non-negative, got {self.lam}")
        if self.tolerance <= 0 or self.max_iter < 1:
            raise ContractError("tolerance must be positive and max_iter at least 1")
        if not self.names:
            self.names = [f"x{j}" for j in range(p)]

    @property
    def n(self) -> int:
        return len(self.y)

    def objective(self, beta: np.ndarray) -> float:
        residual = self.y - self.X @ beta
        return float(residual @ residual / (2.0 * self.n) + self.lam / self.n * np.sum(self.loadings * np.abs(beta)))


@dataclass
class LassoFit:
    beta: np.ndarray
    names: List[str]
    active_set: List[str]
    lambda_used: float
    loadings: np.ndarray
    iterations: int
    kkt_violation: float
    converged: bool
    objective_history: List[float] = field(default_factory=list)

    @property
    def active_indices(self) -> List[int]:
        wanted = set(self.active_set)
        return [j for j, name in enumerate(self.names) if name in wanted]


def soft_threshold(value: float, threshold: float) -> float:
    return float(np.sign(value) * max(abs(value) - threshold, 0.0))


def plugin_lambda(n: int, p_penalized: int, c: float = DEFAULT_C, gamma: Optional[float] = None) -> float:
    """2 c sqrt(n) Phi^-1(1 - gamma/(2p)); gamma defaults to 0.1/ln(n)."""
    if n < 1 or p_penalized < 1:
        raise ContractError(f"plugin_lambda needs n >= 1 and p >= 1, got n={n}, p={p_penalized}")
    if gamma is None:
        if n < 2:
            raise ContractError("the default gamma 0.1/ln(n) needs n >= 2")
        gamma = 0.1 / np.log(n)
    tail = gamma / (2.0 * p_penalized)
    if tail >= 1.0 or tail <= 0.0:
        raise ContractError(f"gamma/(2p) must lie in (0, 1), got {tail}")
    return float(2.0 * c * np.sqrt(n) * norm.ppf(1.0 - tail))


def cluster_penalty_loadings(y: np.ndarray, X: np.ndarray, cluster_id: Sequence[str],
                             init_residuals: Optional[np.ndarray] = None,
                             names: Optional[Sequence[str]] = None) -> np.ndarray:
    """psi_j = sqrt((1/n) sum_g (sum_{i in g} x_ij e_i)^2).

    Without init_residuals the residuals are y minus its mean.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    residuals = y - y.mean() if init_residuals is None else np.asarray(init_residuals, dtype=float)
    codes, index = np.unique(np.asarray(cluster_id).astype(str), return_inverse=True)
    if len(codes) < 2:
        logger.warning("penalty loadings computed over a single cluster")
    sums = np.zeros((len(codes), X.shape[1]))
    np.add.at(sums, index, X * residuals[:, None])
    loadings = np.sqrt(np.sum(sums ** 2, axis=0) / n)
    names = list(names) if names is not None else [f"x{j}" for j in range(X.shape[1])]
    for j in np.flatnonzero(~np.any(X != 0, axis=0)):
        logger.warning(f"column '{names[j]}' is all zero; penalty loading set to 0")
        loadings[j] = 0.0
    return loadings


def _kkt_violation(problem: PenalizedProblem, beta: np.ndarray) -> float:
    gradient = problem.X.T @ (problem.y - problem.X @ beta) / problem.n
    bound = problem.lam / problem.n * problem.loadings
    active = beta != 0
    violation = np.where(
        active,
        np.abs(gradient - bound * np.sign(beta)),
        np.maximum(np.abs(gradient) - bound, 0.0),
    )
    violation = np.where(problem.penalized, violation, np.abs(gradient))
    # an all-zero column has zero gradient whatever its coefficient
    return float(violation.max()) if len(violation) else 0.0


def solve_lasso(problem: PenalizedProblem) -> LassoFit:
    """Cyclic coordinate descent with active-set cycling."""
    n, p = problem.X.shape
    scale = np.sqrt(np.mean(problem.X ** 2, axis=0))
    live = scale > 0
    scale = np.where(live, scale, 1.0)
    Xs = problem.X / scale
    threshold = problem.lam / n * problem.loadings / scale

    free = np.flatnonzero(~problem.penalized & live)
    shrunk = np.flatnonzero(problem.penalized & live)
    free_pinv = linalg.pinv(Xs[:, free]) if len(free) else None

    beta = np.zeros(p)
    residual = problem.y.copy()
    history = [problem.objective(beta)]

    def free_step() -> float:
        if free_pinv is None:
            return 0.0
        partial = residual + Xs[:, free] @ beta[free]
        new = free_pinv @ partial
        change = np.max(np.abs(new - beta[free]))
        residual[:] = partial - Xs[:, free] @ new
        beta[free] = new
        return float(change)

    def sweep(columns: np.ndarray) -> float:
        biggest = free_step()
        for j in columns:
            old = beta[j]
            rho = Xs[:, j] @ residual / n + old
            new = soft_threshold(rho, threshold[j])
            if new != old:
                residual[:] -= Xs[:, j] * (new - old)
                beta[j] = new
                biggest = max(biggest, abs(new - old))
        return biggest

    iterations = 0
    converged = False
    while iterations < problem.max_iter:
        change = sweep(shrunk)
        iterations += 1
        history.append(problem.objective(beta / scale))
        if change < problem.tolerance:
            converged = True
            break
        active = shrunk[beta[shrunk] != 0]
        while iterations < problem.max_iter:
            inner = sweep(active)
            iterations += 1
            if inner < problem.tolerance:
                break

    coefficients = beta / scale
    if not converged:
        logger.warning(f"LASSO stopped at max_iter={problem.max_iter} before converging")
    active_set = [problem.names[j] for j in shrunk if coefficients[j] != 0]
    return LassoFit(
        beta=coefficients,
        names=list(problem.names),
        active_set=active_set,
        lambda_used=problem.lam,
        loadings=problem.loadings.copy(),
        iterations=iterations,
        kkt_violation=_kkt_violation(problem, coefficients),
        converged=converged,
        objective_history=history,
    )


def fit_rigorous_lasso(y: np.ndarray, X: np.ndarray, penalized: np.ndarray, cluster_id: Sequence[str],
                       c: float = DEFAULT_C, gamma: Optional[float] = None,
                       names: Optional[Sequence[str]] = None, tolerance: float = DEFAULT_TOLERANCE,
                       max_iter: int = DEFAULT_MAX_ITER) -> LassoFit:
    """Plug-in lambda with one loadings refinement; the intercept is handled by centering.

    The refined loadings are floored at LOADING_FLOOR times the first-pass ones.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    penalized = np.asarray(penalized, dtype=bool)
    names = list(names) if names is not None else [f"x{j}" for j in range(X.shape[1])]
    yc = y - y.mean()
    Xc = X - X.mean(axis=0)
    n = len(y)
    n_penalized = int(penalized.sum())
    if n_penalized == 0:
        raise ContractError("rigorous LASSO needs at least one penalized column")
    lam = plugin_lambda(n, n_penalized, c, gamma) / 2.0

    free = ~penalized
    if free.any():
        coef, *_ = linalg.lstsq(Xc[:, free], yc)
        residuals = yc - Xc[:, free] @ coef
    else:
        residuals = yc
    loadings = np.zeros(X.shape[1])
    penalized_names = [nm for nm, pen in zip(names, penalized) if pen]
    loadings[penalized] = cluster_penalty_loadings(yc, Xc[:, penalized], cluster_id, residuals, penalized_names)
    first_pass = loadings[penalized].copy()

    preliminary = solve_lasso(PenalizedProblem(yc, Xc, penalized, loadings, lam, cluster_id,
                                               tolerance, max_iter, names))
    keep = free | (preliminary.beta != 0)
    if keep.any():
        coef, *_ = linalg.lstsq(Xc[:, keep], yc)
        residuals = yc - Xc[:, keep] @ coef
    else:
        residuals = yc
    refined = cluster_penalty_loadings(yc, Xc[:, penalized], cluster_id, residuals, penalized_names)
    floored = refined < LOADING_FLOOR * first_pass
    if floored.any():
        logger.warning(f"{int(floored.sum())} refined penalty loadings raised to the floor "
                       f"({LOADING_FLOOR:g} x first pass)")
    loadings[penalized] = np.maximum(refined, LOADING_FLOOR * first_pass)
    return solve_lasso(PenalizedProblem(yc, Xc, penalized, loadings, lam, cluster_id,
                                        tolerance, max_iter, names))


@dataclass
class SelectionResult:
    selected: List[str]
    focal_names: List[str]
    control_names: List[str]
    active_sets: Dict[str, List[str]]
    lambdas: Dict[str, float]
    loadings: Dict[str, np.ndarray]
    converged: Dict[str, bool]
    kkt: Dict[str, float]
    outcome: str = "y"
    excluded: Dict[str, List[str]] = field(default_factory=dict)

    @property
    def dropped(self) -> List[str]:
        chosen = set(self.selected)
        return [name for name in self.control_names if name not in chosen]

    def selection_audit_text(self) -> str:
        lines = [
            f"outcome: {self.outcome}",
            f"focal: {', '.join(self.focal_names) or '-'}",
            f"controls: {len(self.control_names)}",
        ]
        for target in [self.outcome] + self.focal_names:
            if target not in self.active_sets:
                continue
            lines.append(f"[{target}]")
            lines.append(f"  lambda: {format_float(self.lambdas[target])}")
            lines.append(f"  converged: {self.converged[target]}")
            lines.append(f"  kkt_violation: {self.kkt[target]:.3e}")
            lines.append(f"  active: {', '.join(self.active_sets[target]) or '-'}")
            if target in self.excluded:
                lines.append(f"  excluded: {', '.join(self.excluded[target])}")
            for name, value in zip(self.control_names, self.loadings[target]):
                lines.append(f"  loading.{name}: {format_float(value)}")
        lines.append(f"union: {', '.join(self.selected) or '-'}")
        lines.append(f"dropped: {', '.join(self.dropped) or '-'}")
        return "\n".join(lines) + "\n"


def residual_share(target: np.ndarray, controls: np.ndarray) -> float:
    """Share of the centered target's variance left after least squares on the centered controls."""
    tc = np.asarray(target, dtype=float) - np.mean(target)
    total = float(tc @ tc)
    if total == 0.0:
        return 0.0
    Xc = np.asarray(controls, dtype=float).reshape(len(tc), -1)
    if Xc.shape[1] == 0:
        return 1.0
    Xc = Xc - Xc.mean(axis=0)
    coef, *_ = linalg.lstsq(Xc, tc)
    residual = tc - Xc @ coef
    return float(residual @ residual) / total


def spanning_mask(target: np.ndarray, controls: np.ndarray,
                  control_groups: Optional[Sequence[str]] = None) -> np.ndarray:
    """Controls usable in a target's selection regression.

    A target in the span of the controls loses every group that spans it on its own;
    without groups, or if the rest still spans it, no control is usable.
    """
    usable = np.ones(controls.shape[1], dtype=bool)
    if residual_share(target, controls) > SPAN_TOLERANCE:
        return usable
    if control_groups is None:
        return ~usable
    groups = np.asarray(control_groups)
    for group in dict.fromkeys(control_groups):
        block = groups == group
        if residual_share(target, controls[:, block]) <= SPAN_TOLERANCE:
            usable &= ~block
    if usable.any() and residual_share(target, controls[:, usable]) <= SPAN_TOLERANCE:
        usable[:] = False
    return usable


def _select_one(target: np.ndarray, controls: np.ndarray, usable: np.ndarray, cluster_id: np.ndarray,
                names: List[str], c: float, gamma: Optional[float], tolerance: float,
                max_iter: int) -> LassoFit:
    if not usable.any():
        return LassoFit(beta=np.zeros(len(names)), names=list(names), active_set=[], lambda_used=0.0,
                        loadings=np.zeros(len(names)), iterations=0, kkt_violation=0.0, converged=True)
    columns = np.flatnonzero(usable)
    fit = fit_rigorous_lasso(target, controls[:, columns], np.ones(len(columns), dtype=bool), cluster_id,
                             c, gamma, [names[j] for j in columns], tolerance, max_iter)
    beta = np.zeros(len(names))
    loadings = np.zeros(len(names))
    beta[columns] = fit.beta
    loadings[columns] = fit.loadings
    return replace(fit, beta=beta, names=list(names), loadings=loadings)


def pds_select(y: np.ndarray, focal: np.ndarray, controls: np.ndarray, cluster_id: Sequence[str],
               focal_names: Sequence[str], control_names: Sequence[str], c: float = DEFAULT_C,
               gamma: Optional[float] = None, n_jobs: int = 1, outcome: str = "y",
               tolerance: float = DEFAULT_TOLERANCE, max_iter: int = DEFAULT_MAX_ITER,
               control_groups: Optional[Sequence[str]] = None) -> SelectionResult:
    """Union of the controls picked by the outcome regression and by each focal regression.

    A focal column lying in the span of the controls is regressed without the
    control groups that span it (see spanning_mask).
    """
    focal_names = list(focal_names)
    control_names = list(control_names)
    overlap = set(focal_names) & set(control_names)
    if overlap:
        raise ContractError(f"focal and control columns overlap: {sorted(overlap)}")
    controls = np.asarray(controls, dtype=float).reshape(len(y), -1)
    focal = np.asarray(focal, dtype=float).reshape(len(y), -1)
    cluster_id = np.asarray(cluster_id).astype(str)
    if controls.shape[1] == 0:
        return SelectionResult([], focal_names, [], {}, {}, {}, {}, {}, outcome)
    if control_groups is not None and len(control_groups) != len(control_names):
        raise ContractError("control_groups needs one entry per control column")

    targets = [(outcome, np.asarray(y, dtype=float))] + [(name, focal[:, j]) for j, name in enumerate(focal_names)]
    masks = [np.ones(len(control_names), dtype=bool)]
    excluded: Dict[str, List[str]] = {}
    for name, target in targets[1:]:
        usable = spanning_mask(target, controls, control_groups)
        masks.append(usable)
        if not usable.all():
            excluded[name] = [n for n, ok in zip(control_names, usable) if not ok]
            logger.warning(f"focal '{name}' lies in the span of the controls; its selection regression "
                           f"leaves out {len(excluded[name])} of {len(control_names)} controls")
    fits = Parallel(n_jobs=n_jobs)(
        delayed(_select_one)(target, controls, usable, cluster_id, control_names, c, gamma, tolerance, max_iter)
        for (_, target), usable in zip(targets, masks)
    )
    active_sets = {label: fit.active_set for (label, _), fit in zip(targets, fits)}
    chosen = set().union(*active_sets.values())
    selected = [name for name in control_names if name in chosen]
    result = SelectionResult(
        selected=selected,
        focal_names=focal_names,
        control_names=control_names,
        active_sets=active_sets,
        lambdas={label: fit.lambda_used for (label, _), fit in zip(targets, fits)},
        loadings={label: fit.loadings for (label, _), fit in zip(targets, fits)},
        converged={label: fit.converged for (label, _), fit in zip(targets, fits)},
        kkt={label: fit.kkt_violation for (label, _), fit in zip(targets, fits)},
        outcome=outcome,
        excluded=excluded,
    )
    logger.info(f"post-double selection kept {len(selected)} of {len(control_names)} controls")
    return result


def prune_collinear(matrix: DesignMatrix, protected: Sequence[str] = ()) -> DesignMatrix:
    """Drop penalized columns that lie in the span of earlier columns and the constant."""
    keep = set(protected)
    redundant = [name for name in collinear_columns(matrix.X, matrix.names, include_constant=True)
                 if name not in keep and matrix.penalized[matrix.index_of(name)]]
    for name in redundant:
        logger.warning(f"column '{name}' is collinear with earlier columns and was dropped")
    if not redundant:
        return matrix
    return matrix.drop_columns(redundant, note=f"collinear columns dropped: {', '.join(redundant)}")


def select_controls(matrix: DesignMatrix, c: float = DEFAULT_C, gamma: Optional[float] = None,
                    n_jobs: int = 1) -> Tuple[DesignMatrix, SelectionResult]:
    """Run PDS on a design matrix and keep the focal columns plus the selected controls."""
    focal = [matrix.index_of(name) for name in matrix.focal_names]
    controls = [matrix.index_of(name) for name in matrix.control_names]
    result = pds_select(
        matrix.y, matrix.X[:, focal], matrix.X[:, controls], matrix.cluster_id,
        matrix.focal_names, matrix.control_names, c=c, gamma=gamma, n_jobs=n_jobs, outcome=matrix.outcome,
        control_groups=[matrix.groups[j] for j in controls],
    )
    selected = matrix.keep_columns(matrix.focal_names + result.selected)
    if result.dropped:
        selected.notes.append(f"{LASSO_DROP}: {', '.join(result.dropped)}")
    return prune_collinear(selected, protected=matrix.focal_names), result
