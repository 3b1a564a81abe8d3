# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Predicted distributions, delay rating shift, duration curve and bias comparison
"""
Post-estimation effects for fitted satisfaction models.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from satisfaction_app.data.synthetic_data import SyntheticTruth
from satisfaction_app.errors import ContractError
from satisfaction_app.estimation import lasso
from satisfaction_app.estimation.probit import (
    OrderedFit,
    ProbitOptions,
    fit_ordered_probit,
    ordered_category_probs,
)
from satisfaction_app.features.design import DesignMatrix, FeatureSpec, assemble_design
from satisfaction_app.utils.formatting import format_float, format_percent
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_T_GRID = np.round(np.arange(0.0, 3.0 + 1e-9, 0.05), 10)
SEGMENTS = ("leisure", "business")


def _fit_columns(fit: OrderedFit, rows: DesignMatrix, overrides: Mapping[str, float]) -> np.ndarray:
    for name in overrides:
        if name not in rows.names and name not in fit.names:
            raise ContractError(f"override of unknown column '{name}'")
    X = np.empty((rows.n, len(fit.names)))
    for j, name in enumerate(fit.names):
        if name in overrides:
            X[:, j] = overrides[name]
        elif name in rows.names:
            X[:, j] = rows.column(name)
        else:
            raise ContractError(f"column '{name}' of the fit is missing from the rows")
    return X


def predict_probs(fit: OrderedFit, rows: DesignMatrix,
                  overrides: Optional[Mapping[str, float]] = None) -> np.ndarray:
    """Per-row category distribution, shape (n, categories), with columns overridden as asked."""
    X = _fit_columns(fit, rows, overrides or {})
    return ordered_category_probs(X, fit.beta, fit.cutpoints)


@dataclass
class ShiftReport:
    probs_delay: np.ndarray
    probs_no_delay: np.ndarray
    categories: np.ndarray
    expected_delay: np.ndarray
    expected_no_delay: np.ndarray
    expected_change: np.ndarray
    prob_lower: np.ndarray
    share_drop_ge1: float
    share_prob_drop: float
    mean_delay: float
    mean_no_delay: float
    mean_pct_change: float
    delay_column: str = "DEL"

    def to_frame(self, row_ids: Optional[Sequence[str]] = None) -> pd.DataFrame:
        ids = list(row_ids) if row_ids is not None else list(range(len(self.expected_change)))
        frame = pd.DataFrame({
            "row_id": ids,
            "expected_no_delay": self.expected_no_delay,
            "expected_delay": self.expected_delay,
            "expected_change": self.expected_change,
            "prob_lower_by_1": self.prob_lower,
        })
        for k, level in enumerate(self.categories):
            frame[f"p_no_delay_{level}"] = self.probs_no_delay[:, k]
            frame[f"p_delay_{level}"] = self.probs_delay[:, k]
        return frame

    def summary_text(self) -> str:
        return "\n".join([
            f"delay_column: {self.delay_column}",
            f"rows: {len(self.expected_change)}",
            f"mean_rating_no_delay: {format_float(self.mean_no_delay)}",
            f"mean_rating_delay: {format_float(self.mean_delay)}",
            f"mean_pct_change: {format_percent(self.mean_pct_change)}",
            f"share_expected_drop_ge1: {format_percent(100.0 * self.share_drop_ge1)}",
            f"share_prob_drop_gt_half: {format_percent(100.0 * self.share_prob_drop)}",
        ]) + "\n"


def simulate_delay_shift(fit: OrderedFit, rows: DesignMatrix, delay_column: str = "DEL") -> ShiftReport:
    """Predicted ratings with the delay column switched on and off for every row."""
    if delay_column not in fit.names:
        raise ContractError(f"delay column '{delay_column}' is not a covariate of the fit")
    on = predict_probs(fit, rows, {delay_column: 1.0})
    off = predict_probs(fit, rows, {delay_column: 0.0})
    levels = np.asarray(fit.categories, dtype=float)
    expected_on = on @ levels
    expected_off = off @ levels
    change = expected_on - expected_off
    # independent draws: P(rating with delay <= rating without delay - 1)
    lower = (levels[:, None] <= levels[None, :] - 1.0).astype(float)
    prob_lower = np.einsum("ia,ab,ib->i", on, lower, off)
    mean_on = float(expected_on.mean())
    mean_off = float(expected_off.mean())
    report = ShiftReport(
        probs_delay=on,
        probs_no_delay=off,
        categories=np.asarray(fit.categories),
        expected_delay=expected_on,
        expected_no_delay=expected_off,
        expected_change=change,
        prob_lower=prob_lower,
        share_drop_ge1=float(np.mean(change <= -1.0)),
        share_prob_drop=float(np.mean(prob_lower > 0.5)),
        mean_delay=mean_on,
        mean_no_delay=mean_off,
        mean_pct_change=100.0 * (mean_on - mean_off) / mean_off,
        delay_column=delay_column,
    )
    logger.info(f"delay shift: mean rating {mean_off:.3f} -> {mean_on:.3f} "
                f"({report.mean_pct_change:+.2f}%)")
    return report


def curve_vertex(b1: float, b2: float) -> Optional[float]:
    if b2 == 0:
        return None
    return -b1 / (2.0 * b2)


@dataclass
class CurvePoints:
    t: np.ndarray
    values: Dict[str, np.ndarray]
    vertices: Dict[str, Optional[float]]
    coefficients: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    def to_frame(self, segment: str) -> pd.DataFrame:
        return pd.DataFrame({"t_hours": self.t, "effect": self.values[segment]})


def duration_curve(b1: float, b2: float, b1_seg: Optional[float] = None, b2_seg: Optional[float] = None,
                   t_grid: Optional[Sequence[float]] = None,
                   segments: Tuple[str, str] = SEGMENTS) -> CurvePoints:
    """f(t) = b1 t + b2 t^2 for the first segment and, when given, (b1_seg, b2_seg) for the second."""
    t = DEFAULT_T_GRID.copy() if t_grid is None else np.asarray(t_grid, dtype=float)
    if len(t) == 0 or np.any(t < 0):
        raise ContractError("duration grid must be non-empty and non-negative")
    coefficients = {segments[0]: (float(b1), float(b2))}
    if b1_seg is not None and b2_seg is not None:
        coefficients[segments[1]] = (float(b1_seg), float(b2_seg))
    return CurvePoints(
        t=t,
        values={seg: c1 * t + c2 * t ** 2 for seg, (c1, c2) in coefficients.items()},
        vertices={seg: curve_vertex(c1, c2) for seg, (c1, c2) in coefficients.items()},
        coefficients=coefficients,
    )


@dataclass
class BiasReport:
    rho_naive: float
    rho_controlled: float
    pct_drop: float
    converged_naive: bool
    converged_controlled: bool
    true_rho: Optional[float] = None
    distance_naive: Optional[float] = None
    distance_controlled: Optional[float] = None
    selected_controls: List[str] = field(default_factory=list)

    @property
    def flagged(self) -> bool:
        return not (self.converged_naive and self.converged_controlled)

    def to_text(self) -> str:
        lines = [
            f"rho_naive: {format_float(self.rho_naive)}",
            f"rho_controlled: {format_float(self.rho_controlled)}",
            f"pct_drop: {format_percent(self.pct_drop)}",
            f"flagged: {str(self.flagged).lower()}",
        ]
        if self.true_rho is not None:
            lines += [
                f"true_rho: {format_float(self.true_rho)}",
                f"distance_naive: {format_float(self.distance_naive)}",
                f"distance_controlled: {format_float(self.distance_controlled)}",
            ]
        return "\n".join(lines) + "\n"


def compare_bias(frame: pd.DataFrame, naive_spec: FeatureSpec, controlled_spec: FeatureSpec,
                 truth: Optional[SyntheticTruth] = None, select_controls: bool = False,
                 delay_column: str = "DEL", options: Optional[ProbitOptions] = None,
                 n_jobs: int = 1) -> BiasReport:
    """Delay coefficient with and without the control blocks, fitted on the same rows."""
    naive = assemble_design(frame, naive_spec)
    controlled = assemble_design(frame, controlled_spec)
    selected: List[str] = []
    if select_controls:
        controlled, selection = lasso.select_controls(controlled, n_jobs=n_jobs)
        selected = selection.selected
    else:
        controlled = lasso.prune_collinear(controlled, controlled.focal_names)
    naive = lasso.prune_collinear(naive, naive.focal_names)
    if naive.n != controlled.n:
        raise ContractError("naive and controlled designs must share their rows")
    fit_naive = fit_ordered_probit(naive, options)
    fit_controlled = fit_ordered_probit(controlled, options)
    rho_naive = fit_naive.coefficient(delay_column)
    rho_controlled = fit_controlled.coefficient(delay_column)
    pct_drop = 100.0 * (abs(rho_naive) - abs(rho_controlled)) / abs(rho_naive) if rho_naive else np.nan
    report = BiasReport(
        rho_naive=rho_naive,
        rho_controlled=rho_controlled,
        pct_drop=pct_drop,
        converged_naive=fit_naive.converged,
        converged_controlled=fit_controlled.converged,
        selected_controls=selected,
    )
    if truth is not None:
        report.true_rho = truth.delay_effect_true
        report.distance_naive = abs(rho_naive - truth.delay_effect_true)
        report.distance_controlled = abs(rho_controlled - truth.delay_effect_true)
    if report.flagged:
        logger.warning("bias comparison uses a non-converged fit")
    logger.info(f"bias comparison: naive {rho_naive:.4f}, controlled {rho_controlled:.4f}, drop {pct_drop:.2f}%")
    return report
