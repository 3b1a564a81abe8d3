# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Descriptive statistics, side-by-side fit table and SMOTE oversampling study
"""
Report tables written by the pipeline as plain CSV.

- emit_descriptives: per-variable mean/sd/min/max plus on-time vs delayed mean ratings
- emit_fit_table: coefficient columns with stars, lasso drops and model statistics
- emit_smote_study: minority sizes and delay-coefficient spread across oversampling shares
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from satisfaction_app.errors import ContractError
from satisfaction_app.estimation.lasso import LASSO_DROP
from satisfaction_app.estimation.probit import ModelFit, ProbitOptions, coefficient_table, fit_ordered_probit
from satisfaction_app.estimation.resample import SmoteConfig, minority_mask, smote_oversample, target_count
from satisfaction_app.features.design import CONTROL_GROUPS, DesignMatrix, time_bin_labels
from satisfaction_app.utils.formatting import format_coefficient, format_float, format_percent, format_se
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

DESCRIPTIVE_ROWS: Tuple[str, ...] = (
    "AIRCSIZE", "APTSAT", "BOARD (CALL)", "BOARD (NOT)", "BOARD (NOW)", "BUSYDAY", "BUSYHOUR", "CARGO",
    "CASCAD (ARR)", "CASCAD (DEP)", "DEL", "DELDUR",
    "DISSAT (AIRLINE)", "DISSAT (CHECKIN)", "DISSAT (CURBSID)", "DISSAT (FLTINFO)", "DISSAT (SECINSP)",
    "DISSAT (WALKDST)", "DISSAT (WAYFIND)", "DISTANCE", "EXPENSIVE", "EXPERCDFLIER", "FIRSTTFLIER", "FOOD",
    "FOOD (4/5 RATING)", "FREQFLIER", "GENBOOM", "GENMILLEN", "GENSILEN", "GENX", "GENZ", "INTNLDEST",
    "INTNLTERM", "JETBRIDGE", "LOADFAC", "LSRFLIER", "PANDEMIC (EARLY)", "PANDEMIC (LATER)", "PANDEMIC (PRE)",
    "PRCONNECT", "REDEYE", "RUNWAYCONG", "RUNWAYDIS", "SCHLCOLL", "SCHLELEM", "SCHLHIGH", "SCHLMIDD", "SHOPS",
    "SHOPS (4/5 RATING)", "SMALLTERM", "TERMDEN", "TERMDIS", "WEATHER (DST)", "WEATHER (ORG)", "WIFI",
    "WIFI (4/5 RATING)",
)

# (panel, label, dummy column) for the on-time vs delayed comparison
RATING_PANELS: Tuple[Tuple[str, str, str], ...] = (
    ("generation", "silent", "GENSILEN"),
    ("generation", "boomer", "GENBOOM"),
    ("generation", "x", "GENX"),
    ("generation", "millennial", "GENMILLEN"),
    ("generation", "z", "GENZ"),
    ("schooling", "elementary", "SCHLELEM"),
    ("schooling", "middle", "SCHLMIDD"),
    ("schooling", "high", "SCHLHIGH"),
    ("schooling", "college", "SCHLCOLL"),
    ("trip frequency", "first time", "FIRSTTFLIER"),
    ("trip frequency", "experienced", "EXPERCDFLIER"),
    ("trip frequency", "frequent", "FREQFLIER"),
    ("food", "rated 4/5", "FOOD (4/5 RATING)"),
    ("shops", "rated 4/5", "SHOPS (4/5 RATING)"),
    ("terminal", "T1", "SMALLTERM"),
    ("terminal", "T3", "INTNLTERM"),
    ("destination", "international", "INTNLDEST"),
    ("weather", "adverse at origin", "WEATHER (ORG)"),
    ("weather", "adverse at destination", "WEATHER (DST)"),
)

CONTROL_LABELS: Dict[str, str] = {
    "dissat": "DISSAT",
    "termdis": "TERMDIS",
    "pandemic": "PANDEMIC",
    "timetoflt": "TIMETOFLT",
    "dest": "DEST",
    "airl": "AIRL",
    "date": "DATE",
}


def emit_descriptives(frame: pd.DataFrame) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Descriptive statistics in fixed row order, and mean ratings on-time vs delayed by group."""
    rows = []
    for name in DESCRIPTIVE_ROWS:
        if name not in frame.columns:
            logger.debug(f"descriptives: '{name}' not in the feature frame")
            continue
        values = pd.to_numeric(frame[name], errors="coerce").to_numpy(float)
        rows.append({
            "variable": name,
            "mean": float(np.mean(values)),
            "sd": float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
            "min": float(np.min(values)),
            "max": float(np.max(values)),
        })
    table = pd.DataFrame(rows, columns=["variable", "mean", "sd", "min", "max"])

    delayed_rows = frame["DEL"].to_numpy() == 1
    rating = frame["APTSAT"].to_numpy(float)
    groups = [(panel, label, frame[column].to_numpy() == 1)
              for panel, label, column in RATING_PANELS if column in frame.columns]
    if "terminal" in frame.columns:
        groups.append(("terminal", "T2", frame["terminal"].to_numpy() == "T2"))
    if "INTNLDEST" in frame.columns:
        groups.append(("destination", "domestic", frame["INTNLDEST"].to_numpy() == 0))
    if "WEATHER (ORG)" in frame.columns and "WEATHER (DST)" in frame.columns:
        clear = (frame["WEATHER (ORG)"].to_numpy() == 0) & (frame["WEATHER (DST)"].to_numpy() == 0)
        groups.append(("weather", "clear", clear))
    if "TIMETOFLT_BIN" in frame.columns:
        labels = time_bin_labels(frame.attrs.get("time_bin_edges", (20.0, 40.0, 60.0, 80.0, 100.0, 120.0)))
        bins = frame["TIMETOFLT_BIN"].to_numpy()
        groups += [("time to flight", label, bins == b) for b, label in enumerate(labels)]

    comparison = []
    for panel, label, mask in groups:
        on_time, late = mask & ~delayed_rows, mask & delayed_rows
        comparison.append({
            "group": f"{panel}: {label}",
            "on_time_mean": float(rating[on_time].mean()) if on_time.any() else np.nan,
            "delayed_mean": float(rating[late].mean()) if late.any() else np.nan,
        })
    figure = pd.DataFrame(comparison, columns=["group", "on_time_mean", "delayed_mean"])
    logger.info(f"descriptives over {len(frame)} rows: {len(table)} variables, {len(figure)} rating groups")
    return table, figure


@dataclass
class FitColumn:
    """One column of a fit table."""

    label: str
    fit: ModelFit
    estimator: str = "Ordered probit"
    dropped: Sequence[str] = field(default_factory=list)
    control_groups: Sequence[str] = field(default_factory=list)


def _stat_cell(value: float, digits: int = 2) -> str:
    return "" if value is None or np.isnan(value) else f"{value:.{digits}f}"


def emit_fit_table(columns: Sequence[FitColumn]) -> pd.DataFrame:
    """Side-by-side coefficient and SE rows, then estimator, clusters, n, fit statistics and control rows."""
    if not columns:
        raise ContractError("fit table needs at least one fit")
    order: List[str] = []
    for column in columns:
        for name in list(column.fit.names) + list(column.dropped):
            if name not in order:
                order.append(name)

    cells: Dict[str, List[str]] = {"variable": []}
    for column in columns:
        cells[column.label] = []

    def add_row(label: str, values: List[str]) -> None:
        cells["variable"].append(label)
        for column, value in zip(columns, values):
            cells[column.label].append(value)

    tables = [coefficient_table(column.fit) for column in columns]
    for name in order:
        coef_row, se_row = [], []
        for column, table in zip(columns, tables):
            if name in table.index:
                coef_row.append(format_coefficient(table.at[name, "coef"], table.at[name, "p"]))
                se_row.append(format_se(table.at[name, "se"]))
            elif name in column.dropped:
                coef_row.append(LASSO_DROP)
                se_row.append("")
            else:
                coef_row.append("")
                se_row.append("")
        add_row(name, coef_row)
        add_row("", se_row)

    add_row("Estimator", [column.estimator for column in columns])
    add_row("Clusters", [str(column.fit.n_clusters) if column.fit.n_clusters else "" for column in columns])
    add_row("Observations", [str(column.fit.n) for column in columns])
    add_row("Log-likelihood", [_stat_cell(column.fit.loglik, 3) for column in columns])
    add_row("AIC", [_stat_cell(column.fit.aic) for column in columns])
    add_row("BIC", [_stat_cell(column.fit.bic) for column in columns])
    for group in CONTROL_GROUPS:
        add_row(f"{CONTROL_LABELS[group]} controls",
                ["yes" if group in column.control_groups else "no" for column in columns])
    return pd.DataFrame(cells)


def _delay_estimate(matrix: DesignMatrix, options: Optional[ProbitOptions],
                    delay_column: str) -> Tuple[float, float, bool]:
    fit = fit_ordered_probit(matrix, options)
    j = fit.names.index(delay_column)
    return float(fit.beta[j]), float(fit.se[j]), fit.converged


def _replicate(matrix: DesignMatrix, share: float, seed: int, options: Optional[ProbitOptions],
               delay_column: str) -> Tuple[float, float, bool]:
    resampled = smote_oversample(matrix, SmoteConfig(target_share=share, seed=seed))
    return _delay_estimate(resampled, options, delay_column)


def emit_smote_study(matrix: DesignMatrix, shares: Sequence[float], replications: int = 250,
                     seed: int = 20180201, n_jobs: int = 1, options: Optional[ProbitOptions] = None,
                     delay_column: str = "DEL", minority_flag: str = "BSNFLIER") -> pd.DataFrame:
    """Exact minority sizes per share and the delay coefficient over seeded replications.

    Replication r of every share uses seed + r. The se_estimate column (standard deviation of
    the estimates across replications) is left out when there is a single replication.
    """
    if replications < 1:
        raise ContractError("replications must be at least 1")
    if delay_column not in matrix.names:
        raise ContractError(f"delay column '{delay_column}' is not in the design")
    is_minority = minority_mask(matrix, minority_flag)
    n_minority = int(is_minority.sum())
    n_majority = matrix.n - n_minority
    sizes = [target_count(n_majority, n_minority, share) for share in shares]

    base_coef, base_se, _ = _delay_estimate(matrix, options, delay_column)
    rows = [{
        "sample": "original",
        "minority_share": format_percent(100.0 * n_minority / matrix.n),
        "size_0": n_majority,
        "size_1": n_minority,
        "mean_estimate": format_float(base_coef),
        "pct_var_estimate": "",
        "se_estimate": "",
        "mean_std_error": format_float(base_se),
        "pct_var_std_error": "",
    }]
    for index, (share, size) in enumerate(zip(shares, sizes), start=1):
        results = Parallel(n_jobs=n_jobs)(
            delayed(_replicate)(matrix, share, seed + r, options, delay_column) for r in range(replications)
        )
        estimates = np.array([r[0] for r in results])
        std_errors = np.array([r[1] for r in results])
        failed = sum(1 for r in results if not r[2])
        if failed:
            logger.warning(f"SMOTE study share {share:g}: {failed} of {replications} fits did not converge")
        mean_est = float(estimates.mean())
        mean_se = float(np.nanmean(std_errors)) if np.any(np.isfinite(std_errors)) else np.nan
        rows.append({
            "sample": f"smote {index}",
            "minority_share": format_percent(100.0 * share),
            "size_0": n_majority,
            "size_1": size,
            "mean_estimate": format_float(mean_est),
            "pct_var_estimate": format_percent(100.0 * (mean_est - base_coef) / abs(base_coef)) if base_coef else "",
            "se_estimate": format_float(float(estimates.std(ddof=1))) if replications > 1 else "",
            "mean_std_error": format_float(mean_se),
            "pct_var_std_error": format_percent(100.0 * (mean_se - base_se) / base_se) if base_se else "",
        })
        logger.info(f"SMOTE study share {share:g}: {size} minority rows, mean {delay_column} {mean_est:.4f}")
    table = pd.DataFrame(rows)
    if replications == 1:
        table = table.drop(columns=["se_estimate"])
    return table
