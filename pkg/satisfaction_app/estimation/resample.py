# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Deterministic SMOTE oversampling of the business-traveler minority
"""
SMOTE oversampling.

Base rows are taken by cycling through the minority rows in index order. Each
synthetic row interpolates its base row toward a nearest minority neighbour
with one U(0,1) weight. Random draws are consumed in synthetic-row order, so
the result depends only on the seed.
"""
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist
from sklearn.preprocessing import StandardScaler

from satisfaction_app.errors import ContractError
from satisfaction_app.features.design import DesignMatrix
from satisfaction_app.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_SMOTE_SEED = 20180201
SYNTHETIC_COLUMN = "synthetic"
_CHUNK_ROWS = 2048


@dataclass(frozen=True)
class SmoteConfig:
    target_share: float
    minority_flag: str = "BSNFLIER"
    k_neighbors: int = 1
    seed: int = DEFAULT_SMOTE_SEED
    feature_columns: Optional[Sequence[str]] = None
    interpolate_outcome: bool = False
    rebinarize: bool = False
    standardize: bool = False

    def __post_init__(self):
        if not 0.0 < self.target_share < 1.0:
            raise ContractError(f"target_share must lie in (0,1), got {self.target_share}")
        if self.k_neighbors < 1:
            raise ContractError(f"k_neighbors must be at least 1, got {self.k_neighbors}")


def target_count(n_majority: int, n_minority: int, target_share: float) -> int:
    """Minority total after oversampling: floor(n_majority * s / (1 - s))."""
    if not 0.0 < target_share < 1.0:
        raise ContractError(f"target_share must lie in (0,1), got {target_share}")
    if n_majority < 1 or n_minority < 0:
        raise ContractError("class counts must be non-negative with at least one majority row")
    current = n_minority / (n_majority + n_minority)
    if np.isclose(target_share, current, rtol=0.0, atol=1e-12):
        return n_minority
    if target_share < current:
        raise ContractError(f"target share {target_share} is below the current minority share {current:.4f}")
    # the epsilon keeps exact products such as 100 * 0.5 / 0.5 from flooring one short
    return int(np.floor(n_majority * target_share / (1.0 - target_share) + 1e-9))


def minority_mask(matrix: DesignMatrix, flag: str) -> np.ndarray:
    if flag in matrix.names:
        values = matrix.column(flag)
    elif flag in matrix.aux.columns:
        values = pd.to_numeric(matrix.aux[flag], errors="coerce").to_numpy(float)
    else:
        raise ContractError(f"minority flag '{flag}' is neither a column nor a row attribute")
    if np.any(~np.isin(values, (0.0, 1.0))):
        raise ContractError(f"minority flag '{flag}' must be 0/1")
    return values == 1.0


def nearest_minority_neighbors(points: np.ndarray, base_rows: np.ndarray, k: int) -> np.ndarray:
    """k nearest other minority rows per base row; equal distances keep the lower row index."""
    neighbors = np.empty((len(base_rows), k), dtype=np.int64)
    for start in range(0, len(base_rows), _CHUNK_ROWS):
        chunk = base_rows[start:start + _CHUNK_ROWS]
        distances = cdist(points[chunk], points, metric="euclidean")
        distances[np.arange(len(chunk)), chunk] = np.inf
        neighbors[start:start + len(chunk)] = np.argsort(distances, axis=1, kind="stable")[:, :k]
    return neighbors


def _binary_columns(X: np.ndarray) -> np.ndarray:
    return np.all(np.isin(X, (0.0, 1.0)), axis=0)


def smote_oversample(matrix: DesignMatrix, cfg: SmoteConfig) -> DesignMatrix:
    """Append synthetic minority rows until the minority share reaches cfg.target_share."""
    is_minority = minority_mask(matrix, cfg.minority_flag)
    minority = np.flatnonzero(is_minority)
    n_minority = len(minority)
    n_majority = matrix.n - n_minority
    if n_minority < 2:
        raise ContractError(f"SMOTE needs at least two minority rows, found {n_minority}")

    features: List[str] = list(cfg.feature_columns) if cfg.feature_columns is not None else list(matrix.names)
    for name in features:
        if name not in matrix.names:
            raise ContractError(f"feature column '{name}' is not a numeric design column")
    feature_idx = np.array([matrix.index_of(name) for name in features], dtype=np.int64)
    if not np.all(np.isfinite(matrix.X[:, feature_idx])):
        raise ContractError("SMOTE feature columns must be finite")

    aux = matrix.aux.copy()
    aux[SYNTHETIC_COLUMN] = 0
    n_synthetic = target_count(n_majority, n_minority, cfg.target_share) - n_minority
    if n_synthetic <= 0:
        logger.info("target share equals the current minority share; no synthetic rows")
        return replace(matrix, aux=aux, notes=list(matrix.notes))

    space = matrix.X[minority][:, feature_idx]
    if cfg.standardize:
        space = StandardScaler().fit(matrix.X[:, feature_idx]).transform(space)
    k = min(cfg.k_neighbors, n_minority - 1)
    distinct = np.arange(min(n_synthetic, n_minority))
    neighbor_table = nearest_minority_neighbors(space, distinct, k)

    rng = np.random.default_rng(cfg.seed)
    slots = np.arange(n_synthetic) % n_minority
    choice = np.zeros(n_synthetic, dtype=np.int64)
    weights = np.empty(n_synthetic)
    for i in range(n_synthetic):
        if k > 1:
            choice[i] = rng.integers(k)
        weights[i] = rng.random()
    base = minority[slots]
    partner = minority[neighbor_table[slots, choice]]

    new_X = matrix.X[base].copy()
    step = matrix.X[partner][:, feature_idx] - matrix.X[base][:, feature_idx]
    new_X[:, feature_idx] += weights[:, None] * step
    if cfg.rebinarize:
        dummies = feature_idx[_binary_columns(matrix.X[:, feature_idx])]
        new_X[:, dummies] = np.rint(new_X[:, dummies])

    new_y = matrix.y[base].copy()
    if cfg.interpolate_outcome:
        interpolated = matrix.y[base] + weights * (matrix.y[partner] - matrix.y[base])
        new_y = np.rint(interpolated).astype(matrix.y.dtype)

    new_aux = aux.iloc[base].reset_index(drop=True)
    new_aux[SYNTHETIC_COLUMN] = 1
    if cfg.minority_flag in new_aux.columns:
        new_aux[cfg.minority_flag] = 1

    result = replace(
        matrix,
        y=np.concatenate([matrix.y, new_y]),
        X=np.vstack([matrix.X, new_X]),
        cluster_id=np.concatenate([matrix.cluster_id, matrix.cluster_id[base]]),
        aux=pd.concat([aux, new_aux], ignore_index=True),
        notes=list(matrix.notes) + [f"SMOTE: {n_synthetic} synthetic rows at target share {cfg.target_share:g}"],
    )
    logger.info(f"SMOTE appended {n_synthetic} synthetic rows ({n_minority} -> {n_minority + n_synthetic} minority)")
    return result

