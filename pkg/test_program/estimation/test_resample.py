"""
SMOTE oversampling of the business-traveler minority.
"""
import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from satisfaction_app.errors import ContractError
from satisfaction_app.estimation.resample import (
    SYNTHETIC_COLUMN,
    SmoteConfig,
    minority_mask,
    nearest_minority_neighbors,
    smote_oversample,
    target_count,
)
from satisfaction_app.features.design import DesignMatrix


def traveler_matrix(n=200, minority_share=0.25, seed=0):
    rng = np.random.default_rng(seed)
    business = (np.arange(n) < int(n * minority_share)).astype(int)
    X = np.column_stack([rng.standard_normal(n), rng.integers(0, 2, n), rng.uniform(0, 1, n)])
    return DesignMatrix(
        y=rng.integers(1, 11, n),
        X=X,
        names=["TERMDEN", "JETBRIDGE", "WIFI"],
        penalized=np.zeros(3, dtype=bool),
        cluster_id=np.array([f"T2|2019-05-{1 + i % 28:02d}" for i in range(n)]),
        aux=pd.DataFrame({"respondent_id": [f"R{i:06d}" for i in range(n)], "BSNFLIER": business}),
    )


@pytest.mark.parametrize("share, expected", [
    (0.35, 4897),
    (0.40, 6063),
    (0.45, 7441),
    (0.50, 9095),
    (0.55, 11116),
])
def test_target_counts_for_the_published_split(share, expected):
    assert target_count(9095, 3976, share) == expected


def test_target_count_edge_cases():
    assert target_count(100, 100, 0.5) == 100
    assert target_count(75, 25, 0.25) == 25
    with pytest.raises(ContractError):
        target_count(50, 50, 0.3)
    with pytest.raises(ContractError):
        target_count(50, 50, 1.0)


def test_oversampled_sizes():
    matrix = traveler_matrix()
    out = smote_oversample(matrix, SmoteConfig(target_share=0.4))
    n_synthetic = target_count(150, 50, 0.4) - 50
    assert out.n == matrix.n + n_synthetic
    assert int(out.aux[SYNTHETIC_COLUMN].sum()) == n_synthetic
    assert minority_mask(out, "BSNFLIER").mean() == pytest.approx(100 / 250)
    assert out.notes[-1].startswith(f"SMOTE: {n_synthetic} synthetic rows")


def test_published_split_adds_2087_rows():
    n = 13071
    business = np.zeros(n, dtype=int)
    business[:3976] = 1
    matrix = DesignMatrix(
        y=np.ones(n, dtype=int), X=np.arange(n, dtype=float)[:, None], names=["x"],
        penalized=np.zeros(1, dtype=bool), cluster_id=np.full(n, "c"),
        aux=pd.DataFrame({"BSNFLIER": business}),
    )
    out = smote_oversample(matrix, SmoteConfig(target_share=0.40))
    assert out.n - n == 2087


def test_equal_share_is_a_no_op():
    matrix = traveler_matrix(minority_share=0.25)
    out = smote_oversample(matrix, SmoteConfig(target_share=0.25))
    assert out.n == matrix.n
    assert_array_equal(out.X, matrix.X)
    assert (out.aux[SYNTHETIC_COLUMN] == 0).all()


def test_synthetic_rows_lie_between_minority_neighbors():
    matrix = traveler_matrix()
    out = smote_oversample(matrix, SmoteConfig(target_share=0.4))
    minority = matrix.X[minority_mask(matrix, "BSNFLIER")]
    synthetic = out.X[matrix.n:]
    low, high = minority.min(axis=0), minority.max(axis=0)
    assert np.all(synthetic >= low - 1e-12) and np.all(synthetic <= high + 1e-12)
    # each synthetic row sits on the segment from its base row to the base row's neighbour
    base = np.flatnonzero(minority_mask(matrix, "BSNFLIER"))
    neighbors = nearest_minority_neighbors(matrix.X[base], np.arange(len(base)), 1)[:, 0]
    for i, row in enumerate(synthetic):
        start, end = matrix.X[base[i % len(base)]], matrix.X[base[neighbors[i % len(base)]]]
        span = end - start
        weight = (row - start) @ span / (span @ span)
        assert 0.0 <= weight <= 1.0
        assert_allclose(row, start + weight * span, atol=1e-12)


def test_original_rows_are_unchanged():
    matrix = traveler_matrix()
    out = smote_oversample(matrix, SmoteConfig(target_share=0.45))
    assert_array_equal(out.X[: matrix.n], matrix.X)
    assert_array_equal(out.y[: matrix.n], matrix.y)
    assert_array_equal(out.cluster_id[: matrix.n], matrix.cluster_id)


def test_outcome_is_copied_from_the_base_row():
    matrix = traveler_matrix()
    out = smote_oversample(matrix, SmoteConfig(target_share=0.4))
    base = np.flatnonzero(minority_mask(matrix, "BSNFLIER"))
    extra = out.n - matrix.n
    assert_array_equal(out.y[matrix.n:], matrix.y[base[np.arange(extra) % len(base)]])
    assert (out.aux["BSNFLIER"].iloc[matrix.n:] == 1).all()


def test_same_seed_same_rows():
    matrix = traveler_matrix()
    first = smote_oversample(matrix, SmoteConfig(target_share=0.5, k_neighbors=3, seed=7))
    second = smote_oversample(matrix, SmoteConfig(target_share=0.5, k_neighbors=3, seed=7))
    other = smote_oversample(matrix, SmoteConfig(target_share=0.5, k_neighbors=3, seed=8))
    assert_array_equal(first.X, second.X)
    assert not np.array_equal(first.X, other.X)


def test_rebinarize_rounds_dummy_columns():
    matrix = traveler_matrix()
    out = smote_oversample(matrix, SmoteConfig(target_share=0.5, rebinarize=True))
    assert set(np.unique(out.column("JETBRIDGE"))) <= {0.0, 1.0}


def test_invalid_settings():
    with pytest.raises(ContractError):
        SmoteConfig(target_share=0.0)
    with pytest.raises(ContractError):
        SmoteConfig(target_share=0.4, k_neighbors=0)
    matrix = traveler_matrix()
    with pytest.raises(ContractError):
        smote_oversample(matrix, SmoteConfig(target_share=0.4, minority_flag="PILOT"))
    with pytest.raises(ContractError):
        smote_oversample(matrix, SmoteConfig(target_share=0.4, feature_columns=["NOPE"]))
