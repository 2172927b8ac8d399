import json

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rffrc.errors import (
    CorruptFileError,
    DimensionMismatchError,
    InvalidParameterError,
    NumericalFailureError,
)
from rffrc.metrics import nrmse_columns
from rffrc.readout import ReadoutWeights, fit, predict, select_lambda


def ridge_oracle(Z, Y, lam, dps=40):
    """Normal equations solved in ``dps``-digit arithmetic."""
    with mpmath.workdps(dps):
        Zm = mpmath.matrix(Z.tolist())
        Ym = mpmath.matrix(Y.tolist())
        A = Zm.T * Zm + mpmath.mpf(lam) * mpmath.eye(Z.shape[1])
        rhs = Zm.T * Ym
        cols = [mpmath.lu_solve(A, rhs.column(j)) for j in range(Y.shape[1])]
        return np.array([[float(c[i]) for c in cols] for i in range(Z.shape[1])])


def test_identity_example():
    w = fit(np.eye(2), np.eye(2), 1.0)
    np.testing.assert_allclose(w.W, 0.5 * np.eye(2), atol=1e-15)
    assert w.lam == 1.0 and (w.M, w.d) == (2, 2)


def test_zero_targets_give_zero_weights():
    Z = np.random.default_rng(0).normal(size=(9, 4))
    assert np.all(fit(Z, np.zeros((9, 3)), 0.3).W == 0.0)


def test_small_instance_matches_extended_precision():
    rng = np.random.default_rng(1)
    Z, Y = rng.normal(size=(6, 4)), rng.normal(size=(6, 2))
    W = fit(Z, Y, 0.1).W
    ref = ridge_oracle(Z, Y, 0.1)
    assert np.linalg.norm(W - ref) <= 1e-10 * np.linalg.norm(ref)


def test_lambda_must_be_positive():
    with pytest.raises(InvalidParameterError):
        fit(np.eye(2), np.eye(2), 0.0)
    with pytest.raises(InvalidParameterError):
        fit(np.eye(2), np.eye(2), -1.0)


def test_row_mismatch():
    with pytest.raises(DimensionMismatchError):
        fit(np.zeros((3, 2)), np.zeros((4, 1)), 1.0)


def test_factorisation_failure_is_reported():
    Z = np.array([[1e200, 0.0], [0.0, 1.0]])
    with pytest.raises(NumericalFailureError):
        fit(Z, np.ones((2, 1)), 1.0)


def test_residual_bound_on_rff_like_features():
    rng = np.random.default_rng(3)
    Z = np.sqrt(2 / 300) * np.cos(rng.normal(size=(2000, 6)) @ rng.normal(size=(6, 300)) + rng.uniform(0, 6.28, 300))
    Y = rng.normal(size=(2000, 2))
    w = fit(Z, Y, 1e-8)
    A = Z.T @ Z + 1e-8 * np.eye(300)
    B = Z.T @ Y
    assert np.linalg.norm(A @ w.W - B) <= 1e-8 * (1 + np.linalg.norm(B)) * 10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), lam1=st.floats(1e-4, 10.0), factor=st.floats(1.01, 100.0))
def test_monotone_shrinkage(seed, lam1, factor):
    rng = np.random.default_rng(seed)
    Z, Y = rng.normal(size=(12, 5)), rng.normal(size=(12, 2))
    small, large = fit(Z, Y, lam1).W, fit(Z, Y, lam1 * factor).W
    assert np.linalg.norm(small) >= np.linalg.norm(large) * (1 - 1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), lam=st.floats(1e-3, 1e6))
def test_large_lambda_bound(seed, lam):
    rng = np.random.default_rng(seed)
    Z, Y = rng.normal(size=(10, 6)), rng.normal(size=(10, 3))
    assert np.linalg.norm(fit(Z, Y, lam).W) <= np.linalg.norm(Z.T @ Y) / lam * (1 + 1e-12)


def test_columns_are_separable():
    rng = np.random.default_rng(4)
    Z, Y = rng.normal(size=(30, 8)), rng.normal(size=(30, 3))
    joint = fit(Z, Y, 0.05).W
    for j in range(3):
        np.testing.assert_allclose(fit(Z, Y[:, j], 0.05).W[:, 0], joint[:, j], rtol=1e-13, atol=1e-15)


def test_predict_rows_independent_of_batch():
    rng = np.random.default_rng(5)
    Z, W = rng.normal(size=(50, 37)), rng.normal(size=(37, 3))
    batch = predict(Z, W)
    np.testing.assert_allclose(batch, Z @ W, rtol=1e-12, atol=1e-12)
    for i in (0, 17, 49):
        np.testing.assert_array_equal(predict(Z[i:i + 1], W)[0], batch[i])


def test_select_lambda_single_candidate():
    rng = np.random.default_rng(6)
    Z, Y = rng.normal(size=(40, 5)), rng.normal(size=(40, 2))
    lam, scores = select_lambda(Z, Y, [0.3], 0.25)
    assert lam == 0.3 and len(scores) == 1


def test_select_lambda_duplicates_are_harmless():
    rng = np.random.default_rng(7)
    Z = rng.normal(size=(60, 6))
    Y = Z @ rng.normal(size=(6, 2)) + 0.1 * rng.normal(size=(60, 2))
    grid = [1e-3, 1e-1, 1.0, 10.0]
    lam_a, scores_a = select_lambda(Z, Y, grid, 0.3)
    lam_b, scores_b = select_lambda(Z, Y, grid + grid[::-1], 0.3)
    assert lam_a == lam_b
    assert scores_b[:4] == scores_a


def test_select_lambda_tie_rule_on_noiseless_linear_data():
    rng = np.random.default_rng(8)
    Z = rng.normal(size=(80, 5))
    Y = Z @ rng.normal(size=(5, 2))
    grid = [10.0**e for e in range(-10, 1)]
    # exhaustive evaluation, independent of select_lambda's bookkeeping
    n_val = 16
    scores = []
    for lam in grid:
        w = np.linalg.solve(Z[:-n_val].T @ Z[:-n_val] + lam * np.eye(5), Z[:-n_val].T @ Y[:-n_val])
        scores.append(float(np.mean(nrmse_columns(Y[-n_val:], Z[-n_val:] @ w))))
    best = min(scores)
    expected = max(g for g, s in zip(grid, scores) if s <= best + 1e-6)
    lam, got = select_lambda(Z, Y, grid, 0.2, tie_tol=1e-6)
    assert lam == expected
    assert lam > grid[0]  # several tiny lambdas tie on noiseless data
    np.testing.assert_allclose(got, scores, rtol=1e-6, atol=1e-12)


def test_select_lambda_validation():
    Z, Y = np.zeros((10, 2)), np.zeros((10, 1))
    with pytest.raises(InvalidParameterError):
        select_lambda(Z, Y, [], 0.2)
    with pytest.raises(InvalidParameterError):
        select_lambda(Z, Y, [1.0], 1.0)


def test_weights_binary_round_trip(tmp_path):
    w = fit(np.random.default_rng(9).normal(size=(20, 7)), np.ones((20, 2)), 0.01)
    path = tmp_path / "weights.bin"
    w.save(path)
    meta = json.loads((tmp_path / "weights.bin.json").read_text())
    assert meta == {"lambda": 0.01, "M": 7, "d": 2}
    back = ReadoutWeights.load(path, expected_M=7)
    assert back.W.tobytes() == w.W.tobytes() and back.lam == w.lam
    with pytest.raises(DimensionMismatchError):
        ReadoutWeights.load(path, expected_M=8)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CorruptFileError):
        ReadoutWeights.load(path)
