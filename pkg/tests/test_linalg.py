import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from piq import DataError, Dataset, DimensionError, NonFiniteError, hat_matrix, pseudo_inverse_apply, read_csv
from piq.errors import BudgetExceededError
from piq.linalg import AugmentedDesign, PseudoInverse, restricted_sup_norm, sparse_power_norm, spectral_norm_sq


def test_pinv_identity():
    np.testing.assert_allclose(pseudo_inverse_apply(np.eye(3), [1, 2, 3]), [1, 2, 3], atol=1e-14)


def test_pinv_column_of_ones():
    np.testing.assert_allclose(pseudo_inverse_apply(np.ones((2, 1)), [0, 2]), [1.0], atol=1e-14)


def test_pinv_matches_normal_equations():
    r = np.random.default_rng(7)
    X = r.standard_normal((5, 2))
    v = np.array([1.0, -2.0, 0.5, 3.0, 0.0])
    ref = np.linalg.inv(X.T @ X) @ X.T @ v
    np.testing.assert_allclose(pseudo_inverse_apply(X, v), ref, rtol=1e-10)


def test_pinv_rank_deficient_gives_minimum_norm():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    v = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(PseudoInverse(X).apply(v), np.linalg.pinv(X) @ v, atol=1e-12)


def test_hat_identity_and_constant():
    np.testing.assert_allclose(hat_matrix(np.eye(2)).H, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(hat_matrix(np.ones((2, 1))).H, np.full((2, 2), 0.5), atol=1e-14)


def test_hat_trace_equals_rank():
    X = np.random.default_rng(3).standard_normal((6, 3))
    assert abs(np.trace(hat_matrix(X).H) - 3) <= 1e-10


@given(st.integers(0, 10_000), st.integers(1, 7), st.integers(1, 5))
def test_hat_is_orthogonal_projection(seed, n, p):
    X = np.random.default_rng(seed).standard_normal((n, p))
    H = hat_matrix(X).H
    assert np.max(np.abs(H @ H - H)) <= 1e-8
    assert np.max(np.abs(H - H.T)) <= 1e-12
    assert abs(np.linalg.norm(H, 2) - 1) <= 1e-8


def test_hat_apply_matches_dense():
    r = np.random.default_rng(0)
    X = r.standard_normal((9, 3))
    v = r.standard_normal(9)
    h = hat_matrix(X)
    np.testing.assert_allclose(h.apply(v), h.H @ v, atol=1e-12)
    np.testing.assert_allclose(h.complement(v), v - h.H @ v, atol=1e-12)


def test_augmented_design_matches_dense():
    r = np.random.default_rng(1)
    X = r.standard_normal((6, 3))
    A = AugmentedDesign(X)
    b, g = r.standard_normal(3), r.standard_normal(6)
    np.testing.assert_allclose(A.matvec(b, g), A.dense() @ np.concatenate([b, g]), atol=1e-12)
    assert abs(A.norm_sq() - np.linalg.norm(A.dense(), 2) ** 2) <= 1e-10


def test_restricted_norm_examples():
    assert abs(restricted_sup_norm(np.eye(2), 2, 0).value - 1) <= 1e-12
    assert abs(restricted_sup_norm(np.zeros((3, 2)), 2, 2).value - 1) <= 1e-12


def test_restricted_norm_bruteforce():
    X = np.random.default_rng(11).standard_normal((4, 3))
    best = 0.0
    for j, i in itertools.product(range(3), range(4)):
        B = np.column_stack([X[:, j], np.eye(4)[:, i]])
        best = max(best, np.linalg.eigvalsh(B.T @ B)[-1])
    res = restricted_sup_norm(X, 1, 1, mode="exhaustive")
    assert res.exact and res.supports_checked == 12
    assert abs(res.value - best) <= 1e-12


def test_restricted_norm_budget_and_bound():
    X = np.random.default_rng(0).standard_normal((30, 10))
    with pytest.raises(BudgetExceededError):
        restricted_sup_norm(X, 5, 10, mode="exhaustive")
    res = restricted_sup_norm(X, 5, 10)
    assert not res.exact
    assert abs(res.value - (spectral_norm_sq(X) + 1)) <= 1e-9


def test_sparse_power_norm_is_below_global_bound():
    X = np.random.default_rng(2).standard_normal((20, 8))
    v = sparse_power_norm(X, 3)
    assert 0 < v <= spectral_norm_sq(X) + 1e-9
    exact = max(np.linalg.eigvalsh(X[:, list(c)].T @ X[:, list(c)])[-1]
                for c in itertools.combinations(range(8), 3))
    assert v <= exact + 1e-9


def test_dataset_validation():
    with pytest.raises(DimensionError):
        Dataset(np.ones((3, 2)), np.ones(4))
    with pytest.raises(NonFiniteError):
        Dataset(np.array([[1.0], [np.nan]]), np.ones(2))
    d = Dataset(np.ones((3, 2)), np.arange(3.0))
    assert (d.n, d.p) == (3, 2)
    with pytest.raises(ValueError):
        d.X[0, 0] = 5.0


def test_standardize_records_scale():
    d = Dataset(np.array([[2.0, 0.0], [2.0, 0.0]]), np.zeros(2)).standardized()
    np.testing.assert_allclose(d.X[:, 0], 1.0)
    assert d.metadata["standardized"] is True


def test_read_csv_header_and_errors(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("a,b,y\n1,2,3\n4,5,6\n")
    d = read_csv(f, "y")
    np.testing.assert_allclose(d.y, [3, 6])
    assert d.feature_names == ("a", "b")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,y\n1,2,3\n4,x,6\n")
    with pytest.raises(DataError) as e:
        read_csv(bad, "y")
    assert e.value.row == 3 and e.value.column == 2
