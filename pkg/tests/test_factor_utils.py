import numpy as np
import pytest
import scipy.sparse as sp

from errors import FactorizationError
from factor_utils import (count_negative_pivots, dependent_columns, factor_indefinite,
                          factor_positive_definite)


def _gram(vectors):
    V = np.asarray(vectors, dtype=float)
    return sp.csr_matrix(V.T @ V)


class TestDependentColumns:
    def test_independent_columns_are_kept(self):
        rng = np.random.default_rng(0)
        assert dependent_columns(_gram(rng.standard_normal((12, 6)))).size == 0

    def test_near_combination_is_dropped(self):
        rng = np.random.default_rng(1)
        V = rng.standard_normal((12, 6))
        extra = V[:, 1] - 2.0 * V[:, 4] + 1e-9 * rng.standard_normal(12)
        G = _gram(np.column_stack([V, extra]))
        assert np.linalg.eigvalsh(G.toarray()).min() < 1e-12 * G.diagonal().max()
        dropped = dependent_columns(G)
        assert dropped.size == 1
        assert dropped[0] in (1, 4, 6)
        keep = np.setdiff1d(np.arange(7), dropped)
        factor_positive_definite(G[keep][:, keep])

    def test_badly_scaled_columns_are_not_dependent(self):
        rng = np.random.default_rng(2)
        V = rng.standard_normal((10, 5)) * np.array([1e-9, 1.0, 1e6, 1e-3, 1.0])
        assert dependent_columns(_gram(V)).size == 0

    def test_zero_column_is_rejected(self):
        G = sp.diags([1.0, 0.0, 2.0]).tocsr()
        with pytest.raises(FactorizationError):
            dependent_columns(G)


class TestIndefiniteFactor:
    @pytest.mark.parametrize("dense_limit", [2000, 0])
    def test_solves_indefinite_system(self, dense_limit):
        M = sp.diags([-3.0, 0.5, 2.0, -1.0]).tocsr()
        factor = factor_indefinite(M, dense_limit)
        np.testing.assert_allclose(factor.solve(np.ones(4)), [-1 / 3, 2.0, 0.5, -1.0])
        with pytest.raises(FactorizationError):
            factor_positive_definite(M, dense_limit)
        assert count_negative_pivots(M, dense_limit) == 2

    @pytest.mark.parametrize("dense_limit", [2000, 0])
    def test_singular_is_rejected(self, dense_limit):
        M = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(FactorizationError):
            factor_indefinite(M, dense_limit)
