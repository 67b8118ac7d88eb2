"""Symmetric factorization helpers shared by assembly checks and the eigensolver"""

import logging
import warnings
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from config import SOLVER_CONFIG
from errors import FactorizationError

logger = logging.getLogger(__name__)


@dataclass
class SymmetricFactor:
    """Cholesky or LU (dense), SuperLU (sparse)"""
    kind: str
    handle: Any
    dim: int

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.kind == "dense":
            return scipy.linalg.cho_solve(self.handle, rhs, check_finite=False)
        if self.kind == "dense_lu":
            return scipy.linalg.lu_solve(self.handle, rhs, check_finite=False)
        return self.handle.solve(rhs)


def use_dense(dim: int, dense_limit: int = None) -> bool:
    limit = SOLVER_CONFIG["dense_limit"] if dense_limit is None else dense_limit
    return dim <= min(limit, SOLVER_CONFIG["max_dense_limit"])


def as_dense(M: Any) -> np.ndarray:
    return M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)


def _sparse_lu(M: Any):
    return splu(sp.csc_matrix(M), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                options={"SymmetricMode": True})


def factor_positive_definite(M: Any, dense_limit: int = None) -> SymmetricFactor:
    """Factorize a symmetric matrix that must be positive definite.

    Raises FactorizationError when it is not: Cholesky breakdown on the dense
    path, a non-positive pivot of the symmetric LU on the sparse path.
    """
    dim = M.shape[0]
    if use_dense(dim, dense_limit):
        try:
            handle = scipy.linalg.cho_factor(as_dense(M), lower=True, check_finite=False)
        except np.linalg.LinAlgError as e:
            raise FactorizationError(f"Cholesky breakdown: {e}")
        return SymmetricFactor(kind="dense", handle=handle, dim=dim)

    try:
        lu = _sparse_lu(M)
    except RuntimeError as e:
        raise FactorizationError(f"sparse LU failed: {e}")
    if not np.array_equal(lu.perm_r, lu.perm_c):
        logger.debug("symmetric LU applied off-diagonal pivoting")
    pivots = lu.U.diagonal()
    if not np.all(np.isfinite(pivots)) or np.any(pivots <= 0):
        raise FactorizationError(
            f"matrix not positive definite ({int(np.sum(pivots <= 0))} non-positive pivots)")
    return SymmetricFactor(kind="sparse", handle=lu, dim=dim)


def factor_indefinite(M: Any, dense_limit: int = None) -> SymmetricFactor:
    """Pivoted LU of a symmetric, possibly indefinite matrix; FactorizationError if singular"""
    dim = M.shape[0]
    if use_dense(dim, dense_limit):
        dense = as_dense(M)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(dense, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if not np.all(np.isfinite(pivots)) or pivots.min() <= np.finfo(float).eps * pivots.max():
            raise FactorizationError("shifted matrix is numerically singular")
        return SymmetricFactor(kind="dense_lu", handle=(lu, piv), dim=dim)

    try:
        lu = splu(sp.csc_matrix(M), permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as e:
        raise FactorizationError(f"sparse LU failed: {e}")
    pivots = np.abs(lu.U.diagonal())
    if not np.all(np.isfinite(pivots)) or pivots.min() <= np.finfo(float).eps * pivots.max():
        raise FactorizationError("shifted matrix is numerically singular")
    return SymmetricFactor(kind="sparse", handle=lu, dim=dim)


def count_negative_pivots(M: Any, dense_limit: int = None) -> int:
    """Number of negative eigenvalues of symmetric M (Sylvester inertia)"""
    dim = M.shape[0]
    if use_dense(dim, dense_limit):
        _, d, _ = scipy.linalg.ldl(as_dense(M), lower=True, check_finite=False)
        return int(np.sum(np.linalg.eigvalsh(d) < 0))
    lu = _sparse_lu(M)
    return int(np.sum(lu.U.diagonal() < 0))


def dependent_columns(M: Any, tol: float = SOLVER_CONFIG["overlap_pivot_tol"],
                      max_rounds: int = SOLVER_CONFIG["max_deflation_rounds"]) -> np.ndarray:
    """Columns of a symmetric positive semidefinite M that are numerically dependent.

    M is scaled to unit diagonal and eliminated without pivoting, so a pivot is
    the squared distance of its column from the span of the columns eliminated
    before it. Columns with a pivot below tol are dropped and the rest is
    screened again until every pivot clears tol.
    """
    M = sp.csr_matrix(M)
    dim = M.shape[0]
    diag = M.diagonal()
    if not np.all(np.isfinite(diag)) or np.any(diag <= 0):
        raise FactorizationError(f"{int(np.sum(~(diag > 0)))} non-positive diagonal entries")
    scale = sp.diags(1.0 / np.sqrt(diag))
    scaled = (scale @ M @ scale).tocsr()

    keep = np.arange(dim)
    for _ in range(max_rounds):
        try:
            lu = _sparse_lu(scaled[keep][:, keep])
        except RuntimeError as e:
            raise FactorizationError(f"overlap screening failed: {e}")
        if not np.array_equal(lu.perm_r, lu.perm_c):
            raise FactorizationError("zero pivot forced off-diagonal pivoting")
        # pivot position perm_c[j] belongs to column j
        pivots = lu.U.diagonal()[lu.perm_c]
        bad = np.flatnonzero(~(pivots >= tol))
        if bad.size == 0:
            return np.setdiff1d(np.arange(dim), keep)
        logger.debug(f"overlap screening: {bad.size} dependent columns of {keep.size}")
        keep = np.delete(keep, bad)
        if keep.size < (1.0 - SOLVER_CONFIG["max_dependent_fraction"]) * dim:
            raise FactorizationError(
                f"{dim - keep.size} of {dim} columns are linearly dependent")

    raise FactorizationError(f"dependent columns not isolated in {max_rounds} rounds")


def norm_inf(M: Any) -> float:
    """Max absolute row sum"""
    if sp.issparse(M):
        return float(abs(M).sum(axis=1).max())
    return float(np.abs(np.asarray(M)).sum(axis=1).max())
