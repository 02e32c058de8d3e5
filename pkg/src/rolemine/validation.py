"""Input checks for array-shaped access matrices."""

from __future__ import annotations

import numpy as np
from scipy import sparse
from sklearn.utils.validation import check_array


def check_access_matrix(X, *, min_ones: int = 1) -> sparse.csr_matrix:
    """Validate a 0/1 user-by-permission matrix and return it as boolean CSR.

    Dense arrays, nested lists and scipy sparse matrices are accepted. Any
    value other than 0 or 1 is rejected.
    """
    X = check_array(X, accept_sparse=("csr", "csc", "coo"), dtype=None,
                    ensure_all_finite=True, ensure_min_samples=1, ensure_min_features=1)
    X = sparse.csr_matrix(X)
    X.eliminate_zeros()
    vals = X.data
    if vals.size and not (vals.dtype == bool or np.all(vals == 1)):
        bad = vals[vals != 1]
        raise ValueError(f"access matrix must be binary; found value {bad[0]!r}")
    if X.nnz < min_ones:
        raise ValueError(f"access matrix needs at least {min_ones} granted pair(s)")
    return X.astype(bool)


def check_assignment(U, n_roles: int) -> np.ndarray:
    """Validate a user-by-role assignment for ``n_roles`` roles."""
    U = check_array(U, accept_sparse=("csr", "csc", "coo"), dtype=None)
    if sparse.issparse(U):
        U = U.toarray()
    U = np.asarray(U)
    if U.shape[1] != n_roles:
        raise ValueError(f"expected {n_roles} role columns, got {U.shape[1]}")
    if not np.isin(U, (0, 1)).all():
        raise ValueError("role assignment must be binary")
    return U.astype(bool)
