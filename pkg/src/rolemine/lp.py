"""LP relaxation of the covering program.

``solve_cover_lp`` is the default engine; anything with the same call
signature can be passed wherever an ``lp_solver`` argument is accepted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse

from .exceptions import ContractError


@dataclass
class LPResult:
    objective: float
    x: np.ndarray
    duals: np.ndarray


def cover_matrix(col_rows: list, n_rows: int) -> sparse.csr_matrix:
    """Row-by-column 0/1 incidence matrix from per-column row lists."""
    indptr = [0]
    indices = []
    for rows in col_rows:
        indices.extend(rows)
        indptr.append(len(indices))
    data = np.ones(len(indices))
    return sparse.csc_matrix((data, indices, indptr), shape=(n_rows, len(col_rows))).tocsr()


def solve_cover_lp(col_rows: list, n_rows: int) -> LPResult:
    """Minimize ``sum x`` subject to ``A x >= 1, x >= 0``.

    ``col_rows[j]`` lists the rows column ``j`` covers. Returns the optimum,
    the primal point and the covering-row duals (all non-negative).
    """
    if n_rows == 0:
        return LPResult(0.0, np.zeros(len(col_rows)), np.zeros(0))
    A = cover_matrix(col_rows, n_rows)
    if (A.getnnz(axis=1) == 0).any():
        raise ContractError("some row is not covered by any column")
    res = optimize.linprog(
        c=np.ones(len(col_rows)),
        A_ub=-A,
        b_ub=-np.ones(n_rows),
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"LP solve failed: {res.message}")
    duals = np.maximum(-res.ineqlin.marginals, 0.0)
    return LPResult(float(res.fun), res.x, duals)
