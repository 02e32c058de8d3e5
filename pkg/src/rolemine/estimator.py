"""scikit-learn style wrapper around the mining pipelines.

Role mining is a boolean factorisation ``X = UA o PA`` of the user-by-
permission matrix, so the estimator learns ``PA`` (one row per role) and
``transform`` maps users to roles.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .config import MinerConfig
from .enumeration import DEFAULT_THRESHOLD
from .graph import AccessMatrix
from .harness import MODES, run_pipeline
from .validation import check_access_matrix, check_assignment


class RoleMiner(TransformerMixin, BaseEstimator):
    """Mine a role set that reproduces a binary access matrix exactly.

    Parameters
    ----------
    mode : {"exact", "heuristic", "hard", "hardest", "bnp"}
        Which pipeline to run.
    count_threshold : int
        Above this many maximal bicliques the exact path gives up.
    large_edge_threshold : int
        Fresh-edge count for adopting a biclique in the hard pipeline.
    n_pieces : int
        User pieces for ``mode="hardest"``.
    strategy : {"best", "smallest", "largest"}
        Vertex order for the greedy heuristic.
    seed : int
        Tie-breaking seed for the greedy heuristic.
    time_budget : float or None
        Seconds allowed for the cover search.

    Attributes
    ----------
    permission_assignment_ : ndarray of shape (n_roles, n_features)
    user_assignment_ : ndarray of shape (n_samples, n_roles)
    roles_ : list of (users, perms) tuples of row and column indices
    n_roles_ : int
    report_ : RunReport
    """

    def __init__(self, mode="exact", count_threshold=DEFAULT_THRESHOLD, large_edge_threshold=200,
                 n_pieces=1, strategy="best", seed=0, time_budget=None):
        self.mode = mode
        self.count_threshold = count_threshold
        self.large_edge_threshold = large_edge_threshold
        self.n_pieces = n_pieces
        self.strategy = strategy
        self.seed = seed
        self.time_budget = time_budget

    def fit(self, X, y=None):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        X = check_access_matrix(X)
        n_samples, n_features = X.shape
        coo = X.tocoo()
        g = AccessMatrix.from_pairs(sorted(zip(coo.row.tolist(), coo.col.tolist())))
        config = MinerConfig(
            count_threshold=self.count_threshold,
            large_edge_threshold=self.large_edge_threshold,
            n_pieces=self.n_pieces,
            strategy=self.strategy,
            seed=self.seed,
            time_budget=self.time_budget,
        )
        self.report_, policy = run_pipeline(g, self.mode, config, name="X")

        roles = []
        for r in policy.roles:
            roles.append((sorted(g.users[u] for u in r.users), sorted(g.perms[p] for p in r.perms)))
        roles.sort(key=lambda r: (r[1], r[0]))
        ua = np.zeros((n_samples, len(roles)), dtype=bool)
        pa = np.zeros((len(roles), n_features), dtype=bool)
        for k, (users, perms) in enumerate(roles):
            ua[users, k] = True
            pa[k, perms] = True
        self.roles_ = roles
        self.user_assignment_ = ua
        self.permission_assignment_ = pa
        self.components_ = pa
        self.n_roles_ = len(roles)
        self.n_features_in_ = n_features
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).user_assignment_.copy()

    def transform(self, X):
        """Assign every role whose permissions the user holds in full."""
        check_is_fitted(self, "permission_assignment_")
        X = check_access_matrix(X, min_ones=0)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        held = X.astype(np.int32) @ self.permission_assignment_.T.astype(np.int32)
        need = self.permission_assignment_.sum(axis=1)
        return np.asarray(held) == need

    def inverse_transform(self, U):
        """Boolean product of a user-by-role matrix with the learned roles."""
        check_is_fitted(self, "permission_assignment_")
        U = check_assignment(U, self.n_roles_)
        return (U.astype(np.int32) @ self.permission_assignment_.astype(np.int32)) > 0
