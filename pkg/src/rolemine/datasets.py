"""Synthetic access matrices."""

from __future__ import annotations

import numpy as np

from .graph import AccessMatrix, RbacPolicy, Role


def make_rbac_instance(n_users=50, n_perms=40, n_roles=8, max_roles_per_user=3,
                       max_perms_per_role=6, seed=None):
    """Draw a random role set, assign it to users and return the induced matrix.

    Returns ``(matrix, policy)``. The policy is sound for the matrix, so its
    role count is an upper bound on the optimum. Users and permissions that
    end up unused are left out of the matrix.
    """
    rng = np.random.default_rng(seed)
    role_perms = []
    for _ in range(n_roles):
        k = int(rng.integers(1, max_perms_per_role + 1))
        role_perms.append(sorted(rng.choice(n_perms, size=min(k, n_perms), replace=False).tolist()))
    members: list[set] = [set() for _ in range(n_roles)]
    for u in range(n_users):
        k = int(rng.integers(1, max_roles_per_user + 1))
        for r in rng.choice(n_roles, size=min(k, n_roles), replace=False).tolist():
            members[r].add(u)
    pairs = sorted({(f"u{u}", f"p{p}") for r in range(n_roles) for u in members[r]
                    for p in role_perms[r]})
    g = AccessMatrix.from_pairs(pairs)
    roles = [Role({g.user_index(f"u{u}") for u in members[r]},
                  {g.perm_index(f"p{p}") for p in role_perms[r]}, "generator")
             for r in range(n_roles) if members[r]]
    return g, RbacPolicy(roles)


def random_bipartite(n_users, n_perms, density=0.5, seed=None, max_edges=None):
    """Random matrix with every entry on with probability ``density``.

    Returns ``None`` when no edge is drawn. ``max_edges`` keeps a random
    subset when more edges are drawn.
    """
    rng = np.random.default_rng(seed)
    X = rng.random((n_users, n_perms)) < density
    pairs = [(f"u{u}", f"p{p}") for u, p in zip(*np.nonzero(X))]
    if max_edges is not None and len(pairs) > max_edges:
        keep = sorted(rng.choice(len(pairs), size=max_edges, replace=False).tolist())
        pairs = [pairs[i] for i in keep]
    if not pairs:
        return None
    return AccessMatrix.from_pairs(pairs)
