"""Access matrices, bicliques, RBAC policies and edge adjacency.

An access matrix is a bipartite graph between users and permissions. Every
edge gets a dense integer id, and edge sets are carried around as Python int
bitsets keyed by those ids. Two edges ``(a, b)`` and ``(c, d)`` are adjacent
when ``(a, d)`` and ``(c, b)`` are edges too, so a set of pairwise adjacent
edges is exactly a biclique.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from ._bits import iter_bits, to_mask
from .exceptions import EmptyInstanceError, PolicyReferenceError

FORCED = "reduction-forced"
EXACT = "exact-cover"
GREEDY = "greedy"
LATTICE = "lattice"
LARGE = "large-biclique"
PROVENANCE_TAGS = (FORCED, EXACT, GREEDY, LATTICE, LARGE)


class AccessMatrix:
    """Immutable user/permission bipartite graph.

    Users and permissions keep first-appearance order. Edge ids are assigned
    in ``(user index, permission index)`` order and are dense in
    ``range(n_edges)``.
    """

    def __init__(self, users: Sequence[Hashable], perms: Sequence[Hashable],
                 edges: Iterable[tuple[int, int]], dropped_users=(), dropped_perms=()):
        self.users = tuple(users)
        self.perms = tuple(perms)
        pairs = sorted(set((int(u), int(p)) for u, p in edges))
        if not pairs:
            raise EmptyInstanceError("instance has no edges")
        n_u, n_p = len(self.users), len(self.perms)
        for u, p in pairs:
            if not (0 <= u < n_u and 0 <= p < n_p):
                raise ValueError(f"edge ({u}, {p}) refers to a missing vertex")
        self.edges = tuple(pairs)
        self.edge_index = {pair: i for i, pair in enumerate(self.edges)}
        self.dropped_users = tuple(dropped_users)
        self.dropped_perms = tuple(dropped_perms)

        user_perms = [0] * n_u
        perm_users = [0] * n_p
        user_edges = [0] * n_u
        perm_edges = [0] * n_p
        for i, (u, p) in enumerate(self.edges):
            user_perms[u] |= 1 << p
            perm_users[p] |= 1 << u
            user_edges[u] |= 1 << i
            perm_edges[p] |= 1 << i
        if not all(user_perms) or not all(perm_users):
            raise ValueError("every user and permission needs at least one edge")
        self.user_perms = tuple(user_perms)
        self.perm_users = tuple(perm_users)
        self.user_edges = tuple(user_edges)
        self.perm_edges = tuple(perm_edges)
        self.all_edges = (1 << len(self.edges)) - 1
        self._user_pos = {u: i for i, u in enumerate(self.users)}
        self._perm_pos = {p: i for i, p in enumerate(self.perms)}
        self._adjacency = None

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Hashable, Hashable]]) -> "AccessMatrix":
        """Build from (user id, permission id) pairs, dropping duplicates."""
        users: dict = {}
        perms: dict = {}
        edges = []
        for u, p in pairs:
            ui = users.setdefault(u, len(users))
            pi = perms.setdefault(p, len(perms))
            edges.append((ui, pi))
        return cls(list(users), list(perms), edges)

    @classmethod
    def from_dense(cls, X, user_ids=None, perm_ids=None) -> "AccessMatrix":
        """Build from a 0/1 matrix with users as rows.

        All-zero rows and columns are dropped with a warning; their ids are
        kept in ``dropped_users`` / ``dropped_perms``.
        """
        X = np.asarray(X)
        if X.ndim != 2:
            raise ValueError(f"expected a 2-d matrix, got shape {X.shape}")
        n_u, n_p = X.shape
        user_ids = list(range(n_u)) if user_ids is None else list(user_ids)
        perm_ids = list(range(n_p)) if perm_ids is None else list(perm_ids)
        nz = X != 0
        keep_u = np.flatnonzero(nz.any(axis=1))
        keep_p = np.flatnonzero(nz.any(axis=0))
        dropped_u = [user_ids[i] for i in range(n_u) if not nz[i].any()]
        dropped_p = [perm_ids[j] for j in range(n_p) if not nz[:, j].any()]
        if dropped_u or dropped_p:
            warnings.warn(
                f"dropping {len(dropped_u)} isolated users and {len(dropped_p)} isolated permissions",
                stacklevel=2,
            )
        upos = {u: i for i, u in enumerate(keep_u)}
        ppos = {p: i for i, p in enumerate(keep_p)}
        rows, cols = np.nonzero(nz)
        edges = [(upos[r], ppos[c]) for r, c in zip(rows.tolist(), cols.tolist())]
        return cls([user_ids[i] for i in keep_u], [perm_ids[j] for j in keep_p], edges,
                   dropped_users=dropped_u, dropped_perms=dropped_p)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_perms(self) -> int:
        return len(self.perms)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def user_index(self, user) -> int:
        try:
            return self._user_pos[user]
        except KeyError:
            raise PolicyReferenceError(f"unknown user {user!r}") from None

    def perm_index(self, perm) -> int:
        try:
            return self._perm_pos[perm]
        except KeyError:
            raise PolicyReferenceError(f"unknown permission {perm!r}") from None

    def edge_id(self, user, perm) -> int:
        """Edge id for a (user id, permission id) pair."""
        key = (self.user_index(user), self.perm_index(perm))
        try:
            return self.edge_index[key]
        except KeyError:
            raise KeyError(f"({user!r}, {perm!r}) is not an edge") from None

    def edge_label(self, e: int) -> tuple:
        u, p = self.edges[e]
        return self.users[u], self.perms[p]

    def edge_pairs(self) -> list[tuple]:
        return [self.edge_label(e) for e in range(self.n_edges)]

    def has_edge(self, u: int, p: int) -> bool:
        return bool(self.user_perms[u] >> p & 1)

    def vertices_of(self, edge_mask: int) -> tuple[frozenset, frozenset]:
        """User and permission indices touched by a set of edges."""
        us, ps = set(), set()
        for e in iter_bits(edge_mask):
            u, p = self.edges[e]
            us.add(u)
            ps.add(p)
        return frozenset(us), frozenset(ps)

    def block_mask(self, users: Iterable[int], perms: Iterable[int]) -> int:
        """Edge ids of ``users x perms`` that exist in the matrix."""
        pm = 0
        for p in perms:
            pm |= self.perm_edges[p]
        um = 0
        for u in users:
            um |= self.user_edges[u]
        return um & pm

    def adjacency(self, universe: int | None = None) -> "EdgeAdjacency":
        if universe is None or universe == self.all_edges:
            if self._adjacency is None:
                self._adjacency = EdgeAdjacency(self, self.all_edges)
            return self._adjacency
        return EdgeAdjacency(self, universe)

    def to_dense(self) -> np.ndarray:
        X = np.zeros((self.n_users, self.n_perms), dtype=bool)
        for u, p in self.edges:
            X[u, p] = True
        return X

    def __repr__(self):
        return f"AccessMatrix(n_users={self.n_users}, n_perms={self.n_perms}, n_edges={self.n_edges})"


class EdgeAdjacency:
    """Closed edge neighbourhoods judged against a universe of edges.

    Rows are computed on first use and cached; ``materialize`` fills the
    whole table up front.
    """

    def __init__(self, g: AccessMatrix, universe: int):
        if universe & ~g.all_edges:
            raise ValueError("universe contains ids that are not edges of the matrix")
        self.g = g
        self.universe = universe
        self._rows: dict[int, int] = {}
        # edges owned by the universe-neighbours of a permission / user
        self._by_perm: dict[int, int] = {}
        self._by_user: dict[int, int] = {}

    def closed(self, e: int) -> int:
        """Bitset of ``e`` and every universe edge adjacent to it."""
        row = self._rows.get(e)
        if row is None:
            row = self._compute(e)
            self._rows[e] = row
        return row

    def _compute(self, e: int) -> int:
        g, U = self.g, self.universe
        if not U >> e & 1:
            return 0
        u, p = g.edges[e]
        users_mask = self._by_perm.get(p)
        if users_mask is None:
            users_mask = 0
            for f in iter_bits(g.perm_edges[p] & U):
                users_mask |= g.user_edges[g.edges[f][0]]
            self._by_perm[p] = users_mask
        perms_mask = self._by_user.get(u)
        if perms_mask is None:
            perms_mask = 0
            for f in iter_bits(g.user_edges[u] & U):
                perms_mask |= g.perm_edges[g.edges[f][1]]
            self._by_user[u] = perms_mask
        return users_mask & perms_mask & U

    def materialize(self, edges: int | None = None) -> "EdgeAdjacency":
        for e in iter_bits(self.universe if edges is None else edges):
            self.closed(e)
        return self

    def adjacent(self, e: int, f: int) -> bool:
        return bool(self.closed(e) >> f & 1)


def _universe(g: AccessMatrix, universe) -> int:
    if universe is None:
        return g.all_edges
    if isinstance(universe, int):
        return universe
    return to_mask(universe)


def edges_adjacent(g: AccessMatrix, e: int, f: int, universe=None) -> bool:
    """True when the edges among the endpoints of ``e`` and ``f`` all lie in ``universe``."""
    U = _universe(g, universe)
    if not (U >> e & 1 and U >> f & 1):
        return False
    (a, b), (c, d) = g.edges[e], g.edges[f]
    cross1 = g.edge_index.get((a, d))
    cross2 = g.edge_index.get((c, b))
    return (cross1 is not None and bool(U >> cross1 & 1)
            and cross2 is not None and bool(U >> cross2 & 1))


def neighbours(g: AccessMatrix, e: int, universe=None) -> frozenset[int]:
    U = _universe(g, universe)
    return frozenset(iter_bits(g.adjacency(U).closed(e) & ~(1 << e)))


def induced_is_biclique(g: AccessMatrix, user_set, perm_set, universe=None) -> bool:
    """True iff every (user, permission) pair of the two index sets is in ``universe``."""
    U = _universe(g, universe)
    for u in user_set:
        for p in perm_set:
            e = g.edge_index.get((u, p))
            if e is None or not U >> e & 1:
                return False
    return True


@dataclass(frozen=True)
class Biclique:
    """A set of pairwise adjacent edges together with its endpoints."""

    edges: frozenset
    users: frozenset
    perms: frozenset

    @classmethod
    def from_mask(cls, g: AccessMatrix, mask: int) -> "Biclique":
        users, perms = g.vertices_of(mask)
        if __debug__:
            for u in users:
                assert all(g.user_perms[u] >> p & 1 for p in perms), "not a biclique"
        return cls(frozenset(iter_bits(mask)), users, perms)

    @property
    def mask(self) -> int:
        return to_mask(self.edges)

    def __len__(self):
        return len(self.edges)


@dataclass
class Role:
    users: frozenset
    perms: frozenset
    provenance: str = EXACT

    def __post_init__(self):
        self.users = frozenset(self.users)
        self.perms = frozenset(self.perms)


@dataclass
class RbacPolicy:
    """Roles over the user/permission indices of one access matrix."""

    roles: list = field(default_factory=list)

    @property
    def n_roles(self) -> int:
        return len(self.roles)

    def __len__(self):
        return len(self.roles)

    def granted(self, g: AccessMatrix) -> set[tuple[int, int]]:
        out = set()
        for r in self.roles:
            for u in r.users:
                for p in r.perms:
                    out.add((u, p))
        return out

    def to_dict(self, g: AccessMatrix) -> dict:
        roles = []
        for r in self.roles:
            roles.append({
                "users": [str(g.users[u]) for u in sorted(r.users)],
                "perms": [str(g.perms[p]) for p in sorted(r.perms)],
                "provenance": r.provenance,
            })
        return {"n_roles": len(roles), "roles": roles}

    def to_json(self, g: AccessMatrix, indent=2) -> str:
        return json.dumps(self.to_dict(g), indent=indent)

    @classmethod
    def from_dict(cls, data: dict, g: AccessMatrix) -> "RbacPolicy":
        by_user = {str(u): i for i, u in enumerate(g.users)}
        by_perm = {str(p): i for i, p in enumerate(g.perms)}
        roles = []
        for k, r in enumerate(data["roles"]):
            try:
                users = [by_user[str(u)] for u in r["users"]]
                perms = [by_perm[str(p)] for p in r["perms"]]
            except KeyError as exc:
                raise PolicyReferenceError(f"role {k}: unknown identifier {exc.args[0]!r}") from None
            roles.append(Role(users, perms, r.get("provenance", EXACT)))
        return cls(roles)


@dataclass
class VerificationReport:
    uncovered: list
    overgranted: list
    n_roles: int
    empty_roles: list = field(default_factory=list)

    @property
    def sound(self) -> bool:
        return not self.uncovered and not self.overgranted and not self.empty_roles

    def to_dict(self) -> dict:
        return {
            "sound": self.sound,
            "n_roles": self.n_roles,
            "uncovered": [list(map(str, e)) for e in self.uncovered],
            "overgranted": [list(map(str, e)) for e in self.overgranted],
            "empty_roles": list(self.empty_roles),
        }


def verify_policy(g: AccessMatrix, pol: RbacPolicy) -> VerificationReport:
    """Compare what ``pol`` grants against the edges of ``g``.

    Uncovered edges and over-granted pairs are reported as (user id,
    permission id) labels.
    """
    granted_by_user = [0] * g.n_users
    empty = []
    for k, r in enumerate(pol.roles):
        if not r.users or not r.perms:
            empty.append(k)
        pm = 0
        for p in r.perms:
            if not 0 <= p < g.n_perms:
                raise PolicyReferenceError(f"role {k}: permission index {p} out of range")
            pm |= 1 << p
        for u in r.users:
            if not 0 <= u < g.n_users:
                raise PolicyReferenceError(f"role {k}: user index {u} out of range")
            granted_by_user[u] |= pm
    uncovered, over = [], []
    for u in range(g.n_users):
        have, want = granted_by_user[u], g.user_perms[u]
        for p in iter_bits(want & ~have):
            uncovered.append((g.users[u], g.perms[p]))
        for p in iter_bits(have & ~want):
            over.append((g.users[u], g.perms[p]))
    return VerificationReport(uncovered, over, pol.n_roles, empty)


def roles_from_bicliques(g: AccessMatrix, masks: Iterable[int], provenance: str) -> list[Role]:
    out = []
    for m in masks:
        users, perms = g.vertices_of(m)
        out.append(Role(users, perms, provenance))
    return out


def edge_per_role_policy(g: AccessMatrix) -> RbacPolicy:
    return RbacPolicy([Role({u}, {p}, EXACT) for u, p in g.edges])
