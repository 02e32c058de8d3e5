"""Brute-force reference implementations used by the tests.

Everything here works from the plain edge list of a matrix with tuples and
sets only, so it shares no code with the library's bitset machinery.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from rolemine import AccessMatrix


def edge_list(g: AccessMatrix) -> list[tuple[int, int]]:
    return list(g.edges)


def adjacent(edges_set, e, f) -> bool:
    (a, b), (c, d) = e, f
    return (a, d) in edges_set and (c, b) in edges_set


def all_bicliques(edges, universe=None, within=None) -> list[frozenset]:
    """Every nonempty set of pairwise adjacent edges, as sets of edge indices.

    Adjacency is judged against ``universe`` (default: all edges) and only
    edges whose index is in ``within`` (default: all) are used.
    """
    uni = set(edges if universe is None else (edges[i] for i in universe))
    idx = sorted(range(len(edges)) if within is None else within)
    out = []

    def grow(chosen, start):
        for k in range(start, len(idx)):
            i = idx[k]
            if all(adjacent(uni, edges[i], edges[j]) for j in chosen):
                nxt = chosen + [i]
                out.append(frozenset(nxt))
                grow(nxt, k + 1)

    grow([], 0)
    return out


def maximal_bicliques(edges, universe=None, within=None) -> set[frozenset]:
    uni = set(edges if universe is None else (edges[i] for i in universe))
    idx = sorted(range(len(edges)) if within is None else within)
    res = set()
    for s in all_bicliques(edges, universe, within):
        if not any(i not in s and all(adjacent(uni, edges[i], edges[j]) for j in s) for i in idx):
            res.add(s)
    return res


def min_cover(columns, targets) -> int:
    """Fewest columns whose union contains ``targets``; exhaustive search."""
    targets = frozenset(targets)
    cols = [frozenset(c) & targets for c in columns]

    @lru_cache(maxsize=None)
    def solve(left: frozenset) -> int:
        if not left:
            return 0
        e = min(left)
        best = len(left)
        for c in cols:
            if e in c:
                best = min(best, 1 + solve(left - c))
        return best

    return solve(targets)


def min_biclique_cover(g: AccessMatrix) -> int:
    edges = edge_list(g)
    return min_cover(all_bicliques(edges), range(len(edges)))


def dominates_by_definition(edges, d, e, universe=None, within=None) -> bool:
    """``d`` lies in every maximal biclique that contains ``e``."""
    return all(d in m for m in maximal_bicliques(edges, universe, within) if e in m)


def policy_grants(pol) -> set[tuple[int, int]]:
    return {(u, p) for r in pol.roles for u in r.users for p in r.perms}


def random_matrix(rng: np.random.Generator, max_edges: int, max_side: int = 6) -> AccessMatrix:
    """Random matrix with between 1 and ``max_edges`` edges.

    Most draws land in the upper half of the edge range so that small
    graphs do not dominate a sample.
    """
    small = rng.random() < 0.2
    n_u = int(rng.integers(1 if small else 2, max_side + 1))
    n_p = int(rng.integers(1 if small else 2, max_side + 1))
    cells = [(u, p) for u in range(n_u) for p in range(n_p)]
    hi = min(max_edges, len(cells))
    lo = 1 if small else max(1, hi // 2)
    k = int(rng.integers(lo, hi + 1))
    pick = rng.choice(len(cells), size=k, replace=False)
    return AccessMatrix.from_pairs([(f"u{cells[i][0]}", f"p{cells[i][1]}") for i in sorted(pick)])


def maximal_bicliques_by_closure(g: AccessMatrix) -> set[frozenset]:
    """Maximal bicliques of the whole graph via closed user subsets.

    For every nonempty user subset ``S`` take the permissions ``P`` shared by
    all of ``S``; ``S x P`` is maximal exactly when ``S`` is in turn every
    user holding all of ``P``.
    """
    edges = edge_list(g)
    eid = {e: i for i, e in enumerate(edges)}
    users = sorted({u for u, _ in edges})
    perms_of = {u: {p for x, p in edges if x == u} for u in users}
    out = set()
    for bits in range(1, 1 << len(users)):
        S = [users[i] for i in range(len(users)) if bits >> i & 1]
        P = set.intersection(*(perms_of[u] for u in S))
        if not P:
            continue
        if {u for u in users if P <= perms_of[u]} != set(S):
            continue
        out.add(frozenset(eid[(u, p)] for u in S for p in P))
    return out
