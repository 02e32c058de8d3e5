"""Dominator-based edge reduction and role playback.

An edge ``d`` dominates ``e`` when ``d`` belongs to every maximal biclique
that contains ``e``; equivalently the closed neighbourhood of ``d`` contains
that of ``e``. Dominators can be set aside and re-attached afterwards to any
role that grants ``e``, without changing the optimum. Removed edges still
count when judging adjacency between the edges that remain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TextIO

from ._bits import iter_bits
from ._progress import Heartbeat
from .exceptions import ContractError
from .graph import FORCED, AccessMatrix, Biclique, RbacPolicy, Role, verify_policy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReductionState:
    """Result of running :func:`reduce` on an access matrix.

    ``active`` and ``all_edges`` are edge-id bitsets. ``removal_log`` holds
    ``(dominator, dominated)`` pairs in removal order.
    """

    g: AccessMatrix
    active: int
    removal_log: tuple
    forced_roles: tuple
    all_edges: int
    iterations: int = 0
    removal_iteration: tuple = field(default=(), repr=False)

    @property
    def active_edges(self) -> frozenset:
        return frozenset(iter_bits(self.active))

    @property
    def n_active(self) -> int:
        return self.active.bit_count()

    @property
    def dominators(self) -> frozenset:
        return frozenset(d for d, _ in self.removal_log)


def dominates(g: AccessMatrix, d: int, e: int, active=None, universe=None) -> bool:
    """Neighbourhood test for ``d`` dominating ``e``.

    Neighbours are taken among ``active`` edges, with adjacency judged
    against ``universe``; both default to every edge of ``g``.
    """
    U = g.all_edges if universe is None else universe
    A = U if active is None else active
    if isinstance(A, (set, frozenset, list, tuple)):
        A = sum(1 << x for x in A)
    if isinstance(U, (set, frozenset, list, tuple)):
        U = sum(1 << x for x in U)
    if d == e or not (A >> d & 1 and A >> e & 1):
        raise ContractError("dominates() needs two distinct active edges")
    adj = g.adjacency(U)
    closed_e = adj.closed(e) & A
    closed_d = adj.closed(d) & A
    return closed_e & ~closed_d == 0


def reduce(g: AccessMatrix, trace: TextIO | None = None) -> ReductionState:
    """Remove dominators and isolated edges until nothing changes.

    Edges are scanned in ascending id, and so are each edge's neighbours.
    A removal is visible to every later test in the same pass.
    """
    adj = g.adjacency()
    closed = [adj.closed(e) for e in range(g.n_edges)]
    active = g.all_edges
    log: list[tuple[int, int]] = []
    log_iter: list[int] = []
    forced: list[int] = []
    iteration = 0
    beat = Heartbeat("reduce", logger)
    while True:
        iteration += 1
        changed = False
        for e in range(g.n_edges):
            if not active >> e & 1:
                continue
            ce = closed[e] & active
            rest = ce & ~(1 << e)
            for n in iter_bits(rest):
                if not active >> n & 1:
                    continue
                if ce & ~closed[n] == 0:
                    active &= ~(1 << n)
                    ce &= ~(1 << n)
                    log.append((n, e))
                    log_iter.append(iteration)
                    changed = True
                    if trace is not None:
                        trace.write(f"{iteration}\t{g.edge_label(n)}\t{g.edge_label(e)}\n")
            beat.tick(f"pass {iteration}, edge {e}/{g.n_edges}, {len(log)} removed")
        for e in iter_bits(active):
            if closed[e] & active == 1 << e:
                active &= ~(1 << e)
                forced.append(e)
                changed = True
                if trace is not None:
                    trace.write(f"{iteration}\tforced\t{g.edge_label(e)}\n")
        if not changed:
            break
    logger.info("reduction: %d of %d edges remain after %d passes",
                active.bit_count(), g.n_edges, iteration)
    return ReductionState(
        g=g,
        active=active,
        removal_log=tuple(log),
        forced_roles=tuple(Biclique.from_mask(g, 1 << e) for e in forced),
        all_edges=g.all_edges,
        iterations=iteration,
        removal_iteration=tuple(log_iter),
    )


def _covering_role(g: AccessMatrix, roles: list[Role], e: int) -> int | None:
    u, p = g.edges[e]
    for k, r in enumerate(roles):
        if u in r.users and p in r.perms:
            return k
    return None


def expand_roles(state: ReductionState, remainder_policy: RbacPolicy,
                 include_forced: bool = True) -> RbacPolicy:
    """Re-attach dominators to the roles that cover their annotated edges.

    ``remainder_policy`` must cover every active edge without granting
    anything outside the matrix. Forced roles are appended unless
    ``include_forced`` is False (when the caller already added them).
    Annotation chains are resolved by replaying the log backwards.
    """
    g = state.g
    roles: list[Role] = []
    # shrink each role to the endpoints of the active edges it grants so
    # dominators attached later are adjacent to everything in the role
    for r in remainder_policy.roles:
        block = g.block_mask(r.users, r.perms)
        if block.bit_count() != len(r.users) * len(r.perms):
            raise ContractError("remainder policy grants a pair outside the matrix")
        covered = block & state.active
        if not covered:
            continue
        users, perms = g.vertices_of(covered)
        roles.append(Role(users, perms, r.provenance))
    if include_forced:
        roles.extend(Role(b.users, b.perms, FORCED) for b in state.forced_roles)

    owner: dict[int, int] = {}
    for e in iter_bits(state.active):
        k = _covering_role(g, roles, e)
        if k is None:
            raise ContractError(f"remainder policy does not cover active edge {g.edge_label(e)}")
        owner[e] = k
    for b in state.forced_roles:
        (e,) = b.edges
        k = _covering_role(g, roles, e)
        if k is None:
            raise ContractError(f"forced role for {g.edge_label(e)} is missing")
        owner[e] = k

    users = [set(r.users) for r in roles]
    perms = [set(r.perms) for r in roles]
    for d, e in reversed(state.removal_log):
        k = owner.get(e)
        if k is None:
            raise ContractError(f"annotation target {g.edge_label(e)} has no role")
        ud, pd = g.edges[d]
        users[k].add(ud)
        perms[k].add(pd)
        owner[d] = k
    out = RbacPolicy([Role(users[k], perms[k], roles[k].provenance) for k in range(len(roles))])
    if __debug__:
        report = verify_policy(g, out)
        assert report.sound, f"expansion produced an unsound policy: {report.to_dict()}"
    return out
