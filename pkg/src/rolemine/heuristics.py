"""Heuristics for instances with too many maximal bicliques.

Two families live here. The greedy vertex-star cover with lattice
postprocessing is the baseline and runs on the raw matrix. The large-biclique
phase adopts big maximal bicliques as roles until the remainder is small
enough for the exact pipeline.
"""

from __future__ import annotations

import enum
import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ._bits import iter_bits
from ._progress import Heartbeat
from .config import MinerConfig, MiningResult
from .cover import _finish_exact
from .enumeration import DEFAULT_THRESHOLD, EnumContext, iter_maximal_masks
from .exceptions import ContractError, UnsoundPolicyError
from .graph import GREEDY, LARGE, LATTICE, AccessMatrix, RbacPolicy, Role, verify_policy
from .reduction import reduce

logger = logging.getLogger(__name__)


class GreedyStrategy(enum.Enum):
    SMALLEST_DEGREE = "smallest"
    LARGEST_DEGREE = "largest"


@dataclass
class HardConfig:
    large_edge_threshold: int = 200
    count_threshold: int = DEFAULT_THRESHOLD
    n_pieces: int = 1

    def __post_init__(self):
        if self.large_edge_threshold < 1 or self.count_threshold < 1:
            raise ValueError("thresholds must be >= 1")
        if self.n_pieces < 1:
            raise ValueError("n_pieces must be >= 1")


def greedy_cover(g: AccessMatrix, strategy=GreedyStrategy.SMALLEST_DEGREE, seed=0,
                 first=None) -> RbacPolicy:
    """Cover the matrix with vertex stars, picking by residual degree.

    Users and permissions share one pool. The picked vertex ``v`` gives
    ``S``, its residual neighbours; ``T`` is every vertex adjacent to all of
    ``S`` in the residual graph; ``T x S`` becomes a role and its edges are
    deleted. Ties are broken by a seeded random choice. ``first`` forces the
    first pick, given as ``("user" | "perm", index)``.
    """
    strategy = GreedyStrategy(strategy)
    rng = random.Random(seed)
    user_res = list(g.user_perms)
    perm_res = list(g.perm_users)
    remaining = g.n_edges
    roles = []
    pick = first
    while remaining:
        if pick is None:
            pick = _pick_vertex(user_res, perm_res, strategy, rng)
        side, v = pick
        pick = None
        if side == "user":
            S = user_res[v]
            T = -1
            for p in iter_bits(S):
                T &= perm_res[p]
            users, perms = T, S
        else:
            S = perm_res[v]
            T = -1
            for u in iter_bits(S):
                T &= user_res[u]
            users, perms = S, T
        if not S:
            raise ContractError(f"picked {side} {v} has no residual edges")
        for u in iter_bits(users):
            remaining -= (user_res[u] & perms).bit_count()
            user_res[u] &= ~perms
        for p in iter_bits(perms):
            perm_res[p] &= ~users
        roles.append(Role(iter_bits(users), iter_bits(perms), GREEDY))
    return RbacPolicy(roles)


def _pick_vertex(user_res, perm_res, strategy, rng):
    best = None
    tied = []
    smallest = strategy is GreedyStrategy.SMALLEST_DEGREE
    for side, res in (("user", user_res), ("perm", perm_res)):
        for v, m in enumerate(res):
            if not m:
                continue
            d = m.bit_count()
            if best is None or (d < best if smallest else d > best):
                best, tied = d, [(side, v)]
            elif d == best:
                tied.append((side, v))
    return tied[0] if len(tied) == 1 else rng.choice(tied)


def lattice_postprocess(pol: RbacPolicy, g: AccessMatrix | None = None) -> RbacPolicy:
    """Fold away roles whose permissions are covered by other roles.

    For a role ``r`` and other roles ``r1..rk`` with permissions inside
    ``perms(r)``, ``r`` keeps only the permissions none of them has, and its
    users join every ``ri``. If nothing is left, ``r`` disappears. Repeated
    until no role contains another's permissions.
    """
    if g is not None and not verify_policy(g, pol).sound:
        raise ContractError("lattice postprocessing needs a sound input policy")
    users = []
    perms = []
    prov = []
    for r in pol.roles:
        users.append(sum(1 << u for u in r.users))
        perms.append(sum(1 << p for p in r.perms))
        prov.append(r.provenance)
    alive = [bool(m) for m in perms]
    changed = True
    while changed:
        changed = False
        by_perm: dict[int, set[int]] = {}
        for i, m in enumerate(perms):
            if alive[i]:
                for p in iter_bits(m):
                    by_perm.setdefault(p, set()).add(i)
        order = sorted((i for i in range(len(perms)) if alive[i]),
                       key=lambda i: (-perms[i].bit_count(), i))
        for r in order:
            if not alive[r]:
                continue
            pr = perms[r]
            cands = set()
            for p in iter_bits(pr):
                cands |= by_perm.get(p, set())
            cands.discard(r)
            inside = [i for i in cands if alive[i] and perms[i] & ~pr == 0]
            if not inside:
                continue
            inside.sort(key=lambda i: (-perms[i].bit_count(), i))
            union = 0
            picked = []
            for i in inside:
                if perms[i] & ~union:
                    picked.append(i)
                    union |= perms[i]
            for i in picked:
                users[i] |= users[r]
            rest = pr & ~union
            for p in iter_bits(pr & ~rest):
                by_perm[p].discard(r)
            if rest:
                perms[r] = rest
                prov[r] = LATTICE
            else:
                alive[r] = False
                perms[r] = 0
            changed = True
    roles = [Role(iter_bits(users[i]), iter_bits(perms[i]), prov[i])
             for i in range(len(perms)) if alive[i]]
    return RbacPolicy(roles)


def run_prior_heuristic(g: AccessMatrix, strategy: str = "best", seed: int = 0) -> MiningResult:
    """Greedy cover plus lattice postprocessing; ``best`` tries both orders."""
    names = ["smallest", "largest"] if strategy == "best" else [strategy]
    stats: dict = {"seed": seed, "n_edges": g.n_edges}
    best = None
    for name in names:
        t = time.monotonic()
        greedy = greedy_cover(g, GreedyStrategy(name), seed)
        post = lattice_postprocess(greedy)
        stats[f"{name}_greedy_roles"] = greedy.n_roles
        stats[f"{name}_lattice_roles"] = post.n_roles
        stats[f"{name}_time"] = time.monotonic() - t
        if best is None or post.n_roles < best[1].n_roles:
            best = (name, post, greedy)
    name, post, greedy = best
    stats.update(strategy=name, roles_greedy=greedy.n_roles, roles_total=post.n_roles)
    _require_sound(g, post)
    return MiningResult(post, stats)


def large_biclique_phase(ctx: EnumContext, cfg: HardConfig | None = None):
    """Adopt large maximal bicliques while the remainder is hard.

    Each pass counts maximal bicliques of the current remainder. Nothing is
    adopted until the count passes the threshold; bicliques seen before that
    with at least ``large_edge_threshold`` edges still active are held back
    and adopted once the pass turns out hard, re-checking their fresh edge
    count at that moment. Past the threshold the pass adopts the next large
    biclique and restarts. A pass that stays within the threshold ends the
    phase. If a hard pass finds nothing large, the biclique with the most
    fresh edges is taken so the loop keeps moving.

    Returns ``(roles, active, stats)`` where roles are edge bitsets.
    """
    cfg = cfg or HardConfig()
    threshold = min(cfg.count_threshold, ctx.count_threshold)
    large = cfg.large_edge_threshold
    active = ctx.active
    roles: list[int] = []
    passes = 0
    fallbacks = 0
    beat = Heartbeat("large-biclique", logger)
    while active:
        passes += 1
        pass_ctx = ctx.with_active(active)
        count = 0
        held: list[int] = []
        adopted = 0
        biggest, biggest_size = 0, 0
        for m in iter_maximal_masks(pass_ctx):
            count += 1
            size = (m & active).bit_count()
            if count <= threshold:
                if size >= large:
                    held.append(m)
                elif size > biggest_size:
                    biggest, biggest_size = m, size
                continue
            if count == threshold + 1:
                for h in held:
                    if (h & active).bit_count() >= large:
                        roles.append(h)
                        active &= ~h
                        adopted += 1
                size = (m & active).bit_count()
            if size >= large:
                roles.append(m)
                active &= ~m
                adopted += 1
            elif size > biggest_size:
                biggest, biggest_size = m, size
            if adopted:
                break
            beat.tick(lambda: f"pass {passes}: {count:,} bicliques, {len(roles)} adopted, "
                              f"{active.bit_count()} edges left")
        if count <= threshold:
            break
        if not adopted:
            fallbacks += 1
            roles.append(biggest)
            active &= ~biggest
            logger.info("no biclique with %d fresh edges; adopting one with %d", large, biggest_size)
    stats = {"large_passes": passes, "large_fallbacks": fallbacks, "roles_large": len(roles)}
    return roles, active, stats


def mine_hard(g: AccessMatrix, config: MinerConfig | None = None) -> MiningResult:
    """Reduction, large-biclique phase, then the exact pipeline on what is left."""
    config = config or MinerConfig()
    stats: dict = {"n_edges": g.n_edges}
    t = time.monotonic()
    state = reduce(g)
    stats["time_reduction"] = time.monotonic() - t
    stats["n_edges_after_reduction"] = state.n_active
    stats["pct_edges_after_reduction"] = 100.0 * state.n_active / g.n_edges
    t = time.monotonic()
    ctx = EnumContext(g, state.active, state.all_edges, config.count_threshold)
    hc = HardConfig(config.large_edge_threshold, config.count_threshold)
    masks, active, phase = large_biclique_phase(ctx, hc)
    stats.update(phase)
    stats["time_large_phase"] = time.monotonic() - t
    large = [Role(*g.vertices_of(m), LARGE) for m in masks]
    result = _finish_exact(g, state, config, stats, extra_roles=large, active=active)
    if large:
        # the cover is only optimal for what the large phase left behind
        result.stats["remainder_proof"] = result.stats["proof"]
        result.stats["proof"] = "heuristic"
    return result


def split_pieces(g: AccessMatrix, n_pieces: int) -> list[AccessMatrix]:
    """Cut the users into ``n_pieces`` contiguous blocks of near-equal size."""
    if n_pieces < 1:
        raise ValueError("n_pieces must be >= 1")
    if n_pieces > g.n_users:
        raise ValueError(f"cannot split {g.n_users} users into {n_pieces} pieces")
    if n_pieces == 1:
        return [g]
    base, extra = divmod(g.n_users, n_pieces)
    pieces = []
    start = 0
    for k in range(n_pieces):
        size = base + (1 if k < extra else 0)
        block = range(start, start + size)
        start += size
        pairs = [(g.users[u], g.perms[p]) for u in block for p in iter_bits(g.user_perms[u])]
        pieces.append(AccessMatrix.from_pairs(pairs))
    return pieces


def _mine_piece(args):
    piece, config = args
    return mine_hard(piece, config)


def mine_hardest(g: AccessMatrix, config: MinerConfig | None = None) -> MiningResult:
    """Mine user pieces separately, merge, then run lattice postprocessing."""
    config = config or MinerConfig(n_pieces=2)
    if config.n_pieces < 2:
        raise ValueError("mine_hardest needs n_pieces >= 2")
    pieces = split_pieces(g, config.n_pieces)
    t = time.monotonic()
    jobs = [(p, config) for p in pieces]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_mine_piece, jobs))
    else:
        results = [_mine_piece(j) for j in jobs]
    combined = []
    for piece, res in zip(pieces, results):
        for r in res.policy.roles:
            combined.append(Role(
                (g.user_index(piece.users[u]) for u in r.users),
                (g.perm_index(piece.perms[p]) for p in r.perms),
                r.provenance,
            ))
    merged = RbacPolicy(combined)
    final = lattice_postprocess(merged)
    stats = {
        "n_edges": g.n_edges,
        "n_pieces": config.n_pieces,
        "roles_initial": merged.n_roles,
        "roles_total": final.n_roles,
        "piece_roles": [r.n_roles for r in results],
        "time_total": time.monotonic() - t,
    }
    _require_sound(g, final)
    return MiningResult(final, stats)


def error_pct(found: int, bound: int) -> float:
    """Relative excess of ``found`` over ``bound``, in percent."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    return (found - bound) / bound * 100


def _require_sound(g, pol):
    report = verify_policy(g, pol)
    if not report.sound:
        raise UnsoundPolicyError(str(report.to_dict()))
