"""Column generation over maximal bicliques (experimental).

The LP relaxation of the cover is solved over a working set of bicliques;
its row duals weight the edges, and the pricing step looks for a biclique
whose total weight exceeds one. Such a biclique has negative reduced cost
and joins the working set. When none exists the relaxation value is the LP
bound over *all* maximal bicliques. Only the root relaxation is solved; there
is no branching on top.

On hard inputs progress can be very slow; the trace records the objective
after every round so it can be inspected or plotted.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ._bits import iter_bits, lowest_bit
from ._progress import Heartbeat
from .cover import OPTIMAL, CoverInstance, CoverSolution
from .enumeration import EnumContext
from .exceptions import ContractError
from .lp import solve_cover_lp

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-7
CONVERGENCE_SLACK = 1e-9


@dataclass
class PricingState:
    working_columns: list
    relaxation_objective: float
    duals: dict
    iteration: int
    trace: list = field(default_factory=list)
    converged: bool = False
    x: np.ndarray | None = None

    def write_trace_csv(self, path) -> None:
        write_trace_csv(self.trace, path)


def write_trace_csv(trace, path) -> None:
    """One ``elapsed_seconds,objective`` row per pricing round."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["elapsed_seconds", "objective"])
        for t, obj in trace:
            w.writerow([f"{t:.6f}", f"{obj:.9g}"])


def solve_lp_relaxation(inst: CoverInstance, lp_solver=solve_cover_lp):
    """LP value of the cover over ``inst``'s columns and the duals per edge id."""
    inst.check()
    res = lp_solver(inst.col_rows, inst.n_rows)
    duals = {e: float(res.duals[i]) for i, e in enumerate(inst.rows)}
    return res.objective, duals


def price(g, active: int, universe: int | None, duals: dict, ctx: EnumContext | None = None):
    """Heaviest set of pairwise adjacent active edges under ``duals``.

    Only edges with positive weight are considered, so the returned set may
    not be maximal. Among equally heavy sets the lexicographically smallest
    (as a sorted id list) is returned. Returns ``(value, edge_set)``.
    """
    if ctx is None:
        ctx = EnumContext(g, active, universe)
    if any(w < 0 for w in duals.values()):
        raise ContractError("duals must be non-negative")
    weights = {e: w for e, w in duals.items() if w > 0 and active >> e & 1}
    cand = 0
    for e in weights:
        cand |= 1 << e
    best_val, best_set = 0.0, 0
    if not cand:
        return 0.0, frozenset()
    N = ctx.neighbours

    def colour_bound(P: int) -> float:
        # partition P into groups of pairwise non-adjacent edges; a biclique
        # takes at most one edge from each group
        total = 0.0
        rest = P
        while rest:
            group_max = 0.0
            avail = rest
            while avail:
                v = lowest_bit(avail)
                avail &= ~(1 << v) & ~N(v)
                rest &= ~(1 << v)
                group_max = max(group_max, weights[v])
            total += group_max
        return total

    stack = [(0, 0.0, cand)]
    while stack:
        chosen, val, P = stack.pop()
        if not P:
            if val > best_val + 1e-12:
                best_val, best_set = val, chosen
            continue
        if val + sum(weights[v] for v in iter_bits(P)) <= best_val + 1e-12:
            continue
        if val + colour_bound(P) <= best_val + 1e-12:
            continue
        v = lowest_bit(P)
        # exclude-branch pushed first so the include-branch runs first
        stack.append((chosen, val, P & ~(1 << v)))
        stack.append((chosen | 1 << v, val + weights[v], P & N(v)))
    return best_val, frozenset(iter_bits(best_set))


def _extend(ctx: EnumContext, seed: int, key=None) -> int:
    """Grow a biclique to a maximal one, adding candidates in ``key`` order."""
    mask = 0
    P = ctx.active
    for e in iter_bits(seed):
        mask |= 1 << e
        P &= ctx.neighbours(e)
    P &= ~mask
    while P:
        if key is None:
            v = lowest_bit(P)
        else:
            v = min(iter_bits(P), key=key)
        mask |= 1 << v
        P &= ctx.neighbours(v)
    return mask


def initial_columns(ctx: EnumContext) -> list[int]:
    """One greedily grown maximal biclique per active edge, deduplicated."""
    seen = set()
    out = []
    for e in iter_bits(ctx.active):
        m = _extend(ctx, 1 << e)
        if m not in seen:
            seen.add(m)
            out.append(m)
    return out


def branch_and_price(g, state, init=None, budget: float | None = None, max_iterations: int | None = None,
                     max_new_columns: int = 50, lp_solver=solve_cover_lp):
    """Root column generation on the reduction's remainder.

    Returns ``(PricingState, CoverSolution or None)``; the solution is given
    only when the converged relaxation happens to be integral, and its
    ``selected`` indexes ``PricingState.working_columns``.
    """
    ctx = EnumContext(g, state.active, state.all_edges)
    if not ctx.active:
        raise ContractError("no active edges to price")
    t0 = time.monotonic()
    rows = list(iter_bits(ctx.active))
    pos = {e: i for i, e in enumerate(rows)}
    columns = list(init) if init is not None else initial_columns(ctx)
    seen = set(columns)
    trace = []
    beat = Heartbeat("branch-and-price", logger)
    iteration = 0
    converged = False
    duals: dict = {}
    res = None
    while True:
        iteration += 1
        col_rows = [[pos[e] for e in iter_bits(m)] for m in columns]
        res = lp_solver(col_rows, len(rows))
        obj = res.objective
        if trace and obj > trace[-1][1] + 1e-7:
            logger.warning("relaxation went up from %g to %g", trace[-1][1], obj)
        trace.append((time.monotonic() - t0, obj))
        duals = {e: float(res.duals[i]) for i, e in enumerate(rows)}
        value, chosen = price(g, ctx.active, ctx.universe, duals, ctx)
        beat.tick(f"iteration {iteration}, objective {obj:.4f}, pricing {value:.4f}, {len(columns)} columns")
        if value <= 1 + CONVERGENCE_SLACK:
            converged = True
            break
        if budget is not None and time.monotonic() - t0 > budget:
            break
        if max_iterations is not None and iteration >= max_iterations:
            break
        new = []
        seed = sum(1 << e for e in chosen)
        heavy = lambda v: (-duals.get(v, 0.0), v)  # noqa: E731
        for m in [_extend(ctx, seed), _extend(ctx, seed, key=heavy)]:
            if m not in seen:
                new.append(m)
                seen.add(m)
        for e in sorted(chosen):
            if len(new) >= max_new_columns:
                break
            m = _extend(ctx, 1 << e, key=heavy)
            if m not in seen:
                new.append(m)
                seen.add(m)
        if not new:
            logger.warning("pricing found a column already in the working set; stopping")
            break
        columns.extend(new[:max_new_columns])
    pstate = PricingState(columns, trace[-1][1], duals, iteration, trace, converged, res.x)
    solution = None
    x = res.x
    if converged and np.all(np.minimum(np.abs(x), np.abs(1 - x)) <= FEAS_TOL):
        selected = tuple(int(j) for j in np.flatnonzero(x > 0.5))
        solution = CoverSolution(selected, len(selected), OPTIMAL, len(selected), len(selected),
                                 elapsed=time.monotonic() - t0)
    return pstate, solution
