"""Exact minimum cover over maximal bicliques.

Rows are the active edges left by the reduction, columns the maximal
bicliques. The internal solver is a depth-first branch-and-bound with unit
propagation, column dominance, a row-packing bound and the LP relaxation.
"""

from __future__ import annotations

import logging
import math
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from ._bits import iter_bits, lowest_bit
from ._progress import Heartbeat
from .config import MinerConfig, MiningResult
from .enumeration import EnumContext, iter_maximal_masks
from .exceptions import ContractError, HardInstanceError, UnsoundPolicyError
from .graph import EXACT, AccessMatrix, Biclique, RbacPolicy, roles_from_bicliques, verify_policy
from .lp import cover_matrix, solve_cover_lp
from .reduction import expand_roles, reduce

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
BOUND = "bound"


@dataclass
class CoverInstance:
    """Set-cover instance: which columns (bicliques) contain which rows (edges)."""

    columns: list
    rows: list
    incidence: list
    col_rows: list = field(repr=False)

    @classmethod
    def from_masks(cls, g: AccessMatrix, masks, rows_mask: int) -> "CoverInstance":
        rows = list(iter_bits(rows_mask))
        pos = {e: i for i, e in enumerate(rows)}
        seen = set()
        columns, col_rows = [], []
        for m in masks:
            m &= rows_mask
            if not m or m in seen:
                continue
            seen.add(m)
            columns.append(Biclique.from_mask(g, m))
            col_rows.append([pos[e] for e in iter_bits(m)])
        incidence = [[] for _ in rows]
        for j, rs in enumerate(col_rows):
            for r in rs:
                incidence[r].append(j)
        inst = cls(columns, rows, incidence, col_rows)
        inst.check()
        return inst

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    def check(self) -> None:
        for r, cols in enumerate(self.incidence):
            if not cols:
                raise ContractError(f"row {r} (edge {self.rows[r]}) has no column")

    def column_masks(self) -> list[int]:
        out = []
        for rs in self.col_rows:
            m = 0
            for r in rs:
                m |= 1 << r
            out.append(m)
        return out

    def covers(self, selected) -> bool:
        covered = 0
        masks = self.column_masks()
        for j in selected:
            covered |= masks[j]
        return covered == (1 << self.n_rows) - 1


@dataclass
class CoverSolution:
    selected: tuple
    objective: int
    status: str
    lower: int
    upper: int
    nodes: int = 0
    elapsed: float = 0.0
    groups: tuple = ()

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def collect_maximal_masks(ctx: EnumContext) -> list[int]:
    """All maximal bicliques of ``ctx``; raises if there are more than the threshold."""
    out = []
    limit = ctx.count_threshold
    for m in iter_maximal_masks(ctx):
        out.append(m)
        if len(out) > limit:
            raise HardInstanceError(limit)
    return out


def build_cover_instance(ctx: EnumContext) -> CoverInstance:
    return CoverInstance.from_masks(ctx.g, collect_maximal_masks(ctx), ctx.active)


class _Timeout(Exception):
    pass


class _BranchAndBound:
    def __init__(self, inst: CoverInstance, time_budget, use_dominance, lp_solver,
                 dominance_limit=4000):
        self.inst = inst
        self.m = inst.n_rows
        self.n = inst.n_columns
        self.cm = inst.column_masks()
        self.rc = []
        for cols in inst.incidence:
            mask = 0
            for j in cols:
                mask |= 1 << j
            self.rc.append(mask)
        self.A = cover_matrix(inst.col_rows, self.m) if lp_solver is solve_cover_lp else None
        self.lp_solver = lp_solver
        self.use_dominance = use_dominance
        self.dominance_limit = dominance_limit
        self.deadline = None if time_budget is None else time.monotonic() + time_budget
        self.best: list[int] | None = None
        self.nodes = 0
        self.root_lower = 0
        self.beat = Heartbeat("cover", logger)

    # -- bounds -----------------------------------------------------------
    def _relevant(self, uncovered: int, avail: int) -> int:
        cols = 0
        for r in iter_bits(uncovered):
            cols |= self.rc[r]
        return cols & avail

    def packing_bound(self, uncovered: int, avail: int) -> int:
        rows = sorted(iter_bits(uncovered), key=lambda r: ((self.rc[r] & avail).bit_count(), r))
        used = 0
        count = 0
        for r in rows:
            cols = self.rc[r] & avail
            if not cols & used:
                used |= cols
                count += 1
        return count

    def lp_bound(self, uncovered: int, cols: int) -> tuple[float, list[int], np.ndarray]:
        rows = list(iter_bits(uncovered))
        col_idx = list(iter_bits(cols))
        if self.A is not None:
            sub = self.A[rows][:, col_idx].tocsc()
            sub.sort_indices()
            col_rows = np.split(sub.indices, sub.indptr[1:-1])
        else:
            pos = {r: i for i, r in enumerate(rows)}
            col_rows = [[pos[r] for r in iter_bits(self.cm[j] & uncovered)] for j in col_idx]
        res = self.lp_solver([list(c) for c in col_rows], len(rows))
        return res.objective, col_idx, res.x

    # -- heuristics -------------------------------------------------------
    def round_lp(self, uncovered: int, order: list[int]) -> list[int]:
        chosen = []
        for j in order:
            if not uncovered:
                break
            if self.cm[j] & uncovered:
                chosen.append(j)
                uncovered &= ~self.cm[j]
        return self._prune_redundant(chosen) if not uncovered else []

    def greedy(self, uncovered: int, avail: int) -> list[int]:
        chosen = []
        cols = list(iter_bits(self._relevant(uncovered, avail)))
        while uncovered:
            best, best_gain = -1, 0
            for j in cols:
                gain = (self.cm[j] & uncovered).bit_count()
                if gain > best_gain:
                    best, best_gain = j, gain
            if best < 0:
                return []
            chosen.append(best)
            uncovered &= ~self.cm[best]
        return self._prune_redundant(chosen)

    def _prune_redundant(self, chosen: list[int]) -> list[int]:
        out = list(chosen)
        for j in sorted(chosen, key=lambda j: self.cm[j].bit_count()):
            rest = 0
            for k in out:
                if k != j:
                    rest |= self.cm[k]
            if self.cm[j] & ~rest == 0:
                out.remove(j)
        return sorted(out)

    def _offer(self, chosen: list[int]) -> None:
        if self.best is None or len(chosen) < len(self.best):
            self.best = sorted(chosen)
            logger.debug("incumbent %d after %d nodes", len(chosen), self.nodes)

    # -- search -----------------------------------------------------------
    def run(self) -> None:
        full = (1 << self.m) - 1
        avail = (1 << self.n) - 1
        self._offer(self.greedy(full, avail))
        self.node(full, avail, [], root=True)

    def _propagate(self, uncovered: int, avail: int, chosen: list[int]):
        while uncovered:
            forced = None
            for r in iter_bits(uncovered):
                cols = self.rc[r] & avail
                if not cols:
                    return None
                if cols & (cols - 1) == 0:
                    forced = lowest_bit(cols)
                    break
            if forced is None:
                if self.use_dominance:
                    reduced = self._dominance(uncovered, avail)
                    if reduced != avail:
                        avail = reduced
                        continue
                break
            chosen.append(forced)
            uncovered &= ~self.cm[forced]
        return uncovered, avail

    def _dominance(self, uncovered: int, avail: int) -> int:
        relevant = self._relevant(uncovered, avail)
        if relevant.bit_count() > self.dominance_limit:
            return relevant
        keep = relevant
        restricted = {j: self.cm[j] & uncovered for j in iter_bits(relevant)}
        for j, rj in restricted.items():
            sup = keep
            for r in iter_bits(rj):
                sup &= self.rc[r]
                if sup == 1 << j:
                    break
            sup &= ~(1 << j)
            for k in iter_bits(sup):
                rk = restricted[k]
                if rk != rj or k < j:
                    keep &= ~(1 << j)
                    break
        return keep

    def node(self, uncovered: int, avail: int, chosen: list[int], root=False) -> None:
        self.nodes += 1
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Timeout
        self.beat.tick(lambda: f"{self.nodes} nodes, incumbent {len(self.best)}")
        chosen = list(chosen)
        state = self._propagate(uncovered, avail, chosen)
        if state is None:
            return
        uncovered, avail = state
        if not uncovered:
            self._offer(chosen)
            return
        best = len(self.best)
        k = len(chosen)
        pack = self.packing_bound(uncovered, avail)
        if root:
            self.root_lower = max(self.root_lower, k + pack)
        if k + pack >= best:
            return
        cols = self._relevant(uncovered, avail)
        lp_obj, col_idx, x = self.lp_bound(uncovered, cols)
        lower = k + max(pack, math.ceil(lp_obj - 1e-6))
        if root:
            self.root_lower = max(self.root_lower, lower)
            order = [col_idx[i] for i in np.argsort(-x, kind="stable")]
            rounded = self.round_lp(uncovered, order)
            if rounded:
                self._offer(chosen + rounded)
                best = len(self.best)
        if lower >= best:
            return
        row = min(iter_bits(uncovered), key=lambda r: ((self.rc[r] & avail).bit_count(), r))
        branch = sorted(iter_bits(self.rc[row] & avail),
                        key=lambda j: (-(self.cm[j] & uncovered).bit_count(), j))
        excluded = 0
        for j in branch:
            self.node(uncovered & ~self.cm[j], avail & ~excluded & ~(1 << j), chosen + [j])
            excluded |= 1 << j


def solve_min_cover_exact(inst: CoverInstance, time_budget: float | None = None,
                          use_dominance: bool = True, backend: str = "bnb",
                          lp_solver=solve_cover_lp) -> CoverSolution:
    """Minimum number of columns covering every row.

    ``backend="bnb"`` runs the internal branch-and-bound; ``"highs"`` hands
    the integer program to scipy's HiGHS. When the budget runs out the best
    cover found so far is returned with ``status="bound"``.
    """
    t0 = time.monotonic()
    if inst.n_rows == 0:
        return CoverSolution((), 0, OPTIMAL, 0, 0)
    if backend == "highs":
        sol = _solve_highs(inst, time_budget)
    elif backend == "bnb":
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 20 * inst.n_rows + 1000))
        bb = _BranchAndBound(inst, time_budget, use_dominance, lp_solver)
        status = OPTIMAL
        try:
            bb.run()
        except _Timeout:
            status = BOUND
        finally:
            sys.setrecursionlimit(limit)
        best = bb.best
        lower = len(best) if status == OPTIMAL else bb.root_lower
        sol = CoverSolution(tuple(best), len(best), status, lower, len(best), nodes=bb.nodes)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    sol.elapsed = time.monotonic() - t0
    assert inst.covers(sol.selected), "solver returned a non-cover"
    return sol


def _solve_highs(inst: CoverInstance, time_budget) -> CoverSolution:
    A = cover_matrix(inst.col_rows, inst.n_rows)
    options = {"mip_rel_gap": 0.0}
    if time_budget is not None:
        options["time_limit"] = float(time_budget)
    res = optimize.milp(
        c=np.ones(inst.n_columns),
        constraints=optimize.LinearConstraint(A, lb=np.ones(inst.n_rows), ub=np.inf),
        integrality=np.ones(inst.n_columns),
        bounds=optimize.Bounds(0, 1),
        options=options,
    )
    if res.x is None:
        raise RuntimeError(f"HiGHS returned no solution: {res.message}")
    selected = tuple(int(j) for j in np.flatnonzero(res.x > 0.5))
    status = OPTIMAL if res.status == 0 else BOUND
    lower = len(selected) if status == OPTIMAL else int(math.ceil(getattr(res, "mip_dual_bound", 0) - 1e-6))
    return CoverSolution(selected, len(selected), status, lower, len(selected))


# -- LP files -------------------------------------------------------------

def _wrap_terms(terms: list[str], indent: str = "   ", width: int = 78) -> list[str]:
    lines, cur = [], ""
    for t in terms:
        piece = t if not cur else f" + {t}"
        if cur and len(cur) + len(piece) > width:
            lines.append(cur)
            cur = f"{indent}+ {t}"
        else:
            cur += piece
    lines.append(cur)
    return lines


def emit_lp(inst: CoverInstance, path) -> None:
    """Write the covering ILP in CPLEX LP format.

    Sections: ``Minimize``, ``Subject To``, ``Binary``, ``End``. Variable
    ``x{j}`` is column ``j``; constraint ``e{id}`` is the row for edge ``id``.
    """
    inst.check()
    out = ["\\ minimum biclique cover", f"\\ {inst.n_columns} columns, {inst.n_rows} rows", "Minimize"]
    obj = _wrap_terms([f"x{j}" for j in range(inst.n_columns)])
    out.append(" obj: " + obj[0])
    out.extend(obj[1:])
    out.append("Subject To")
    for r, cols in enumerate(inst.incidence):
        body = _wrap_terms([f"x{j}" for j in cols])
        body[-1] += " >= 1"
        out.append(f" e{inst.rows[r]}: " + body[0])
        out.extend(body[1:])
    out.append("Binary")
    for j in range(inst.n_columns):
        out.append(f" x{j}")
    out.append("End")
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")


def read_lp_summary(path) -> dict:
    """Parse an LP file written by :func:`emit_lp` or :func:`emit_decision_lp`.

    Returns the objective variables, the constraints as ``(name, vars, sense,
    rhs)`` and the binary variables.
    """
    section = None
    objective: list[str] = []
    constraints = []
    binaries: list[str] = []
    current = None
    for raw in Path(path).read_text(encoding="ascii").splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("minimize", "maximize", "subject to", "binary", "binaries", "end"):
            section = low
            continue
        if section == "minimize":
            objective += re.findall(r"x[\w]+", line.split(":", 1)[-1])
        elif section == "subject to":
            if current is None:
                name, _, rest = line.partition(":")
                current = [name.strip(), [], None, None]
                line = rest
            current[1] += re.findall(r"x[\w]+", line)
            m = re.search(r"(>=|<=|=)\s*(-?\d+)", line)
            if m:
                current[2], current[3] = m.group(1), int(m.group(2))
                constraints.append(tuple(current))
                current = None
        elif section in ("binary", "binaries"):
            binaries += line.split()
    return {"objective": objective, "constraints": constraints, "binaries": binaries}


# -- decision version + binary search ----------------------------------

def _decision_order(ctx: EnumContext) -> list[int]:
    return sorted(iter_bits(ctx.active), key=lambda e: (ctx.neighbours(e).bit_count(), e))


def _partition(ctx: EnumContext, k: int, deadline) -> list[int] | None:
    """Split the active edges into at most ``k`` pairwise-adjacent groups."""
    order = _decision_order(ctx)
    commons: list[int] = []
    members: list[int] = []
    counter = [0]

    def place(i: int) -> bool:
        counter[0] += 1
        if deadline is not None and counter[0] & 0x3FF == 0 and time.monotonic() > deadline:
            raise _Timeout
        if i == len(order):
            return True
        e = order[i]
        closed = ctx.neighbours(e) | (1 << e)
        for gi in range(len(commons)):
            if commons[gi] >> e & 1:
                saved = commons[gi], members[gi]
                commons[gi] &= closed
                members[gi] |= 1 << e
                if place(i + 1):
                    return True
                commons[gi], members[gi] = saved
        if len(commons) < k:
            commons.append(closed)
            members.append(1 << e)
            if place(i + 1):
                return True
            commons.pop()
            members.pop()
        return False

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 3 * len(order) + 1000))
    try:
        return list(members) if place(0) else None
    finally:
        sys.setrecursionlimit(limit)


def solve_decision_binary_search(g: AccessMatrix, after_reduction, time_budget: float | None = None,
                                 ) -> CoverSolution:
    """Smallest ``k`` for which the remainder splits into ``k`` bicliques.

    Binary search between 1 and ``min(users, perms, edges)`` of the active
    remainder; each query is a backtracking partition search. Slow by
    design, kept as a baseline.
    """
    t0 = time.monotonic()
    deadline = None if time_budget is None else t0 + time_budget
    ctx = EnumContext(g, after_reduction.active, after_reduction.all_edges)
    if not ctx.active:
        return CoverSolution((), 0, OPTIMAL, 0, 0)
    users, perms = g.vertices_of(ctx.active)
    lo = 1
    hi = min(len(users), len(perms), ctx.active.bit_count())
    # one group per user (or permission) always works
    by = {}
    side = 0 if len(users) <= len(perms) else 1
    for e in iter_bits(ctx.active):
        key = g.edges[e][side]
        by[key] = by.get(key, 0) | 1 << e
    best = [by[key] for key in sorted(by)][:hi]
    if len(best) > hi:
        best = [1 << e for e in iter_bits(ctx.active)]
    status = OPTIMAL
    try:
        while lo < hi:
            mid = (lo + hi) // 2
            groups = _partition(ctx, mid, deadline)
            if groups is not None:
                hi, best = len(groups), groups
            else:
                lo = mid + 1
    except _Timeout:
        status = BOUND
    groups = tuple(best)
    return CoverSolution((), len(groups), status, lo if status == BOUND else len(groups), len(groups),
                         elapsed=time.monotonic() - t0, groups=groups)


def emit_decision_lp(ctx: EnumContext, k: int, path) -> None:
    """Write the k-group feasibility program for the active edges in LP format."""
    edges = list(iter_bits(ctx.active))
    out = ["\\ biclique cover decision program", f"\\ k = {k}, {len(edges)} edges", "Minimize", " obj: 0 x_0_1"]
    out.append("Subject To")
    for a in edges:
        body = _wrap_terms([f"x_{a}_{b}" for b in range(1, k + 1)])
        body[-1] += " >= 1"
        out.append(f" cover_{a}: " + body[0])
        out.extend(body[1:])
    for i, a in enumerate(edges):
        na = ctx.neighbours(a)
        for c in edges[i + 1:]:
            if not na >> c & 1:
                for b in range(1, k + 1):
                    out.append(f" sep_{a}_{c}_{b}: x_{a}_{b} + x_{c}_{b} <= 1")
    out.append("Binary")
    for a in edges:
        for b in range(1, k + 1):
            out.append(f" x_{a}_{b}")
    out.append("End")
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")


# -- exact pipeline --------------------------------------------------------

def mine_exact(g: AccessMatrix, config=None):
    """Reduce, enumerate, solve the cover exactly and re-attach dominators.

    Raises :class:`HardInstanceError` when the remainder has more maximal
    bicliques than ``config.count_threshold``.
    """
    config = config or MinerConfig()
    stats: dict = {"n_edges": g.n_edges}
    t = time.monotonic()
    state = reduce(g)
    stats["time_reduction"] = time.monotonic() - t
    return _finish_exact(g, state, config, stats, extra_roles=[])


def _finish_exact(g, state, config, stats, extra_roles, active=None):
    active = state.active if active is None else active
    stats.setdefault("n_edges_after_reduction", state.n_active)
    stats.setdefault("pct_edges_after_reduction", 100.0 * state.n_active / g.n_edges)
    stats["roles_forced"] = len(state.forced_roles)
    t = time.monotonic()
    ctx = EnumContext(g, active, state.all_edges, config.count_threshold)
    masks = collect_maximal_masks(ctx)
    stats["n_maximal_bicliques"] = len(masks)
    stats["time_enumeration"] = time.monotonic() - t
    t = time.monotonic()
    if active:
        inst = CoverInstance.from_masks(g, masks, active)
        sol = solve_min_cover_exact(inst, config.time_budget, backend=config.backend)
        chosen = [inst.columns[j].mask for j in sol.selected]
        stats["proof"] = sol.status
        stats["cover_lower_bound"] = sol.lower
        stats["cover_nodes"] = sol.nodes
    else:
        chosen = []
        stats["proof"] = OPTIMAL
    stats["time_cover"] = time.monotonic() - t
    stats["roles_lp"] = len(chosen)
    remainder = RbacPolicy(list(extra_roles) + roles_from_bicliques(g, chosen, EXACT))
    policy = expand_roles(state, remainder)
    stats["roles_total"] = policy.n_roles
    report = verify_policy(g, policy)
    if not report.sound:
        raise UnsoundPolicyError(str(report.to_dict()))
    return MiningResult(policy, stats)
