"""Pipeline dispatch, run reports and the benchmark suite runner."""

from __future__ import annotations

import csv
import json
import logging
import math
import re
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ._bits import iter_bits
from .config import MinerConfig, MiningResult
from .cover import BOUND, OPTIMAL, CoverInstance, mine_exact, solve_min_cover_exact
from .enumeration import EnumContext, count_with_threshold
from .exceptions import HardInstanceError, UnsoundPolicyError
from .graph import EXACT, AccessMatrix, RbacPolicy, roles_from_bicliques, verify_policy
from .heuristics import error_pct, mine_hard, mine_hardest, run_prior_heuristic
from .io import load_instance
from .pricing import branch_and_price
from .reduction import expand_roles, reduce

logger = logging.getLogger(__name__)

MODES = ("exact", "heuristic", "hard", "hardest", "bnp")

SUMMARY_COLUMNS = [
    "instance", "n_edges", "n_edges_after_reduction", "pct_edges_after_reduction",
    "n_maximal_bicliques", "roles_total", "known_bound", "error_pct",
    "time_reduction", "time_enumeration", "time_cover", "time_total", "status",
]


@dataclass
class RunReport:
    instance: str
    mode: str
    n_edges: int
    n_edges_after_reduction: int | None = None
    pct_edges_after_reduction: float | None = None
    n_maximal_bicliques: int | None = None
    threshold_exceeded: bool = False
    roles_forced: int | None = None
    roles_remainder: int | None = None
    roles_heuristic: int | None = None
    roles_total: int | None = None
    known_bound: int | None = None
    error_pct: float | None = None
    proof: str | None = None
    lower_bound: float | None = None
    times: dict = field(default_factory=dict)
    seed: int = 0
    config: dict = field(default_factory=dict)
    status: str = "ok"
    error: str | None = None
    stats: dict = field(default_factory=dict)
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["trace"]
        return d

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent, default=str)

    def summary_row(self) -> dict:
        t = self.times
        return {
            "instance": self.instance,
            "n_edges": self.n_edges,
            "n_edges_after_reduction": self.n_edges_after_reduction,
            "pct_edges_after_reduction": self.pct_edges_after_reduction,
            "n_maximal_bicliques": (f">{self.config.get('count_threshold')}"
                                    if self.threshold_exceeded else self.n_maximal_bicliques),
            "roles_total": self.roles_total,
            "known_bound": self.known_bound,
            "error_pct": self.error_pct,
            "time_reduction": t.get("reduction"),
            "time_enumeration": t.get("enumeration"),
            "time_cover": t.get("cover"),
            "time_total": t.get("total"),
            "status": self.status,
        }


def _bnp(g: AccessMatrix, config: MinerConfig) -> MiningResult:
    """Root column generation, then an exact cover over the generated columns.

    The result is optimal when the cover size meets the rounded-up LP bound;
    otherwise it is a feasible policy with the LP value as a lower bound.
    """
    stats: dict = {"n_edges": g.n_edges}
    t = time.monotonic()
    state = reduce(g)
    stats["time_reduction"] = time.monotonic() - t
    stats["n_edges_after_reduction"] = state.n_active
    stats["pct_edges_after_reduction"] = 100.0 * state.n_active / g.n_edges
    stats["roles_forced"] = len(state.forced_roles)
    chosen: list[int] = []
    if state.active:
        t = time.monotonic()
        pstate, sol = branch_and_price(g, state, budget=config.time_budget,
                                       max_iterations=config.bnp_max_iterations,
                                       max_new_columns=config.bnp_max_new_columns)
        stats["time_pricing"] = time.monotonic() - t
        stats["bnp_iterations"] = pstate.iteration
        stats["bnp_columns"] = len(pstate.working_columns)
        stats["bnp_converged"] = pstate.converged
        stats["lp_bound"] = pstate.relaxation_objective
        stats["trace"] = pstate.trace
        t = time.monotonic()
        if sol is not None:
            chosen = [pstate.working_columns[j] for j in sol.selected]
            stats["proof"] = OPTIMAL
        else:
            inst = CoverInstance.from_masks(g, pstate.working_columns, state.active)
            cover = solve_min_cover_exact(inst, config.time_budget, backend=config.backend)
            chosen = [inst.columns[j].mask for j in cover.selected]
            lower = math.ceil(pstate.relaxation_objective - 1e-6)
            stats["proof"] = OPTIMAL if pstate.converged and len(chosen) <= lower else BOUND
        stats["time_cover"] = time.monotonic() - t
    else:
        stats["proof"] = OPTIMAL
    stats["roles_lp"] = len(chosen)
    policy = expand_roles(state, RbacPolicy(roles_from_bicliques(g, chosen, EXACT)))
    stats["roles_total"] = policy.n_roles
    return MiningResult(policy, stats)


def mine(g: AccessMatrix, mode: str, config: MinerConfig | None = None) -> MiningResult:
    config = config or MinerConfig()
    if mode == "exact":
        return mine_exact(g, config)
    if mode == "heuristic":
        return run_prior_heuristic(g, config.strategy, config.seed)
    if mode == "hard":
        return mine_hard(g, config)
    if mode == "hardest":
        return mine_hardest(g, config)
    if mode == "bnp":
        return _bnp(g, config)
    raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")


def run_pipeline(g: AccessMatrix, mode: str, config: MinerConfig | None = None,
                 name: str = "instance", known_bound: int | None = None):
    """Run one mode, verify the policy and build its report.

    Raises :class:`UnsoundPolicyError` if the policy does not reproduce ``g``.
    """
    config = config or MinerConfig()
    t = time.monotonic()
    result = mine(g, mode, config)
    total = time.monotonic() - t
    verdict = verify_policy(g, result.policy)
    if not verdict.sound:
        raise UnsoundPolicyError(json.dumps(verdict.to_dict()))
    s = result.stats
    times = {k[5:]: v for k, v in s.items() if k.startswith("time_") and isinstance(v, float)}
    times["total"] = total
    heuristic = s.get("roles_large") if mode == "hard" else None
    if mode in ("heuristic", "hardest"):
        heuristic = result.n_roles
    report = RunReport(
        instance=name,
        mode=mode,
        n_edges=g.n_edges,
        n_edges_after_reduction=s.get("n_edges_after_reduction"),
        pct_edges_after_reduction=s.get("pct_edges_after_reduction"),
        n_maximal_bicliques=s.get("n_maximal_bicliques"),
        roles_forced=s.get("roles_forced"),
        roles_remainder=s.get("roles_lp"),
        roles_heuristic=heuristic,
        roles_total=result.n_roles,
        known_bound=known_bound,
        error_pct=error_pct(result.n_roles, known_bound) if known_bound else None,
        proof=s.get("proof", "heuristic" if mode in ("heuristic", "hardest") else None),
        lower_bound=s.get("cover_lower_bound", s.get("lp_bound")),
        times=times,
        seed=config.seed,
        config=config.to_dict(),
        stats={k: v for k, v in s.items() if k != "trace"},
        trace=list(s.get("trace", [])),
    )
    return report, result.policy


def count_adjacent_pairs(ctx: EnumContext) -> int:
    total = sum(ctx.neighbours(e).bit_count() for e in iter_bits(ctx.active))
    return total // 2


def report_reduction_sizes(g: AccessMatrix, state=None) -> dict:
    """Sizes of the reduced graph and of two graphs it could be turned into.

    ``clique_partition_size`` counts one vertex per active edge plus one
    edge per adjacent active pair. ``coloring_size`` is the same for the
    complement (non-adjacent pairs) and is computed without building it.
    """
    state = state or reduce(g)
    users, perms = g.vertices_of(state.active)
    n = state.n_active
    pairs = count_adjacent_pairs(EnumContext.from_reduction(state))
    return {
        "n_edges": g.n_edges,
        "active_edges": n,
        "active_vertices": len(users) + len(perms),
        "post_reduction_size": len(users) + len(perms) + n,
        "adjacent_pairs": pairs,
        "clique_partition_size": n + pairs,
        "coloring_size": n + math.comb(n, 2) - pairs,
    }


def format_duration(seconds: float | None) -> str:
    """``m:ss`` below an hour, ``h:mm:ss`` above."""
    if seconds is None:
        return ""
    s = int(round(seconds))
    h, rest = divmod(s, 3600)
    m, s = divmod(rest, 60)
    return f"{h}:{m:02d}:{s:02d}" if h else f"{m}:{s:02d}"


def instance_key(name: str) -> str:
    """``"Small 01"``, ``small_01`` and ``small01`` all map to ``small01``."""
    return re.sub(r"[^a-z0-9]", "", name.lower())


def load_known_bounds(path) -> dict[str, int]:
    """Read an ``instance,bound`` CSV keyed by :func:`instance_key`; extra columns are ignored."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(line for line in fh if not line.startswith("#")):
            if row.get("bound"):
                out[instance_key(row["instance"])] = int(row["bound"])
    return out


_SKIP_SUFFIXES = {".md", ".json", ".csv", ".lp", ".sh", ".py"}


def list_instances(directory) -> list[Path]:
    d = Path(directory)
    return sorted(p for p in d.iterdir()
                  if p.is_file() and not p.name.startswith(".") and p.suffix not in _SKIP_SUFFIXES)


def _run_one(args) -> RunReport:
    path, mode, config, bound, fmt = args
    name = Path(path).stem
    t = time.monotonic()
    try:
        g = load_instance(path, fmt)
    except Exception as exc:
        return RunReport(name, mode, 0, status="format-error", error=str(exc), known_bound=bound)
    try:
        if mode == "exact":
            # classify first so hard inputs are reported instead of run
            state = reduce(g)
            ctx = EnumContext.from_reduction(state, config.count_threshold)
            count = count_with_threshold(ctx)
            if count.exceeded:
                return RunReport(
                    name, mode, g.n_edges,
                    n_edges_after_reduction=state.n_active,
                    pct_edges_after_reduction=100.0 * state.n_active / g.n_edges,
                    threshold_exceeded=True, known_bound=bound, seed=config.seed,
                    config=config.to_dict(), status="hard",
                    times={"total": time.monotonic() - t},
                )
        report, _ = run_pipeline(g, mode, config, name=name, known_bound=bound)
        if report.proof == BOUND:
            report.status = "bound"
        return report
    except HardInstanceError as exc:
        return RunReport(name, mode, g.n_edges, threshold_exceeded=True, status="hard",
                         error=str(exc), known_bound=bound, config=config.to_dict())
    except Exception as exc:
        logger.debug("%s failed:\n%s", name, traceback.format_exc())
        return RunReport(name, mode, g.n_edges, status="failed", error=f"{type(exc).__name__}: {exc}",
                         known_bound=bound, config=config.to_dict())


def bench_suite(directory, mode: str = "exact", config: MinerConfig | None = None,
                jobs: int = 1, bounds: dict | None = None, output_dir=None, fmt: str = "auto"):
    """Run every instance in ``directory``; failures are recorded, not raised.

    Returns ``(reports, rows)``. With ``output_dir`` the reports are written
    as JSON next to ``summary.csv`` and ``summary.md``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    config = config or MinerConfig()
    bounds = bounds or {}
    paths = list_instances(directory)
    tasks = [(str(p), mode, config, bounds.get(instance_key(p.stem)), fmt) for p in paths]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_one, tasks))
    else:
        reports = [_run_one(t) for t in tasks]
    rows = [r.summary_row() for r in reports]
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in reports:
            (out / f"{r.instance}.{mode}.json").write_text(r.to_json())
        write_summary_csv(rows, out / "summary.csv")
        (out / "summary.md").write_text(summary_markdown(rows))
    return reports, rows


def write_summary_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow(row)


def summary_markdown(rows) -> str:
    head = ["instance", "#edges", "#edges after reduction", "%", "#maximal bicliques",
            "#roles", "known bound", "error %", "t reduce", "t enum", "t cover", "t total", "status"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for r in rows:
        pct = r["pct_edges_after_reduction"]
        err = r["error_pct"]
        cells = [
            r["instance"], r["n_edges"], r["n_edges_after_reduction"],
            "" if pct is None else f"{pct:.0f}",
            r["n_maximal_bicliques"], r["roles_total"], r["known_bound"],
            "" if err is None else f"{round(err)}",
            format_duration(r["time_reduction"]), format_duration(r["time_enumeration"]),
            format_duration(r["time_cover"]), format_duration(r["time_total"]), r["status"],
        ]
        lines.append("| " + " | ".join("" if c is None else str(c) for c in cells) + " |")
    return "\n".join(lines) + "\n"
