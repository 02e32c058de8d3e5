"""Command-line entry point.

Exit codes: 0 success, 1 other failure (including an instance too hard for
the exact path), 2 unsound policy, 3 unreadable instance, 4 time budget ran
out and only a bound is available.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ._bits import iter_bits
from .config import MinerConfig
from .cover import BOUND, build_cover_instance, emit_decision_lp, emit_lp, solve_decision_binary_search
from .enumeration import DEFAULT_THRESHOLD, EnumContext, count_with_threshold
from .exceptions import EmptyInstanceError, HardInstanceError, InstanceFormatError, UnsoundPolicyError
from .graph import verify_policy
from .harness import (MODES, bench_suite, load_known_bounds, report_reduction_sizes, run_pipeline,
                      summary_markdown)
from .io import load_instance, load_policy, save_policy
from .pricing import write_trace_csv
from .reduction import reduce

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_UNSOUND = 2
EXIT_FORMAT = 3
EXIT_BUDGET = 4

logger = logging.getLogger("rolemine")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", "-i", help="instance file")
    p.add_argument("--format", default="auto", choices=["auto", "edgelist", "rmplib"])
    p.add_argument("--output", "-o", help="where to write the main result")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=int, default=DEFAULT_THRESHOLD,
                   help="maximal-biclique count above which an instance is hard")
    p.add_argument("--large-threshold", type=int, default=200,
                   help="fresh edges a biclique needs to be adopted in the large phase")
    p.add_argument("--pieces", type=int, default=1)
    p.add_argument("--time-budget", type=float, default=None, help="seconds")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trace", help="write a per-phase trace to this file")
    p.add_argument("-q", "--quiet", action="store_true", help="no progress lines")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="rolemine", description="Mine RBAC roles from an access matrix.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("reduce", parents=[common], help="remove dominated edges")
    c = sub.add_parser("count-bicliques", parents=[common], help="count maximal bicliques")
    c.add_argument("--no-reduce", action="store_true", help="count on the raw matrix")
    m = sub.add_parser("mine-exact", parents=[common], help="reduction plus exact cover")
    m.add_argument("--backend", default="bnb", choices=["bnb", "highs"])
    m.add_argument("--emit-lp", help="also write the cover program in LP format")
    m.add_argument("--decision", action="store_true",
                   help="use the binary search over the partition program instead")
    h = sub.add_parser("mine-heuristic", parents=[common], help="greedy cover plus lattice postprocessing")
    h.add_argument("--strategy", default="best", choices=["smallest", "largest", "best"])
    sub.add_parser("mine-hard", parents=[common], help="large-biclique phase, then exact")
    b = sub.add_parser("branch-and-price", parents=[common], help="column generation on the remainder")
    b.add_argument("--max-iterations", type=int, default=None)
    b.add_argument("--max-new-columns", type=int, default=50)
    v = sub.add_parser("verify", parents=[common], help="check a policy against an instance")
    v.add_argument("--policy", required=True)
    sub.add_parser("sizes", parents=[common], help="sizes of the reduced graph and derived graphs")
    s = sub.add_parser("bench", parents=[common], help="run a directory of instances")
    s.add_argument("--dir", required=True)
    s.add_argument("--mode", default="exact", choices=MODES)
    s.add_argument("--bounds", help="CSV with instance,bound columns")
    e = sub.add_parser("emit-lp", parents=[common], help="write an LP file")
    e.add_argument("--kind", default="cover", choices=["cover", "decision"])
    e.add_argument("--k", type=int, help="group count for the decision program")
    return parser


def _config(args, **extra) -> MinerConfig:
    return MinerConfig(
        count_threshold=args.threshold,
        large_edge_threshold=args.large_threshold,
        n_pieces=args.pieces,
        seed=args.seed,
        time_budget=args.time_budget,
        jobs=args.jobs,
        **extra,
    )


def _emit(obj, path) -> None:
    text = json.dumps(obj, indent=2, default=str)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _need_input(args):
    if not args.input:
        raise SystemExit("--input is required for this command")
    return load_instance(args.input, args.format)


def _finish_mining(args, g, report, policy) -> int:
    if args.output:
        save_policy(policy, g, args.output)
    print(report.to_json())
    return EXIT_BUDGET if report.proof == BOUND else EXIT_OK


def cmd_reduce(args) -> int:
    g = _need_input(args)
    if args.trace:
        with open(args.trace, "w") as fh:
            state = reduce(g, trace=fh)
    else:
        state = reduce(g)
    _emit({
        "n_edges": g.n_edges,
        "n_edges_after_reduction": state.n_active,
        "pct_edges_after_reduction": 100.0 * state.n_active / g.n_edges,
        "dominators_removed": len(state.removal_log),
        "roles_forced": len(state.forced_roles),
        "passes": state.iterations,
        "active_edges": [list(g.edge_label(e)) for e in iter_bits(state.active)],
    }, args.output)
    return EXIT_OK


def cmd_count(args) -> int:
    g = _need_input(args)
    if args.no_reduce:
        ctx = EnumContext(g, g.all_edges, count_threshold=args.threshold)
    else:
        ctx = EnumContext.from_reduction(reduce(g), args.threshold)
    res = count_with_threshold(ctx)
    _emit({"result": str(res), "count": res.count, "exceeded": res.exceeded,
           "threshold": res.threshold, "hardness": "hard" if res.exceeded else "easy"}, args.output)
    return EXIT_OK


def cmd_mine_exact(args) -> int:
    g = _need_input(args)
    if args.decision:
        state = reduce(g)
        sol = solve_decision_binary_search(g, state, args.time_budget)
        _emit({"remainder_roles": sol.objective, "roles_forced": len(state.forced_roles),
               "status": sol.status, "lower": sol.lower, "upper": sol.upper}, args.output)
        return EXIT_BUDGET if sol.status == BOUND else EXIT_OK
    if args.emit_lp:
        emit_lp(build_cover_instance(EnumContext.from_reduction(reduce(g), args.threshold)), args.emit_lp)
    report, policy = run_pipeline(g, "exact", _config(args, backend=args.backend), name=Path(args.input).stem)
    return _finish_mining(args, g, report, policy)


def cmd_mine_heuristic(args) -> int:
    g = _need_input(args)
    report, policy = run_pipeline(g, "heuristic", _config(args, strategy=args.strategy),
                                  name=Path(args.input).stem)
    return _finish_mining(args, g, report, policy)


def cmd_mine_hard(args) -> int:
    g = _need_input(args)
    mode = "hardest" if args.pieces > 1 else "hard"
    report, policy = run_pipeline(g, mode, _config(args), name=Path(args.input).stem)
    return _finish_mining(args, g, report, policy)


def cmd_bnp(args) -> int:
    g = _need_input(args)
    config = _config(args, bnp_max_iterations=args.max_iterations,
                     bnp_max_new_columns=args.max_new_columns)
    report, policy = run_pipeline(g, "bnp", config, name=Path(args.input).stem)
    if args.trace:
        write_trace_csv(report.trace, args.trace)
    return _finish_mining(args, g, report, policy)


def cmd_verify(args) -> int:
    g = _need_input(args)
    pol = load_policy(args.policy, g)
    rep = verify_policy(g, pol)
    _emit(rep.to_dict(), args.output)
    return EXIT_OK if rep.sound else EXIT_UNSOUND


def cmd_sizes(args) -> int:
    g = _need_input(args)
    _emit(report_reduction_sizes(g), args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    bounds = load_known_bounds(args.bounds) if args.bounds else None
    _, rows = bench_suite(args.dir, args.mode, _config(args), jobs=args.jobs,
                                bounds=bounds, output_dir=args.output, fmt=args.format)
    print(summary_markdown(rows), end="")
    return EXIT_OK


def cmd_emit_lp(args) -> int:
    g = _need_input(args)
    if not args.output:
        raise SystemExit("--output is required for emit-lp")
    ctx = EnumContext.from_reduction(reduce(g), args.threshold)
    if args.kind == "cover":
        emit_lp(build_cover_instance(ctx), args.output)
    else:
        if not args.k or args.k < 1:
            raise SystemExit("--k >= 1 is required for the decision program")
        emit_decision_lp(ctx, args.k, args.output)
    return EXIT_OK


COMMANDS = {
    "reduce": cmd_reduce,
    "count-bicliques": cmd_count,
    "mine-exact": cmd_mine_exact,
    "mine-heuristic": cmd_mine_heuristic,
    "mine-hard": cmd_mine_hard,
    "branch-and-price": cmd_bnp,
    "verify": cmd_verify,
    "sizes": cmd_sizes,
    "bench": cmd_bench,
    "emit-lp": cmd_emit_lp,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(asctime)s %(name)s %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (InstanceFormatError, EmptyInstanceError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except UnsoundPolicyError as exc:
        print(f"error: unsound policy: {exc}", file=sys.stderr)
        return EXIT_UNSOUND
    except HardInstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
