"""Role mining as minimum biclique cover."""

from .config import MinerConfig, MiningResult
from .cover import (CoverInstance, CoverSolution, build_cover_instance, emit_lp, mine_exact,
                    solve_decision_binary_search, solve_min_cover_exact)
from .enumeration import (DEFAULT_THRESHOLD, CountResult, EnumContext, Hardness, classify_hardness,
                          count_with_threshold, enumerate_maximal_bicliques)
from .estimator import RoleMiner
from .exceptions import (ContractError, EmptyInstanceError, HardInstanceError, InstanceFormatError,
                         PolicyReferenceError, RoleMiningError, UnsoundPolicyError)
from .graph import AccessMatrix, Biclique, RbacPolicy, Role, VerificationReport, verify_policy
from .harness import RunReport, bench_suite, report_reduction_sizes, run_pipeline
from .heuristics import (GreedyStrategy, HardConfig, error_pct, greedy_cover, large_biclique_phase,
                         lattice_postprocess, mine_hard, mine_hardest, run_prior_heuristic, split_pieces)
from .io import load_edge_list, load_instance, load_policy, save_policy
from .pricing import branch_and_price, price
from .reduction import ReductionState, dominates, expand_roles, reduce

__version__ = "0.1.0"

__all__ = [
    "AccessMatrix", "Biclique", "ContractError", "CountResult", "CoverInstance", "CoverSolution",
    "DEFAULT_THRESHOLD", "EmptyInstanceError", "EnumContext", "GreedyStrategy", "HardConfig",
    "HardInstanceError", "Hardness", "InstanceFormatError", "MinerConfig", "MiningResult",
    "PolicyReferenceError", "RbacPolicy", "ReductionState", "Role", "RoleMiner", "RoleMiningError",
    "RunReport", "UnsoundPolicyError", "VerificationReport", "bench_suite", "branch_and_price",
    "build_cover_instance", "classify_hardness", "count_with_threshold", "dominates", "emit_lp",
    "enumerate_maximal_bicliques", "error_pct", "expand_roles", "greedy_cover", "large_biclique_phase",
    "lattice_postprocess", "load_edge_list", "load_instance", "load_policy", "mine_exact", "mine_hard",
    "mine_hardest", "price", "reduce", "report_reduction_sizes", "run_pipeline", "run_prior_heuristic",
    "save_policy", "solve_decision_binary_search", "solve_min_cover_exact", "split_pieces",
    "verify_policy",
]
