import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import matrices
from oracles import min_biclique_cover
from rolemine import (AccessMatrix, EnumContext, GreedyStrategy, HardConfig, RbacPolicy, Role, error_pct,
                      greedy_cover, large_biclique_phase, lattice_postprocess, mine_exact, mine_hard,
                      mine_hardest, reduce, run_prior_heuristic, split_pieces, verify_policy)
from rolemine.config import MinerConfig
from rolemine.datasets import random_bipartite
from rolemine.enumeration import count_with_threshold
from rolemine.exceptions import ContractError
from rolemine.graph import LARGE


def names(g, role):
    return {g.users[u] for u in role.users}, {g.perms[p] for p in role.perms}


def test_smallest_degree_first_role(toy):
    pol = greedy_cover(toy, GreedyStrategy.SMALLEST_DEGREE, first=("perm", toy.perm_index("p3")))
    assert names(toy, pol.roles[0]) == ({"u1", "u4"}, {"p3"})
    assert verify_policy(toy, pol).sound


def test_largest_degree_first_role(toy):
    pol = greedy_cover(toy, "largest", first=("user", toy.user_index("u2")))
    assert names(toy, pol.roles[0]) == ({"u2"}, {"p0", "p1", "p2", "p4"})
    assert verify_policy(toy, pol).sound


def test_smallest_degree_tie_is_seeded(toy):
    firsts = {frozenset(names(toy, greedy_cover(toy, "smallest", seed=s).roles[0])[1]) for s in range(20)}
    # u4 and p3 tie on degree two
    assert firsts == {frozenset({"p3"}), frozenset({"p3", "p4"})}
    assert greedy_cover(toy, "smallest", seed=7).roles == greedy_cover(toy, "smallest", seed=7).roles


def test_largest_degree_tie(toy):
    # u2 and p0 both have degree four
    firsts = {names(toy, greedy_cover(toy, "largest", seed=s).roles[0]) == ({"u2"}, {"p0", "p1", "p2", "p4"})
              for s in range(20)}
    assert firsts == {True, False}


@pytest.mark.parametrize("strategy", list(GreedyStrategy))
def test_complete_block_is_one_role(strategy):
    g = AccessMatrix.from_pairs([(u, p) for u in "abcd" for p in "xyz"])
    assert greedy_cover(g, strategy).n_roles == 1


@settings(max_examples=150, deadline=None)
@given(matrices(max_edges=20, max_side=7), st.sampled_from(list(GreedyStrategy)), st.integers(0, 5))
def test_greedy_roles_are_residual_bicliques(g, strategy, seed):
    pol = greedy_cover(g, strategy, seed)
    assert verify_policy(g, pol).sound
    # every role removes at least one new edge, so the count is at most |E|
    seen = set()
    total = 0
    for r in pol.roles:
        cells = {(u, p) for u in r.users for p in r.perms}
        fresh = cells - seen
        assert fresh
        total += len(fresh)
        seen |= cells
    assert total == g.n_edges


def test_lattice_exact_partition_case():
    pol = RbacPolicy([Role({0}, {1, 2}), Role({1}, {1}), Role({2}, {2})])
    out = lattice_postprocess(pol)
    assert out.n_roles == 2
    assert {(r.users, r.perms) for r in out.roles} == {
        (frozenset({0, 1}), frozenset({1})), (frozenset({0, 2}), frozenset({2}))}


def test_lattice_partial_cover_keeps_remainder():
    pol = RbacPolicy([Role({0}, {1, 2, 3}), Role({1}, {1})])
    out = lattice_postprocess(pol)
    assert out.n_roles == 2
    assert {(r.users, r.perms) for r in out.roles} == {
        (frozenset({0}), frozenset({2, 3})), (frozenset({0, 1}), frozenset({1}))}


def test_lattice_fixpoint_unchanged():
    pol = RbacPolicy([Role({0}, {1, 2}), Role({1}, {2, 3})])
    out = lattice_postprocess(pol)
    assert [(r.users, r.perms) for r in out.roles] == [(r.users, r.perms) for r in pol.roles]


def test_lattice_rejects_unsound_input(toy):
    with pytest.raises(ContractError):
        lattice_postprocess(RbacPolicy([Role({0}, {0})]), toy)


@st.composite
def policies(draw):
    n_roles = draw(st.integers(1, 8))
    roles = []
    for _ in range(n_roles):
        users = draw(st.sets(st.integers(0, 7), min_size=1, max_size=4))
        perms = draw(st.sets(st.integers(0, 7), min_size=1, max_size=5))
        roles.append(Role(users, perms))
    return RbacPolicy(roles)


def policy_matrix(pol):
    return AccessMatrix.from_pairs(sorted({(u, p) for r in pol.roles for u in r.users for p in r.perms}))


def reindex(g, pol):
    return RbacPolicy([Role({g.user_index(u) for u in r.users}, {g.perm_index(p) for p in r.perms})
                       for r in pol.roles])


@settings(max_examples=300, deadline=None)
@given(policies())
def test_lattice_is_monotone_and_sound(pol):
    g = policy_matrix(pol)
    pol = reindex(g, pol)
    out = lattice_postprocess(pol, g)
    assert out.n_roles <= pol.n_roles
    assert verify_policy(g, out).sound
    perms = [frozenset(r.perms) for r in out.roles]
    assert not any(i != j and perms[j] <= perms[i] for i in range(len(perms)) for j in range(len(perms)))


def test_prior_heuristic_records_both_strategies(toy):
    res = run_prior_heuristic(toy, seed=3)
    for k in ("smallest_greedy_roles", "smallest_lattice_roles", "largest_greedy_roles",
              "largest_lattice_roles", "seed"):
        assert k in res.stats
    assert res.n_roles == min(res.stats["smallest_lattice_roles"], res.stats["largest_lattice_roles"])
    assert verify_policy(toy, res.policy).sound


def test_prior_heuristic_single_edge():
    assert run_prior_heuristic(AccessMatrix.from_pairs([("a", "x")])).n_roles == 1


def two_blocks():
    pairs = [(f"a{u}", f"x{p}") for u in range(15) for p in range(15)]
    pairs += [(f"b{u}", f"y{p}") for u in range(15) for p in range(15)]
    rng = np.random.default_rng(0)
    extra = set()
    while len(extra) < 10:
        u = int(rng.integers(0, 10))
        p = int(rng.integers(0, 40))
        extra.add((f"c{u}", f"x{p}" if p < 15 else (f"y{p - 15}" if p < 30 else f"z{p}")))
    return AccessMatrix.from_pairs(pairs + sorted(extra))


def test_large_phase_adopts_the_two_blocks():
    g = two_blocks()
    full = EnumContext(g, g.all_edges)
    blocks = g.block_mask(range(15), range(15))
    rest = EnumContext(g, g.all_edges & ~blocks & ~g.block_mask(
        [g.user_index(f"b{u}") for u in range(15)], [g.perm_index(f"y{p}") for p in range(15)]))
    easy = count_with_threshold(rest).count
    assert count_with_threshold(full).count > easy
    ctx = EnumContext(g, g.all_edges, count_threshold=easy)
    roles, active, stats = large_biclique_phase(ctx, HardConfig(200, easy))
    assert len(roles) == 2 and stats["large_fallbacks"] == 0
    assert all(m.bit_count() == 225 for m in roles)
    assert active.bit_count() == g.n_edges - 450


def test_large_phase_noop_when_easy(toy):
    ctx = EnumContext.from_reduction(reduce(toy))
    roles, active, _ = large_biclique_phase(ctx, HardConfig(2, 100))
    assert roles == [] and active == ctx.active


def test_large_phase_fallback_terminates(toy):
    ctx = EnumContext(toy, toy.all_edges, count_threshold=1)
    roles, active, stats = large_biclique_phase(ctx, HardConfig(50, 1))
    assert stats["large_fallbacks"] >= 1
    assert count_with_threshold(ctx.with_active(active)).count <= 1


def test_mine_hard_on_unreduced_instance():
    g = random_bipartite(10, 10, 0.5, seed=4)
    res = mine_hard(g, MinerConfig(count_threshold=10, large_edge_threshold=4))
    assert verify_policy(g, res.policy).sound
    assert res.stats["roles_large"] >= 1 and res.stats["proof"] == "heuristic"
    assert sum(r.provenance == LARGE for r in res.policy.roles) >= 1
    assert res.n_roles >= mine_exact(g).n_roles


def test_mine_hard_equals_exact_when_easy(toy):
    a = mine_hard(toy)
    b = mine_exact(toy)
    assert a.n_roles == b.n_roles and a.stats["roles_large"] == 0


@settings(max_examples=100, deadline=None)
@given(matrices(max_edges=12), st.integers(1, 4), st.integers(1, 6))
def test_mine_hard_never_beats_optimum(g, threshold, large):
    res = mine_hard(g, MinerConfig(count_threshold=threshold, large_edge_threshold=large))
    assert verify_policy(g, res.policy).sound
    assert res.n_roles >= min_biclique_cover(g)


def test_split_sizes_and_union():
    g = AccessMatrix.from_pairs([(f"u{u}", f"p{(u * 3 + k) % 7}") for u in range(10) for k in range(2)])
    pieces = split_pieces(g, 3)
    assert [p.n_users for p in pieces] == [4, 3, 3]
    union = set()
    for p in pieces:
        union |= set(p.edge_pairs())
    assert union == set(g.edge_pairs())
    assert split_pieces(g, 1) == [g]
    with pytest.raises(ValueError):
        split_pieces(g, 0)
    with pytest.raises(ValueError):
        split_pieces(g, 11)


def test_split_even_halves():
    g = AccessMatrix.from_pairs([(f"u{u}", f"p{u % 5}") for u in range(9992)])
    assert [p.n_users for p in split_pieces(g, 2)] == [4996, 4996]


def test_mine_hardest_on_toy(toy):
    res = mine_hardest(toy, MinerConfig(n_pieces=2))
    assert verify_policy(toy, res.policy).sound and res.n_roles >= 4
    with pytest.raises(ValueError):
        mine_hardest(toy, MinerConfig(n_pieces=1))


@settings(max_examples=60, deadline=None)
@given(matrices(max_edges=16), st.integers(2, 3))
def test_mine_hardest_sound(g, k):
    if g.n_users < k:
        return
    res = mine_hardest(g, MinerConfig(n_pieces=k))
    assert verify_policy(g, res.policy).sound
    assert res.stats["roles_total"] <= res.stats["roles_initial"]


def test_error_pct():
    assert error_pct(99, 30) == pytest.approx(230.0)
    assert error_pct(30, 30) == 0.0
    assert round(error_pct(3012, 2000)) == 51
    with pytest.raises(ValueError):
        error_pct(3, 0)


def test_hard_config_validation():
    with pytest.raises(ValueError):
        HardConfig(large_edge_threshold=0)
    with pytest.raises(ValueError):
        HardConfig(n_pieces=0)
