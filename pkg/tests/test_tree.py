"""Game-tree structure, validation, and plan predicates.

The two figure games act as ground truth: their plan subsets and structure
sets are small enough to check against explicit path enumeration.
"""

import numpy as np
import pytest

from icfr import games
from icfr.tree import (GameTree, Plan, PlanProfile, Sequence, TreeBuilder,
                       structurally_equal, validate)


@pytest.fixture(scope="module")
def fig1():
    return games.figure_one()


@pytest.fixture(scope="module")
def fig3():
    return games.figure_three()


def iso_by_key(tree, player, key):
    for iso in range(tree.num_infosets):
        if tree.infoset_player[iso] == player and tree.infoset_keys[iso] == key:
            return iso
    raise KeyError(key)


def all_plans(tree, player):
    from itertools import product
    ranges = [range(tree.num_actions(int(i))) for i in tree.player_infosets(player)]
    return [Plan.of(player, p) for p in product(*ranges)]


# -- validation ---------------------------------------------------------------

def test_figure_one_validates_cleanly(fig1):
    assert validate(fig1).ok


def test_single_terminal_game_validates():
    b = TreeBuilder(2)
    tree = b.build(b.terminal((1.0, -1.0)))
    assert validate(tree).ok
    assert tree.num_terminals == 1


def test_mismatched_actions_in_one_infoset_are_flagged():
    b = TreeBuilder(2)
    z = [b.terminal((0.0, 0.0)) for _ in range(4)]
    d1 = b.decision(0, "D", ("g", "h"), [z[0], z[1]])
    d2 = b.decision(0, "D", ("g", "x"), [z[2], z[3]])
    y = b.decision(1, "Y", ("l", "r"), [d1, d2])
    tree = b.build(y, check=False)
    report = validate(tree)
    assert not report.ok
    flagged = {v.subject for v in report.violations if v.kind == "actions"}
    assert int(tree.node_infoset[d1]) in flagged


def test_imperfect_recall_is_flagged():
    # the same infoset reached once after playing a and once after playing b
    b = TreeBuilder(1)
    z = [b.terminal((0.0,)) for _ in range(4)]
    d1 = b.decision(0, "later", ("x", "y"), [z[0], z[1]])
    d2 = b.decision(0, "later", ("x", "y"), [z[2], z[3]])
    root = b.decision(0, "first", ("a", "b"), [d1, d2])
    tree = b.build(root, check=False)
    report = validate(tree)
    assert any(v.kind == "recall" for v in report.violations)


def test_bad_chance_probabilities_are_flagged():
    b = TreeBuilder(1)
    z1, z2 = b.terminal((0.0,)), b.terminal((1.0,))
    tree = b.build(b.chance([("h", 0.6, z1), ("t", 0.6, z2)]), check=False)
    report = validate(tree)
    assert any(v.kind == "chance" for v in report.violations)


def test_duplicate_parent_is_structural_violation():
    b = TreeBuilder(1)
    z = b.terminal((0.0,))
    root = b.decision(0, "i", ("a", "b"), [z, z])
    report = validate(b.build(root, check=False))
    assert any(v.kind == "structure" for v in report.violations)


# -- infoset order and structure queries --------------------------------------

def test_figure_three_infoset_order(fig3):
    order = [fig3.infoset_keys[int(i)] for i in fig3.player_infosets(0)]
    assert order == ["I", "J"]


def test_player_without_infosets_has_empty_order():
    b = TreeBuilder(2)
    z1, z2 = b.terminal((0.0, 0.0)), b.terminal((1.0, 0.0))
    tree = b.build(b.decision(0, "only", ("a", "b"), [z1, z2]))
    assert len(tree.player_infosets(1)) == 0


def test_figure_one_order_is_precedence_consistent(fig1):
    order = [fig1.infoset_keys[int(i)] for i in fig1.player_infosets(0)]
    assert order[0] == "A"
    assert set(order[1:]) == {"B", "C", "D"}
    # pairwise precedence from explicit path enumeration: A precedes the rest
    a = iso_by_key(fig1, 0, "A")
    for key in ("B", "C", "D"):
        iso = iso_by_key(fig1, 0, key)
        assert a in [p for p, _ in fig1.sequence_chain(iso)]


def test_figure_one_children_and_descendants(fig1):
    a = iso_by_key(fig1, 0, "A")
    keys = lambda isos: sorted(fig1.infoset_keys[i] for i in isos)
    assert keys(fig1.children_infosets(a, 0)) == ["B", "C"]
    assert keys(fig1.children_infosets(a, 1)) == ["D"]
    assert keys(fig1.descendant_infosets(a)) == ["A", "B", "C", "D"]


def test_root_infoset_has_empty_parent_sequence(fig1):
    a = iso_by_key(fig1, 0, "A")
    assert fig1.parent_sequence(a).is_empty


def test_figure_three_blocking_sequences(fig3):
    i_iso = iso_by_key(fig3, 0, "I")
    j_iso = iso_by_key(fig3, 0, "J")
    assert fig3.blocking_sequences(i_iso) == []
    blocked = fig3.blocking_sequences(j_iso)
    assert blocked == [Sequence(0, i_iso, 1)]   # action b at I


def test_terminal_sets_partition(fig1):
    for iso in range(fig1.num_infosets):
        z_all = set(fig1.terminals_from(iso).tolist())
        for a in range(fig1.num_actions(iso)):
            za = set(fig1.terminals_from_action(iso, a).tolist())
            zc = set(fig1.terminals_excluding_action(iso, a).tolist())
            assert za | zc == z_all
            assert not za & zc


def test_unknown_action_raises(fig3):
    with pytest.raises(ValueError):
        fig3.terminals_from_action(0, 5)


# -- plan predicates -----------------------------------------------------------

def plan_from_labels(tree, player, labels):
    """Build a plan from one action label per infoset, in view order."""
    choices = []
    for iso in tree.player_infosets(player):
        actions = tree.infoset_actions(int(iso))
        choices.append(actions.index(labels[tree.infoset_keys[int(iso)]]))
    return Plan.of(player, choices)


def figure_one_plan_table(fig1):
    """Plans indexed 1..16 exactly as enumerated in the drawing."""
    from itertools import product
    table = {}
    for idx, (a, c, e, g) in enumerate(product("ab", "cd", "ef", "gh"), start=1):
        table[idx] = plan_from_labels(fig1, 0, {"A": a, "B": c, "C": e, "D": g})
    return table


def test_figure_one_plan_subsets(fig1):
    plans = figure_one_plan_table(fig1)
    c_iso = iso_by_key(fig1, 0, "C")
    a_iso = iso_by_key(fig1, 0, "A")
    f_idx = fig1.infoset_actions(c_iso).index("f")

    members = {i for i, p in plans.items()
               if fig1.plan_in_sequence(p, Sequence(0, c_iso, f_idx))}
    assert members == {3, 4, 7, 8}

    reach_a = {i for i, p in plans.items() if fig1.plan_reaches_infoset(p, a_iso)}
    assert reach_a == set(range(1, 17))

    # leftmost leaf: actions a at A, left at X, c at B
    leftmost = int(fig1.terminals_from_action(iso_by_key(fig1, 0, "B"), 0)[0])
    reach_z = {i for i, p in plans.items() if fig1.plan_reaches_terminal(p, leftmost)}
    assert reach_z == {1, 2, 3, 4}


def test_sequence_sets_partition_reaching_plans(fig1):
    for player in range(2):
        plans = all_plans(fig1, player)
        for iso in fig1.player_infosets(player):
            iso = int(iso)
            reaching = [p for p in plans if fig1.plan_reaches_infoset(p, iso)]
            buckets = [[p for p in reaching
                        if fig1.plan_in_sequence(p, Sequence(player, iso, a))]
                       for a in range(fig1.num_actions(iso))]
            assert sum(len(b) for b in buckets) == len(reaching)


def test_partial_plan_reachability(fig3):
    j_iso = iso_by_key(fig3, 0, "J")
    partial = Plan.empty(0, 2)
    assert fig3.plan_reaches_infoset(partial, j_iso)   # nothing assigned yet
    partial.choices[0] = 1                             # b at I blocks J
    assert not fig3.plan_reaches_infoset(partial, j_iso)


def test_chance_free_profile_reaches_exactly_one_terminal(fig1):
    plans0 = all_plans(fig1, 0)
    plans1 = all_plans(fig1, 1)
    for p0 in plans0[:4]:
        for p1 in plans1:
            profile = PlanProfile((p0, p1))
            hits = [z for z in range(fig1.num_terminals) if fig1.profile_reaches(profile, z)]
            assert len(hits) == 1


def test_reach_function_against_enumeration(fig1):
    """rho agrees with explicit path checks on every (plan, infoset, z)."""
    for player in range(2):
        view = fig1.view(player)
        for plan in all_plans(fig1, player):
            vec = view.reach_vector(plan.choices)
            for z in range(fig1.num_terminals):
                assert bool(vec[z]) == fig1.plan_reaches_terminal(plan, z)
            for iso in fig1.player_infosets(player):
                iso = int(iso)
                for z in fig1.terminals_from(iso):
                    rho = fig1.reach_from(plan, iso, int(z))
                    # brute force: membership below iso via the terminal chain
                    chain = view.terminal_chain(int(z))
                    below = False
                    expect = 1
                    for giso, act in chain:
                        if giso == iso:
                            below = True
                        if below and plan.choices[view.local[giso]] != act:
                            expect = 0
                    assert rho == (expect if below else 0)


def test_perfect_recall_consequence(fig1):
    """Every node of an infoset induces the same owner action sequence."""
    for iso in range(fig1.num_infosets):
        player = int(fig1.infoset_player[iso])
        chains = set()
        for nid in fig1.infoset_nodes(iso):
            pairs = []
            cur = int(nid)
            while True:
                parent = int(fig1.parent[cur])
                if parent < 0:
                    break
                if fig1.node_kind(parent) == 0 and fig1.node_player[parent] == player:
                    pairs.append((int(fig1.node_infoset[parent]), int(fig1.parent_slot[cur])))
                cur = parent
            chains.add(tuple(reversed(pairs)))
        assert len(chains) == 1
        assert chains.pop() == fig1.sequence_chain(iso)


def test_structural_equality_detects_payoff_change(fig3):
    other = games.figure_three(payoffs=(5.0, 1.0, 2.0))
    assert structurally_equal(fig3, games.figure_three())
    assert not structurally_equal(fig3, other)
