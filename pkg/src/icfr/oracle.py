"""Brute-force ground truth on small games.

Everything here works from first definitions: plans are enumerated
explicitly, memberships are decided by the tree's path-walking predicates,
and deviation values are maximised over pure plans by direct summation over
terminals.  No best-response recursion and no vectorised reach tables are
used, so agreement with the main evaluators is a genuine dual-route check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .diagnostics import replay_accumulators, max_trigger_regret
from .evaluation import EmpiricalFrequency, GapEvaluator
from .tree import GameTree, Plan, Sequence

PLAN_LIMIT = 10 ** 6


def plan_count(tree: GameTree, player: int) -> int:
    isos = tree.player_infosets(player)
    return int(math.prod(tree.num_actions(int(i)) for i in isos))


def enumerate_plans(tree: GameTree, player: int, limit: int = PLAN_LIMIT):
    """All plans as tuples of action indices (view order), lexicographic with
    the last infoset varying fastest."""
    count = plan_count(tree, player)
    if count > limit:
        raise ValueError(f"player {player} has {count} plans, above the limit {limit}")
    ranges = [range(tree.num_actions(int(i))) for i in tree.player_infosets(player)]
    return [tuple(p) for p in product(*ranges)]


@dataclass
class TriggerGapDetail:
    player: int
    infoset: int
    action: int
    gain: float
    identity_residual: float      # max |y - (p + q)| over excluded terminals
    reduction_residual: float     # |three-term gap - reduced gap| over deviations


@dataclass
class OracleReport:
    delta: float
    argmax: tuple | None
    details: list[TriggerGapDetail] = field(default_factory=list)

    @property
    def max_identity_residual(self) -> float:
        return max((d.identity_residual for d in self.details), default=0.0)

    @property
    def max_reduction_residual(self) -> float:
        return max((d.reduction_residual for d in self.details), default=0.0)


def gap_by_enumeration(freq: EmpiricalFrequency, tree: GameTree,
                       limit: int = PLAN_LIMIT) -> OracleReport:
    """Maximum deviation gain straight from the definitions.

    For every player, sequence (I, a), and pure deviation plan reaching I,
    the triggered flow (mass of profiles recommending (I, a) whose opponents
    reach each terminal, times the deviator's own reach) is summed against
    the follow flow over terminals below (I, a).  Also verifies per sequence
    that the excluded-terminal flow equals triggered plus untriggered flow,
    and that the three-term inequality reduces to the two-term form.
    """
    support = freq.distribution()
    nz = tree.num_terminals
    pc = tree.chance_reach

    plans = {i: enumerate_plans(tree, i, limit) for i in range(tree.players)}
    plan_objs = {i: [Plan.of(i, p) for p in plans[i]] for i in range(tree.players)}

    # memberships per support profile, via predicates
    support_reach = []   # per profile: per player: bool per terminal
    for key, prob in support:
        per_player = []
        for i in range(tree.players):
            plan = Plan.of(i, key[i])
            per_player.append(np.array([tree.plan_reaches_terminal(plan, z)
                                        for z in range(nz)], dtype=bool))
        support_reach.append(per_player)

    q_weight = np.zeros(nz)   # untriggered flow, chance excluded
    for (key, prob), reach in zip(support, support_reach):
        allr = np.ones(nz, dtype=bool)
        for r in reach:
            allr &= r
        q_weight += prob * allr

    report = OracleReport(delta=-np.inf, argmax=None)
    for i in range(tree.players):
        payoff = tree.payoffs[:, i]
        # deviation-plan reach matrix, rows from the path predicates
        mat = np.zeros((len(plans[i]), nz), dtype=bool)
        for r, plan in enumerate(plan_objs[i]):
            for z in range(nz):
                mat[r, z] = tree.plan_reaches_terminal(plan, z)

        for iso in tree.player_infosets(i):
            iso = int(iso)
            reaches_iso = [tree.plan_reaches_infoset(plan, iso) for plan in plan_objs[i]]
            rows = np.flatnonzero(reaches_iso)
            z_iso = tree.terminals_from(iso)
            for a in range(tree.num_actions(iso)):
                seq = Sequence(i, iso, a)
                w = np.zeros(nz)
                for (key, prob), reach in zip(support, support_reach):
                    if not tree.plan_in_sequence(Plan.of(i, key[i]), seq):
                        continue
                    opp = np.ones(nz, dtype=bool)
                    for j in range(tree.players):
                        if j != i:
                            opp &= reach[j]
                    w += prob * opp

                z_in = tree.terminals_from_action(iso, a)
                z_out = tree.terminals_excluding_action(iso, a)
                follow = float((q_weight[z_in] * pc[z_in] * payoff[z_in]).sum())

                flow = w * pc * payoff
                gains = mat[rows][:, z_iso] @ flow[z_iso] - follow
                best_row = int(np.argmax(gains)) if len(gains) else 0
                gain = float(gains[best_row]) if len(gains) else -follow

                # excluded-terminal flow identity and three-term reduction,
                # checked for the best deviation plan
                hat = mat[rows[best_row]] if len(rows) else np.zeros(nz, dtype=bool)
                p_term = w * hat * pc
                q_term = q_weight * pc
                y_term = w * hat * pc + q_weight * pc
                identity = float(np.abs(y_term[z_out] - (p_term[z_out] + q_term[z_out])).max()
                                 if len(z_out) else 0.0)
                outside = np.setdiff1d(np.arange(nz), z_iso, assume_unique=False)
                lhs_full = float((q_term * payoff).sum())
                rhs_full = float((p_term[z_in] * payoff[z_in]).sum()
                                 + (y_term[z_out] * payoff[z_out]).sum()
                                 + (q_term[outside] * payoff[outside]).sum())
                gap_full = rhs_full - lhs_full
                gap_reduced = float((p_term[z_iso] * payoff[z_iso]).sum()) - follow
                reduction = abs(gap_full - gap_reduced)

                report.details.append(TriggerGapDetail(i, iso, a, gain, identity, reduction))
                if gain > report.delta:
                    report.delta = gain
                    report.argmax = (i, iso, a)
    return report


@dataclass
class Certificate:
    delta_enumeration: float
    delta_main: float
    delta_accumulator: float
    rho_identity_residual: float
    flow_identity_residual: float
    reduction_residual: float

    def residuals(self) -> dict:
        return {
            "enumeration_vs_main": abs(self.delta_enumeration - self.delta_main),
            "main_vs_accumulator": abs(self.delta_main - self.delta_accumulator),
            "rho_identity": self.rho_identity_residual,
            "flow_identity": self.flow_identity_residual,
            "three_term_reduction": self.reduction_residual,
        }

    def ok(self, tight: float = 1e-12, loose: float = 1e-9) -> bool:
        r = self.residuals()
        return (r["enumeration_vs_main"] <= tight
                and r["main_vs_accumulator"] <= loose
                and r["rho_identity"] <= loose
                and r["flow_identity"] <= tight
                and r["three_term_reduction"] <= tight)


def reach_identity_residual(tree: GameTree, record, t: int, player: int,
                            hat_key) -> float:
    """Residual of the value-difference identity at iteration ``t``: for every
    infoset, the recursion-computed value gap between a deviation plan and the
    realised plan must equal the reach-weighted payoff difference summed over
    the infoset's terminals."""
    from .dynamics import counterfactual_values

    view = tree.view(player)
    choices = record.profile_choices(t)
    u, _, values = record.player_tables(t, player)
    hat = np.asarray(hat_key, dtype=np.int16)
    hat_values, _ = counterfactual_values(view, hat, u)

    plan = Plan.of(player, choices[player])
    hat_plan = Plan.of(player, hat)
    others = [Plan.of(j, choices[j]) for j in range(tree.players) if j != player]
    worst = 0.0
    for li in range(view.n):
        iso = int(view.order[li])
        lhs = hat_values[li] - values[li]
        rhs = 0.0
        for z in tree.terminals_from(iso):
            z = int(z)
            rho_hat = tree.joint_reach_from(hat_plan, others, iso, z)
            rho = tree.joint_reach_from(plan, others, iso, z)
            rhs += (rho_hat - rho) * tree.chance_reach[z] * tree.payoffs[z, player]
        worst = max(worst, abs(lhs - rhs))
    return worst


def certify(record, tree: GameTree, freq: EmpiricalFrequency | None = None,
            rho_pairs: int = 100, seed: int = 0) -> Certificate:
    """Numerically certify a run record against the brute-force definitions."""
    if freq is None:
        freq = EmpiricalFrequency(tree)
        for key in record.profiles:
            freq.record(key)

    oracle = gap_by_enumeration(freq, tree)
    main = GapEvaluator(tree).evaluate(freq, kinds=("efce",))
    delta_main = main.overall("efce")

    delta_acc = -np.inf
    for i in range(tree.players):
        acc = replay_accumulators(record, i)
        delta_acc = max(delta_acc, max_trigger_regret(acc)[0] / record.length)

    rng = np.random.default_rng(seed)
    worst_rho = 0.0
    for _ in range(rho_pairs):
        t = int(rng.integers(record.length))
        player = int(rng.integers(tree.players))
        isos = tree.player_infosets(player)
        hat = tuple(int(rng.integers(tree.num_actions(int(iso)))) for iso in isos)
        worst_rho = max(worst_rho, reach_identity_residual(tree, record, t, player, hat))

    return Certificate(
        delta_enumeration=float(oracle.delta),
        delta_main=float(delta_main),
        delta_accumulator=float(delta_acc),
        rho_identity_residual=float(worst_rho),
        flow_identity_residual=float(oracle.max_identity_residual),
        reduction_residual=float(oracle.max_reduction_residual),
    )
