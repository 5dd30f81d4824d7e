"""Trigger, subtree, and laminar regrets over a run, plus decomposition checks.

Regrets are computed two ways: incrementally from additive accumulators
maintained during the run, and by definition from a replayed record; the two
paths must agree to 1e-9.  A trigger is one of the player's sequences; the
empty sequence is carried as an extra trigger index so the ascent inequality
(summing a regret over an infoset's actions bounds the parent-sequence
regret) can be checked at root infosets too.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import GameTree, PlayerView


class TriggerAccumulators:
    """Additive per-trigger sums for one player.

    Trigger index: pair index for sequences (I, a), ``n_pairs`` for the empty
    sequence.  Per trigger tau: ``counts[tau]`` activations, ``imm[tau, p]``
    summed immediate utilities, ``cf[tau, p]`` summed counterfactual action
    values, ``followed[tau, I]`` summed realised subtree values.
    """

    def __init__(self, view: PlayerView):
        self.view = view
        n_trig = view.n_pairs + 1
        self.counts = np.zeros(n_trig, dtype=np.int64)
        self.imm = np.zeros((n_trig, view.n_pairs))
        self.cf = np.zeros((n_trig, view.n_pairs))
        self.followed = np.zeros((n_trig, view.n))
        self.iterations = 0

    @property
    def empty_trigger(self) -> int:
        return self.view.n_pairs

    def triggered(self, choices: np.ndarray) -> list[int]:
        """Sequences consistent with the realised plan: (I, plan(I)) for every
        infoset the plan reaches, plus the empty sequence."""
        from .dynamics import plan_on_path

        view = self.view
        out = [self.empty_trigger]
        for li in range(view.n):
            if plan_on_path(view, choices, li):
                out.append(int(view.pair_off[li] + choices[li]))
        return out

    def consume(self, choices: np.ndarray, u: np.ndarray, uhat: np.ndarray,
                values: np.ndarray) -> None:
        for tau in self.triggered(choices):
            self.counts[tau] += 1
            self.imm[tau] += u
            self.cf[tau] += uhat
            self.followed[tau] += values
        self.iterations += 1

    # -- trigger scopes ---------------------------------------------------------

    def trigger_infoset(self, tau: int) -> int | None:
        """Local infoset of the trigger, None for the empty sequence."""
        if tau == self.empty_trigger:
            return None
        return self.view.pair_local_infoset(tau)

    def in_scope(self, tau: int, li: int) -> bool:
        """Whether local infoset ``li`` weakly follows the trigger's infoset."""
        root = self.trigger_infoset(tau)
        if root is None:
            return True
        if root == li:
            return True
        chain_infosets = {self.view.pair_local_infoset(int(p)) for p in self.view.chain[li]}
        return root in chain_infosets


def best_response_values(view: PlayerView, pair_weights: np.ndarray) -> np.ndarray:
    """Bottom-up best response against additive per-(infoset, action) weights:
    value(I) = max_a (w[I, a] + sum of child values)."""
    values = np.zeros(view.n)
    for li in range(view.n - 1, -1, -1):
        best = -np.inf
        for p in range(view.pair_off[li], view.pair_off[li + 1]):
            kids = view.children_local(p)
            cand = pair_weights[p] + (values[kids].sum() if len(kids) else 0.0)
            best = max(best, cand)
        values[li] = best
    return values


def subtree_regret(acc: TriggerAccumulators, tau: int, li: int) -> float:
    """Best deviation value minus realised value at infoset ``li``, summed over
    the trigger's activations.  May be negative."""
    if not acc.in_scope(tau, li):
        raise ValueError(f"infoset {li} does not follow the trigger's infoset")
    dp = best_response_values(acc.view, acc.imm[tau])
    return float(dp[li] - acc.followed[tau, li])


def trigger_regret(acc: TriggerAccumulators, tau: int) -> float:
    """Subtree regret at the trigger's own infoset."""
    li = acc.trigger_infoset(tau)
    if li is None:
        raise ValueError("the empty sequence has no trigger regret")
    return subtree_regret(acc, tau, li)


def laminar_regret_action(acc: TriggerAccumulators, tau: int, li: int, action: int) -> float:
    """Summed advantage of playing ``action`` at ``li`` (following the realised
    plan below) over the realised play, across triggered iterations."""
    if not acc.in_scope(tau, li):
        raise ValueError(f"infoset {li} does not follow the trigger's infoset")
    p = acc.view.pair_off[li] + action
    return float(acc.cf[tau, p] - acc.followed[tau, li])


def laminar_regret(acc: TriggerAccumulators, tau: int, li: int) -> float:
    lo, hi = acc.view.pair_off[li], acc.view.pair_off[li + 1]
    if not acc.in_scope(tau, li):
        raise ValueError(f"infoset {li} does not follow the trigger's infoset")
    return float(acc.cf[tau, lo:hi].max() - acc.followed[tau, li])


def max_trigger_regret(acc: TriggerAccumulators) -> tuple[float, int | None]:
    """Largest trigger regret over the player's sequences, with its argmax."""
    best, arg = -np.inf, None
    for tau in range(acc.view.n_pairs):
        r = trigger_regret(acc, tau)
        if r > best:
            best, arg = r, tau
    return best, arg


def replay_accumulators(record, player: int) -> TriggerAccumulators:
    """Definition path: rebuild the accumulators by rescanning the record
    (recomputing tables from the realised profiles when not stored)."""
    view = record.tree.view(player)
    acc = TriggerAccumulators(view)
    for t in range(record.length):
        choices = record.profile_choices(t)
        u, uhat, values = record.player_tables(t, player)
        acc.consume(choices[player], u, uhat, values)
    return acc


@dataclass
class DecompositionViolation:
    player: int
    check: str
    trigger: int
    infoset: int
    lhs: float
    rhs: float

    @property
    def excess(self) -> float:
        return self.lhs - self.rhs


@dataclass
class DecompositionReport:
    violations: list[DecompositionViolation] = field(default_factory=list)
    checks: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def check_decomposition(accs: list[TriggerAccumulators], tol: float = 1e-9) -> DecompositionReport:
    """Verify, for every (trigger, infoset) pair in scope:

    - recursion equality: the subtree regret equals the best single-action
      laminar term plus the children's subtree regrets;
    - laminar bound: the subtree regret is at most the best-response sum of
      laminar regrets over reachable infosets;
    - ascent inequality: the parent-sequence laminar regret is at most the sum
      over the parent infoset's actions of the per-sequence laminar regrets.
    """
    report = DecompositionReport()
    for player, acc in enumerate(accs):
        view = acc.view
        triggers = list(range(view.n_pairs + 1))
        for tau in triggers:
            dp = best_response_values(view, acc.imm[tau])
            sub = dp - acc.followed[tau]          # subtree regret per infoset
            lam = np.empty(view.n)                # laminar regret per infoset
            for li in range(view.n):
                lo, hi = view.pair_off[li], view.pair_off[li + 1]
                lam[li] = acc.cf[tau, lo:hi].max() - acc.followed[tau, li]
            root = acc.trigger_infoset(tau)
            scope = range(view.n) if root is None else view.descendants(root)

            # recursion equality
            for li in scope:
                best = -np.inf
                for p in range(view.pair_off[li], view.pair_off[li + 1]):
                    kids = view.children_local(p)
                    cand = (acc.cf[tau, p] - acc.followed[tau, li]
                            + (sub[kids].sum() if len(kids) else 0.0))
                    best = max(best, cand)
                report.checks += 1
                if abs(sub[li] - best) > tol:
                    report.violations.append(DecompositionViolation(
                        player, "recursion", tau, li, float(sub[li]), float(best)))

            # laminar best-response bound
            bound = np.zeros(view.n)
            for li in range(view.n - 1, -1, -1):
                best_kids = -np.inf
                for p in range(view.pair_off[li], view.pair_off[li + 1]):
                    kids = view.children_local(p)
                    best_kids = max(best_kids, bound[kids].sum() if len(kids) else 0.0)
                bound[li] = lam[li] + best_kids
            for li in scope:
                report.checks += 1
                if sub[li] > bound[li] + tol:
                    report.violations.append(DecompositionViolation(
                        player, "laminar-bound", tau, li, float(sub[li]), float(bound[li])))

        # ascent inequality: over (I, J) with I weakly preceding J
        for li in range(view.n):
            ancestors = [view.pair_local_infoset(int(p)) for p in view.chain[li]] + [li]
            for anc in ancestors:
                lo, hi = view.pair_off[anc], view.pair_off[anc + 1]
                anc_parent = view.chain[anc][-1] if len(view.chain[anc]) else None
                anc_tau = int(anc_parent) if anc_parent is not None else acc.empty_trigger
                lhs = laminar_regret(acc, anc_tau, li)
                rhs = sum(laminar_regret(acc, int(p), li) for p in range(lo, hi))
                report.checks += 1
                if lhs > rhs + tol:
                    report.violations.append(DecompositionViolation(
                        player, "ascent", anc_tau, li, float(lhs), float(rhs)))
    return report


def accumulator_consumer(tree: GameTree):
    """Build per-player accumulators plus a Runner consumer updating them."""
    accs = [TriggerAccumulators(tree.view(i)) for i in range(tree.players)]

    def consume(t, choices, tables):
        for i, acc in enumerate(accs):
            u, uhat, values = tables[i]
            acc.consume(choices[i], u, uhat, values)

    return accs, consume
