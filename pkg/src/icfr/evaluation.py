"""Empirical frequency of play and equilibrium-gap evaluation.

The evaluator aggregates, from the distribution over realised joint plans,
per-trigger terminal weights (how much probability mass flows to each
terminal while a given sequence is recommended and the opponents play on),
then computes best-deviation gains by bottom-up best response.  Three gap
notions: triggered deviations conditioned on the recommended action, coarse
per-infoset deviations independent of the recommendation, and coarse
whole-plan deviations from the root.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import best_response_values
from .dynamics import player_pcu
from .tree import GameTree


class EmpiricalFrequency:
    """Counted multiset of joint plan profiles; keys are per-player tuples of
    action indices over the players' infosets in view order."""

    def __init__(self, tree: GameTree):
        self.tree = tree
        self.counts: Counter = Counter()
        self.total = 0

    def record(self, profile_key) -> None:
        self.counts[profile_key] += 1
        self.total += 1

    def record_choices(self, choices) -> None:
        self.record(tuple(tuple(int(a) for a in c) for c in choices))

    def distribution(self):
        """(profile_key, probability) pairs; probabilities sum to one."""
        if self.total == 0:
            raise ValueError("empty frequency: nothing recorded yet")
        t = self.total
        return [(k, c / t) for k, c in self.counts.items()]


@dataclass
class DeviationReport:
    """Per-player deviation gaps (may be negative) and their maxima."""

    iterations: int
    efce: list | None = None           # per player: float
    efcce: list | None = None
    nfcce: list | None = None
    efce_argmax: list | None = None    # per player: (infoset, action) or None
    efce_gains: list | None = None     # per player: per-pair gains
    efcce_gains: list | None = None    # per player: per-infoset gains

    def overall(self, kind: str) -> float:
        vals = getattr(self, kind)
        if vals is None:
            raise ValueError(f"{kind} gaps were not evaluated")
        return max(vals)


class GapEvaluator:
    """Evaluates deviation gaps of an empirical frequency on a fixed tree.

    Reach vectors and triggered-sequence lists are cached per distinct plan,
    so repeated evaluation over checkpoints stays cheap.
    """

    def __init__(self, tree: GameTree):
        self.tree = tree
        self.views = [tree.view(i) for i in range(tree.players)]
        self.pcu = [player_pcu(tree, i) for i in range(tree.players)]
        self._reach_cache: list[dict] = [dict() for _ in range(tree.players)]
        self._trigger_cache: list[dict] = [dict() for _ in range(tree.players)]

    def _reach(self, player: int, key) -> np.ndarray:
        cache = self._reach_cache[player]
        vec = cache.get(key)
        if vec is None:
            vec = self.views[player].reach_vector(np.asarray(key, dtype=np.int16))
            cache[key] = vec
        return vec

    def _triggers(self, player: int, key) -> np.ndarray:
        from .dynamics import plan_on_path

        cache = self._trigger_cache[player]
        taus = cache.get(key)
        if taus is None:
            view = self.views[player]
            choices = np.asarray(key, dtype=np.int16)
            taus = np.array([view.pair_off[li] + choices[li] for li in range(view.n)
                             if plan_on_path(view, choices, li)], dtype=np.int64)
            cache[key] = taus
        return taus

    def aggregate(self, freq: EmpiricalFrequency):
        """Per player: trigger-conditioned opponent-weighted terminal masses
        (last row: unconditioned), plus the all-players reach mass."""
        tree = self.tree
        nz = tree.num_terminals
        weights = [np.zeros((v.n_pairs + 1, nz)) for v in self.views]
        joint = np.zeros(nz)
        for key, prob in freq.distribution():
            reach = [self._reach(i, key[i]) for i in range(tree.players)]
            all_reach = np.ones(nz, dtype=bool)
            for r in reach:
                all_reach &= r
            joint += prob * all_reach
            for i in range(tree.players):
                opp = np.ones(nz, dtype=bool)
                for j, r in enumerate(reach):
                    if j != i:
                        opp &= r
                w = weights[i]
                opp_mass = prob * opp
                for tau in self._triggers(i, key[i]):
                    w[tau] += opp_mass
                w[-1] += opp_mass
        return weights, joint

    def evaluate(self, freq: EmpiricalFrequency,
                 kinds=("efce", "efcce", "nfcce")) -> DeviationReport:
        tree = self.tree
        weights, joint = self.aggregate(freq)
        report = DeviationReport(iterations=freq.total)
        want = set(kinds)
        if want & {"efce", "efcce"}:
            report.efce = [] if "efce" in want else None
            report.efce_argmax = [] if "efce" in want else None
            report.efce_gains = [] if "efce" in want else None
            report.efcce = [] if "efcce" in want else None
            report.efcce_gains = [] if "efcce" in want else None
        if "nfcce" in want:
            report.nfcce = []

        for i in range(tree.players):
            view = self.views[i]
            pcu = self.pcu[i]
            # follow-values: summed mass-weighted payoff below every pair
            follow_pair = view.segment_sums(joint * pcu)
            follow_below = np.zeros(view.n_pairs)
            follow_infoset = np.zeros(view.n)
            for li in range(view.n - 1, -1, -1):
                for p in range(view.pair_off[li], view.pair_off[li + 1]):
                    kids = view.children_local(p)
                    follow_below[p] = follow_pair[p] + (follow_infoset[kids].sum()
                                                        if len(kids) else 0.0)
                lo, hi = view.pair_off[li], view.pair_off[li + 1]
                follow_infoset[li] = follow_below[lo:hi].sum()

            if "efce" in want:
                gains = np.empty(view.n_pairs)
                for tau in range(view.n_pairs):
                    li = view.pair_local_infoset(tau)
                    dev = best_response_values(view, view.segment_sums(weights[i][tau] * pcu))
                    gains[tau] = dev[li] - follow_below[tau]
                best = int(np.argmax(gains))
                report.efce.append(float(gains[best]))
                report.efce_argmax.append(view.pair_decode(best))
                report.efce_gains.append(gains)

            if "efcce" in want:
                gains_i = np.empty(view.n)
                for li in range(view.n):
                    chain = view.chain[li]
                    tau = int(chain[-1]) if len(chain) else view.n_pairs
                    dev = best_response_values(view, view.segment_sums(weights[i][tau] * pcu))
                    gains_i[li] = dev[li] - follow_infoset[li]
                report.efcce.append(float(gains_i.max()))
                report.efcce_gains.append(gains_i)

            if "nfcce" in want:
                g = weights[i][-1] * pcu
                dev = best_response_values(view, view.segment_sums(g))
                base = float(g[view.base_terms].sum()) if len(view.base_terms) else 0.0
                roots = [li for li in range(view.n) if not len(view.chain[li])]
                value = base + sum(float(dev[li]) for li in roots)
                report.nfcce.append(value - float((joint * pcu).sum()))

        return report

    def social_welfare(self, freq: EmpiricalFrequency):
        """Per-player expected utility under the empirical frequency (exact
        chance marginalisation) and their sum."""
        _, joint = self.aggregate(freq)
        per_player = [float((joint * self.pcu[i]).sum()) for i in range(self.tree.players)]
        return per_player, float(sum(per_player))


def efcce_decomposition_violations(report: DeviationReport, tree: GameTree,
                                   tol: float = 1e-9):
    """Check, per infoset, that the coarse per-infoset gain never exceeds the
    sum of positive parts of the per-action triggered gains."""
    out = []
    if report.efce_gains is None or report.efcce_gains is None:
        raise ValueError("report must carry both efce and efcce gains")
    for i in range(tree.players):
        view = tree.view(i)
        pair_gains = report.efce_gains[i]
        for li in range(view.n):
            lo, hi = view.pair_off[li], view.pair_off[li + 1]
            bound = float(np.maximum(pair_gains[lo:hi], 0.0).sum())
            gain = float(report.efcce_gains[i][li])
            if gain > bound + tol:
                out.append((i, li, gain, bound))
    return out
