"""Uncoupled no-regret dynamics over an extensive-form game.

Every player keeps one internal regret minimizer per infoset and one external
regret minimizer per (blocking sequence, infoset) pair.  Each iteration every
player samples a full plan top-down (internal minimizer where the partial
plan still reaches the infoset, otherwise the external minimizer of the
unique blocking sequence), all players observe exact chance-marginalised
utilities induced by the realised opponent plans, and every minimizer
receives its indicator-weighted observation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .regret import ExternalRegretMatcher, InternalRegretMatcher, sample_index
from .tree import GameTree, Plan, PlayerView


class ContractViolation(RuntimeError):
    """An operation was called outside its precondition."""


def plan_on_path(view: PlayerView, choices: np.ndarray, li: int) -> bool:
    """Whether the (possibly partial) plan still allows reaching local infoset
    ``li``: every assigned ancestor follows the path action."""
    for pidx in view.chain[li]:
        lj = view.pair_local_infoset(int(pidx))
        chosen = choices[lj]
        if chosen >= 0 and view.pair_off[lj] + chosen != pidx:
            return False
    return True


def blocking_pair(view: PlayerView, choices: np.ndarray, li: int) -> int:
    """The unique blocking sequence for an unreachable infoset: walking from
    the root, the first ancestor whose assigned action leaves the path;
    returned as a pair index in the view."""
    for pidx in view.chain[li]:
        lj = view.pair_local_infoset(int(pidx))
        chosen = int(choices[lj])
        if chosen < 0:
            break
        actual = view.pair_off[lj] + chosen
        if actual != pidx:
            return int(actual)
    raise ContractViolation(f"infoset {li} is still reachable; no blocking sequence exists")


class PlayerState:
    """Registries of regret minimizers for one player.

    External minimizers are allocated on first touch; a fresh minimizer
    recommends uniformly, so lazy allocation is observationally identical to
    eager allocation.
    """

    def __init__(self, tree: GameTree, player: int, seed: int):
        self.view = tree.view(player)
        self.player = player
        self.seed = seed
        self.internal = [InternalRegretMatcher(int(n)) for n in self.view.n_actions]
        self.external: dict[tuple[int, int], ExternalRegretMatcher] = {}
        self._allowed = [set(map(int, self.view.blocked_pairs(li))) for li in range(self.view.n)]

    def external_for(self, pidx: int, li: int) -> ExternalRegretMatcher:
        key = (pidx, li)
        rm = self.external.get(key)
        if rm is None:
            if pidx not in self._allowed[li]:
                raise ContractViolation(
                    f"sequence pair {pidx} is not a blocking sequence of infoset {li}")
            rm = ExternalRegretMatcher(int(self.view.n_actions[li]))
            self.external[key] = rm
        return rm

    def sample_plan(self, t: int) -> np.ndarray:
        """One top-down pass: internal recommendation where the partial plan
        keeps the infoset reachable, external recommendation of the blocking
        sequence otherwise.  The RNG is derived from (seed, player, t,
        infoset), so trajectories replay exactly."""
        view = self.view
        choices = np.full(view.n, -1, dtype=np.int16)
        for li in range(view.n):
            if plan_on_path(view, choices, li):
                dist = self.internal[li].recommend()
            else:
                dist = self.external_for(blocking_pair(view, choices, li), li).recommend()
            rng = np.random.default_rng([self.seed, self.player, t, li])
            choices[li] = sample_index(dist, rng)
        return choices

    def update(self, choices: np.ndarray, uhat: np.ndarray):
        """Indicator-weighted observations: per infoset exactly one registered
        minimizer has indicator one (the one whose recommendation was
        followed); zero-weight observations are skipped outright.  Returns the
        touched minimizers for the benefit of invariant checks."""
        view = self.view
        touched = []
        for li in range(view.n):
            lo, hi = view.pair_off[li], view.pair_off[li + 1]
            vec = uhat[lo:hi]
            chosen = int(choices[li])
            if plan_on_path(view, choices, li):
                self.internal[li].observe(vec, chosen, 1.0)
                touched.append((li, "internal", None))
            else:
                pidx = blocking_pair(view, choices, li)
                self.external_for(pidx, li).observe(vec, chosen, 1.0)
                touched.append((li, "external", pidx))
        return touched


def immediate_utilities(view: PlayerView, opp_reach: np.ndarray, pcu: np.ndarray) -> np.ndarray:
    """u[I, a]: expected payoff over terminals immediately reachable from
    (I, a) -- no further own infoset in between -- gated by the opponents'
    realised plans and weighted by exact chance reach."""
    masked = np.where(opp_reach, pcu, 0.0)
    return view.segment_sums(masked)


def counterfactual_values(view: PlayerView, choices: np.ndarray, u: np.ndarray):
    """Bottom-up values: V[I] follows the plan, uhat[I, a] plays a at I and
    the plan below.  Returns (V over infosets, uhat over pairs)."""
    values = np.zeros(view.n)
    uhat = np.zeros(view.n_pairs)
    for li in range(view.n - 1, -1, -1):
        lo, hi = view.pair_off[li], view.pair_off[li + 1]
        for p in range(lo, hi):
            kids = view.children_local(p)
            uhat[p] = u[p] + (values[kids].sum() if len(kids) else 0.0)
        values[li] = uhat[lo + choices[li]]
    return values, uhat


@dataclass
class RunRecord:
    """Realised profiles of one run, with optionally stored per-iteration
    utility tables (recomputable from the profiles either way)."""

    tree: GameTree
    seed: int
    profiles: list = field(default_factory=list)   # per t: tuple of plan keys
    tables: list | None = None                     # per t: [(u, uhat, V)] per player

    @property
    def length(self) -> int:
        return len(self.profiles)

    def profile_choices(self, t: int) -> list[np.ndarray]:
        return [np.asarray(k, dtype=np.int16) for k in self.profiles[t]]

    def player_tables(self, t: int, player: int):
        """(u, uhat, V) for one iteration; recomputed when not stored."""
        if self.tables is not None:
            return self.tables[t][player]
        choices = self.profile_choices(t)
        reach = [self.tree.view(j).reach_vector(choices[j]) for j in range(self.tree.players)]
        return compute_player_tables(self.tree, choices, reach, player)

    def plans(self, t: int) -> list[Plan]:
        return [Plan.of(i, k) for i, k in enumerate(self.profiles[t])]


def player_pcu(tree: GameTree, player: int) -> np.ndarray:
    return tree.chance_reach * tree.payoffs[:, player]


def opponents_reach_vector(tree: GameTree, reach: list[np.ndarray], player: int) -> np.ndarray:
    opp = np.ones(tree.num_terminals, dtype=bool)
    for j in range(tree.players):
        if j != player:
            opp &= reach[j]
    return opp


def compute_player_tables(tree: GameTree, choices, reach, player):
    view = tree.view(player)
    opp = opponents_reach_vector(tree, reach, player)
    u = immediate_utilities(view, opp, player_pcu(tree, player))
    values, uhat = counterfactual_values(view, choices[player], u)
    return u, uhat, values


class Runner:
    """Drives all players simultaneously.

    Per iteration: every player samples from her time-t state, the realised
    profile fixes every utility table, then every player updates -- no player
    sees another's time-t update.  ``consumers`` receive
    (t, choices, tables) per iteration for recording and accumulation.
    """

    def __init__(self, tree: GameTree, seed: int, store_tables: bool = True,
                 hooks=(), consumers=()):
        self.tree = tree
        self.seed = seed
        self.states = [PlayerState(tree, i, seed) for i in range(tree.players)]
        self.t = 0
        self.record = RunRecord(tree, seed, tables=[] if store_tables else None)
        self.hooks = list(hooks)
        self.consumers = list(consumers)
        self._pcu = [player_pcu(tree, i) for i in range(tree.players)]

    def step(self) -> None:
        t = self.t + 1
        tree = self.tree
        choices = [state.sample_plan(t) for state in self.states]
        reach = [tree.view(j).reach_vector(choices[j]) for j in range(tree.players)]
        tables = []
        for i in range(tree.players):
            view = tree.view(i)
            opp = opponents_reach_vector(tree, reach, i)
            u = immediate_utilities(view, opp, self._pcu[i])
            values, uhat = counterfactual_values(view, choices[i], u)
            tables.append((u, uhat, values))
        for i, state in enumerate(self.states):
            state.update(choices[i], tables[i][1])
        self.record.profiles.append(tuple(tuple(int(a) for a in c) for c in choices))
        if self.record.tables is not None:
            self.record.tables.append(tables)
        for consumer in self.consumers:
            consumer(t, choices, tables)
        for hook in self.hooks:
            hook(t, self.record.profiles[-1])
        self.t = t

    def run_until(self, t_target: int) -> None:
        while self.t < t_target:
            self.step()

    def state_dict(self) -> dict:
        """Snapshot sufficient to resume the run deterministically (the
        per-iteration RNG is derived from (seed, t), so no RNG state is
        carried)."""
        ext = {}
        for i, st in enumerate(self.states):
            for key, rm in st.external.items():
                ext[(i, *key)] = rm.cumulative.copy()
        internal = {}
        for i, st in enumerate(self.states):
            for li, rm in enumerate(st.internal):
                internal[(i, li)] = [e.cumulative.copy() for e in rm.experts]
        return {"seed": self.seed, "t": self.t, "internal": internal, "external": ext,
                "profiles": list(self.record.profiles)}

    def load_state_dict(self, state: dict) -> None:
        if state["seed"] != self.seed:
            raise ValueError("snapshot belongs to a different seed")
        self.t = state["t"]
        for (i, li), arrays in state["internal"].items():
            for expert, arr in zip(self.states[i].internal[li].experts, arrays):
                expert.cumulative[:] = arr
        for (i, pidx, li), arr in state["external"].items():
            self.states[i].external_for(pidx, li).cumulative[:] = arr
        self.record.profiles = list(state["profiles"])
        if self.record.tables is not None:
            self.record.tables = None   # tables are recomputable; drop on resume


def run(tree: GameTree, iterations: int, seed: int, hooks=(), consumers=(),
        store_tables: bool = True) -> RunRecord:
    """Run the dynamics for all players for ``iterations`` rounds."""
    if iterations < 1:
        raise ValueError("need at least one iteration")
    runner = Runner(tree, seed, store_tables=store_tables, hooks=hooks, consumers=consumers)
    runner.run_until(iterations)
    return runner.record
