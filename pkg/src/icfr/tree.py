"""Extensive-form game trees with imperfect information and perfect recall.

A game is a rooted tree of decision, chance, and terminal nodes.  Decision
nodes of the same player that are indistinguishable to her are grouped into
infosets; every node of an infoset carries the same action list.  Perfect
recall means all nodes of an infoset share the same sequence of the owner's
past (infoset, action) pairs, so each infoset has a unique parent sequence.

Trees are immutable after construction.  Per-player combinatorics (infoset
order, sequence chains, immediately-reachable terminal sets, reach
constraints) are cached in a :class:`PlayerView`, built lazily because the
larger benchmark games only need the raw tree for counting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DECISION, CHANCE, TERMINAL = 0, 1, 2


class GameError(Exception):
    """Base class for game construction and query errors."""


class InvalidGameError(GameError):
    """Raised when a tree fails validation at construction."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("invalid game: " + "; ".join(v.message for v in report.violations[:5]))


@dataclass(frozen=True)
class Violation:
    kind: str          # "structure" | "actions" | "chance" | "recall"
    subject: int       # node or infoset id the violation is anchored to
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, subject: int, message: str) -> None:
        self.violations.append(Violation(kind, subject, message))


@dataclass(frozen=True)
class Sequence:
    """One player's action history entering an infoset, ended by one action.

    ``infoset is None`` encodes the empty sequence (the player has not acted).
    """

    player: int
    infoset: int | None = None
    action: int | None = None

    @property
    def is_empty(self) -> bool:
        return self.infoset is None

    def __repr__(self) -> str:
        if self.is_empty:
            return f"Sequence(p{self.player}, empty)"
        return f"Sequence(p{self.player}, I{self.infoset}, a{self.action})"


@dataclass
class Plan:
    """An action choice for each of one player's infosets.

    ``choices`` is indexed by the player's local infoset index (top-down
    order, see :meth:`GameTree.player_infosets`); ``-1`` marks an infoset not
    assigned yet, which only occurs for partial plans during sampling.
    """

    player: int
    choices: np.ndarray

    @classmethod
    def empty(cls, player: int, n_infosets: int) -> "Plan":
        return cls(player, np.full(n_infosets, -1, dtype=np.int16))

    @classmethod
    def of(cls, player: int, choices) -> "Plan":
        return cls(player, np.asarray(choices, dtype=np.int16))

    @property
    def is_total(self) -> bool:
        return bool((self.choices >= 0).all())

    def key(self) -> tuple[int, ...]:
        return tuple(int(a) for a in self.choices)

    def copy(self) -> "Plan":
        return Plan(self.player, self.choices.copy())


@dataclass(frozen=True)
class PlanProfile:
    """One total plan per non-chance player."""

    plans: tuple[Plan, ...]

    def __post_init__(self):
        for i, p in enumerate(self.plans):
            if p.player != i:
                raise ValueError(f"plan at position {i} belongs to player {p.player}")

    def key(self) -> tuple[tuple[int, ...], ...]:
        return tuple(p.key() for p in self.plans)


class TreeBuilder:
    """Accumulates nodes bottom-up; ``build`` freezes them into a GameTree.

    Children are passed at node creation, so generators construct subtrees
    recursively and return node ids upward.
    """

    def __init__(self, players: int):
        if players < 1:
            raise ValueError("need at least one player")
        self.players = players
        self._kind: list[int] = []
        self._player: list[int] = []
        self._iso_key: list = []      # per decision node
        self._labels: list = []       # per decision/chance node: tuple of edge labels
        self._children: list = []     # per node: tuple of child ids
        self._probs: list = []        # per chance node: tuple of outcome probabilities
        self._payoffs: list = []      # per terminal node: tuple of per-player payoffs

    def _add(self, kind, player=-1, iso_key=None, labels=None, children=(), probs=None, payoffs=None) -> int:
        nid = len(self._kind)
        self._kind.append(kind)
        self._player.append(player)
        self._iso_key.append(iso_key)
        self._labels.append(labels)
        self._children.append(tuple(children))
        self._probs.append(probs)
        self._payoffs.append(payoffs)
        return nid

    def decision(self, player: int, infoset, actions, children) -> int:
        """Add a decision node.  ``infoset`` is any hashable key; nodes of one
        player sharing a key form one infoset."""
        if not 0 <= player < self.players:
            raise ValueError(f"player {player} out of range")
        if len(actions) != len(children) or not actions:
            raise ValueError("actions and children must align and be non-empty")
        return self._add(DECISION, player=player, iso_key=infoset,
                         labels=tuple(str(a) for a in actions), children=children)

    def chance(self, outcomes) -> int:
        """Add a chance node from ``[(label, probability, child), ...]``."""
        if not outcomes:
            raise ValueError("chance node needs at least one outcome")
        labels = tuple(str(o[0]) for o in outcomes)
        probs = tuple(float(o[1]) for o in outcomes)
        children = tuple(o[2] for o in outcomes)
        return self._add(CHANCE, labels=labels, children=children, probs=probs)

    def terminal(self, payoffs) -> int:
        payoffs = tuple(float(v) for v in payoffs)
        if len(payoffs) != self.players:
            raise ValueError(f"expected {self.players} payoffs, got {len(payoffs)}")
        return self._add(TERMINAL, payoffs=payoffs)

    def build(self, root: int, check: bool = True) -> "GameTree":
        tree = GameTree(self, root)
        if check:
            report = validate(tree)
            if not report.ok:
                raise InvalidGameError(report)
        return tree


class GameTree:
    """Immutable extensive-form game.  Construct through :class:`TreeBuilder`."""

    def __init__(self, b: TreeBuilder, root: int):
        n = len(b._kind)
        if not 0 <= root < n:
            raise ValueError("root id out of range")
        self.players = b.players
        self.root = root
        self.num_nodes = n
        self.kind = np.asarray(b._kind, dtype=np.int8)
        self.node_player = np.asarray(b._player, dtype=np.int32)

        # children in CSR form; edge_prob is only meaningful for chance edges
        counts = np.fromiter((len(c) for c in b._children), dtype=np.int64, count=n)
        self.child_off = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.child_off[1:])
        total = int(self.child_off[-1])
        self.child_ids = np.empty(total, dtype=np.int32)
        self.edge_prob = np.zeros(total, dtype=np.float64)
        for nid, kids in enumerate(b._children):
            lo = self.child_off[nid]
            self.child_ids[lo:lo + len(kids)] = kids
            if b._probs[nid] is not None:
                self.edge_prob[lo:lo + len(kids)] = b._probs[nid]
        self._chance_labels = {nid: b._labels[nid] for nid in range(n) if b._kind[nid] == CHANCE}

        self.parent = np.full(n, -1, dtype=np.int32)
        self.parent_slot = np.full(n, -1, dtype=np.int32)
        if total:
            edge_parent = np.repeat(np.arange(n, dtype=np.int32), counts)
            slots = np.arange(total, dtype=np.int64) - self.child_off[edge_parent]
            self.parent[self.child_ids] = edge_parent
            self.parent_slot[self.child_ids] = slots.astype(np.int32)
        self.parent[root] = -1
        self.parent_slot[root] = -1

        # terminal indexing
        term_nodes = np.flatnonzero(self.kind == TERMINAL).astype(np.int32)
        self.term_nodes = term_nodes
        self.num_terminals = len(term_nodes)
        self.term_index = np.full(n, -1, dtype=np.int32)
        self.term_index[term_nodes] = np.arange(self.num_terminals, dtype=np.int32)
        self.payoffs = np.zeros((self.num_terminals, self.players), dtype=np.float64)
        for z, nid in enumerate(term_nodes):
            self.payoffs[z] = b._payoffs[nid]

        # group decision nodes into infosets keyed by (player, key), ids
        # assigned in node-construction order; action-set consistency across
        # an infoset is checked here so per-node labels need not be kept
        iso_of = {}
        self.node_infoset = np.full(n, -1, dtype=np.int32)
        iso_player: list[int] = []
        iso_keys: list = []
        iso_labels: list = []
        self._label_report = ValidationReport()
        for nid in range(n):
            if b._kind[nid] != DECISION:
                continue
            key = (b._player[nid], b._iso_key[nid])
            iso = iso_of.get(key)
            if iso is None:
                iso = len(iso_player)
                iso_of[key] = iso
                iso_player.append(b._player[nid])
                iso_keys.append(b._iso_key[nid])
                iso_labels.append(b._labels[nid])
            elif b._labels[nid] != iso_labels[iso]:
                self._label_report.add(
                    "actions", iso,
                    f"infoset {iso} mixes action sets {iso_labels[iso]} and {b._labels[nid]}")
            self.node_infoset[nid] = iso
        self.num_infosets = len(iso_player)
        self.infoset_player = np.asarray(iso_player, dtype=np.int32) if iso_player else np.zeros(0, np.int32)
        self.infoset_keys = iso_keys
        self.infoset_labels = iso_labels

        # chance reach p_c(z) and, for perfect-recall checks, the owner's
        # (infoset, action) chain entering every infoset
        self.chance_reach = np.zeros(self.num_terminals, dtype=np.float64)
        self._iso_chain: list[tuple[tuple[int, int], ...] | None] = [None] * self.num_infosets
        self._recall_report = ValidationReport()
        self._walk_paths()

        # parent sequence sigma(I) from the chain (unique under perfect recall)
        self.infoset_parent_pair: list[tuple[int, int] | None] = []
        self.infoset_depth = np.zeros(self.num_infosets, dtype=np.int32)
        for iso in range(self.num_infosets):
            chain = self._iso_chain[iso] or ()
            self.infoset_parent_pair.append(chain[-1] if chain else None)
            self.infoset_depth[iso] = len(chain)

        self._views: dict[int, PlayerView] = {}
        self._iso_nodes: list[np.ndarray] | None = None

    # -- construction helpers -------------------------------------------------

    def _walk_paths(self) -> None:
        """One DFS pass: chance reach per terminal, per-infoset owner chains,
        connectivity and duplicate-parent checks."""
        rep = self._recall_report
        seen = np.zeros(self.num_nodes, dtype=bool)
        # stack entries: (node, chance product, per-player chain tuples)
        empty_chains = tuple(() for _ in range(self.players))
        stack = [(self.root, 1.0, empty_chains)]
        while stack:
            nid, pc, chains = stack.pop()
            if seen[nid]:
                rep.add("structure", int(nid), f"node {nid} is reached by more than one path")
                continue
            seen[nid] = True
            kind = self.kind[nid]
            if kind == TERMINAL:
                self.chance_reach[self.term_index[nid]] = pc
                continue
            lo, hi = self.child_off[nid], self.child_off[nid + 1]
            if kind == CHANCE:
                for slot in range(hi - lo):
                    stack.append((int(self.child_ids[lo + slot]), pc * float(self.edge_prob[lo + slot]), chains))
                continue
            player = int(self.node_player[nid])
            iso = int(self.node_infoset[nid])
            chain = chains[player]
            if self._iso_chain[iso] is None:
                self._iso_chain[iso] = chain
            elif self._iso_chain[iso] != chain:
                rep.add("recall", iso,
                        f"infoset {iso} (player {player}) reached with differing "
                        f"own-action sequences {self._iso_chain[iso]} vs {chain}")
            for slot in range(hi - lo):
                ext = list(chains)
                ext[player] = chain + ((iso, slot),)
                stack.append((int(self.child_ids[lo + slot]), pc, tuple(ext)))
        for nid in range(self.num_nodes):
            if not seen[nid]:
                rep.add("structure", nid, f"node {nid} is not reachable from the root")

    # -- basic node queries ---------------------------------------------------

    def node_kind(self, nid: int) -> int:
        return int(self.kind[nid])

    def children(self, nid: int) -> np.ndarray:
        return self.child_ids[self.child_off[nid]:self.child_off[nid + 1]]

    def chance_probs(self, nid: int) -> np.ndarray:
        if self.kind[nid] != CHANCE:
            raise ValueError(f"node {nid} is not a chance node")
        return self.edge_prob[self.child_off[nid]:self.child_off[nid + 1]]

    def chance_labels(self, nid: int) -> tuple[str, ...]:
        return self._chance_labels[nid]

    def terminal_payoffs(self, nid: int) -> np.ndarray:
        z = int(self.term_index[nid])
        if z < 0:
            raise ValueError(f"node {nid} is not terminal")
        return self.payoffs[z]

    # -- infoset structure queries --------------------------------------------

    def infoset_nodes(self, iso: int) -> np.ndarray:
        if self._iso_nodes is None:
            decision = np.flatnonzero(self.kind == DECISION)
            order = decision[np.argsort(self.node_infoset[decision], kind="stable")]
            splits = np.searchsorted(self.node_infoset[order], np.arange(1, self.num_infosets))
            self._iso_nodes = [a.astype(np.int32) for a in np.split(order, splits)]
        return self._iso_nodes[iso]

    def infoset_actions(self, iso: int) -> tuple[str, ...]:
        return self.infoset_labels[iso]

    def num_actions(self, iso: int) -> int:
        return len(self.infoset_labels[iso])

    def parent_sequence(self, iso: int) -> Sequence:
        """sigma(I): the owner's sequence entering infoset ``iso``."""
        player = int(self.infoset_player[iso])
        pair = self.infoset_parent_pair[iso]
        if pair is None:
            return Sequence(player)
        return Sequence(player, pair[0], pair[1])

    def sequence_chain(self, iso: int) -> tuple[tuple[int, int], ...]:
        """All (infoset, action) pairs of the owner's sequence entering ``iso``."""
        chain = self._iso_chain[iso]
        return chain if chain is not None else ()

    def player_infosets(self, player: int) -> np.ndarray:
        """The player's infosets in a fixed top-down order (any linear
        extension of the precedence order; ties broken by construction id)."""
        return self.view(player).order

    def children_infosets(self, iso: int, action: int) -> list[int]:
        """C(I, a): the owner's infosets immediately below action ``action``."""
        view = self.view(int(self.infoset_player[iso]))
        return view.children_of(iso, action)

    def descendant_infosets(self, iso: int) -> list[int]:
        """C*(I): the owner's infosets weakly following ``iso``."""
        view = self.view(int(self.infoset_player[iso]))
        return [int(view.order[j]) for j in view.descendants(view.local[iso])]

    def blocking_sequences(self, iso: int) -> list[Sequence]:
        """The sequences at strict ancestors of ``iso`` whose action leaves its
        path, i.e. the triggers that make ``iso`` unreachable."""
        player = int(self.infoset_player[iso])
        view = self.view(player)
        out = []
        for pidx in view.blocked_pairs(view.local[iso]):
            giso, act = view.pair_decode(pidx)
            out.append(Sequence(player, giso, act))
        return out

    # -- terminal sets ----------------------------------------------------------

    def terminals_from_action(self, iso: int, action: int) -> np.ndarray:
        """Z(I, a) as terminal indices."""
        if not 0 <= action < self.num_actions(iso):
            raise ValueError(f"action {action} not available at infoset {iso}")
        view = self.view(int(self.infoset_player[iso]))
        return view.pair_terminals(view.pair_index(iso, action))

    def terminals_from(self, iso: int) -> np.ndarray:
        """Z(I) as terminal indices."""
        parts = [self.terminals_from_action(iso, a) for a in range(self.num_actions(iso))]
        return np.sort(np.concatenate(parts)) if parts else np.zeros(0, np.int32)

    def terminals_excluding_action(self, iso: int, action: int) -> np.ndarray:
        """Z^c(I, a) = Z(I) minus Z(I, a)."""
        za = set(self.terminals_from_action(iso, action).tolist())
        return np.array([z for z in self.terminals_from(iso).tolist() if z not in za], dtype=np.int32)

    # -- plan predicates ---------------------------------------------------------

    def plan_reaches_infoset(self, plan: Plan, iso: int) -> bool:
        """Membership in Pi_i(I).  For partial plans this is "still possible":
        every *assigned* ancestor must follow the path actions."""
        view = self.view(plan.player)
        for giso, act in self.sequence_chain(iso):
            chosen = plan.choices[view.local[giso]]
            if chosen >= 0 and chosen != act:
                return False
        return True

    def plan_in_sequence(self, plan: Plan, seq: Sequence) -> bool:
        """Membership in Pi_i(sigma)."""
        if seq.player != plan.player:
            raise ValueError("sequence and plan belong to different players")
        if seq.is_empty:
            return True
        if not self.plan_reaches_infoset(plan, seq.infoset):
            return False
        view = self.view(plan.player)
        return int(plan.choices[view.local[seq.infoset]]) == seq.action

    def plan_reaches_terminal(self, plan: Plan, z: int) -> bool:
        """Membership in Pi_i(z)."""
        view = self.view(plan.player)
        for giso, act in view.terminal_chain(z):
            if int(plan.choices[view.local[giso]]) != act:
                return False
        return True

    def reach_from(self, plan: Plan, iso: int, z: int) -> int:
        """rho^{plan}_{I -> z}: 1 iff z in Z(I) and the plan plays every one of
        the owner's actions on the path from I to z."""
        view = self.view(plan.player)
        chain = view.terminal_chain(z)
        below = False
        for giso, act in chain:
            if giso == iso:
                below = True
            if below and int(plan.choices[view.local[giso]]) != act:
                return 0
        return 1 if below else 0

    def opponents_reach(self, profile: PlanProfile, player: int, z: int) -> int:
        """1 iff the other players' plans allow terminal ``z``."""
        for j, plan in enumerate(profile.plans):
            if j != player and not self.plan_reaches_terminal(plan, z):
                return 0
        return 1

    def profile_reaches(self, profile: PlanProfile, z: int) -> int:
        return int(all(self.plan_reaches_terminal(p, z) for p in profile.plans))

    def joint_reach_from(self, plan: Plan, profile_minus, iso: int, z: int) -> int:
        """rho for (plan, opponents): own reach from I times opponents' gate."""
        own = self.reach_from(plan, iso, z)
        if not own:
            return 0
        for other in profile_minus:
            if not self.plan_reaches_terminal(other, z):
                return 0
        return 1

    # -- player view ------------------------------------------------------------

    def view(self, player: int) -> "PlayerView":
        if player not in self._views:
            if not 0 <= player < self.players:
                raise ValueError(f"player {player} out of range")
            self._views[player] = PlayerView(self, player)
        return self._views[player]


class PlayerView:
    """Per-player combinatorial caches over a frozen tree.

    Infosets are reindexed locally in top-down order, and each (infoset,
    action) pair receives a dense "pair index"; plans are arrays over local
    infosets.  Terminal-side caches (reach constraints, immediately-reachable
    terminal lists) are flattened CSR arrays for vectorised evaluation.
    """

    def __init__(self, tree: GameTree, player: int):
        self.tree = tree
        self.player = player
        mine = np.flatnonzero(tree.infoset_player == player).astype(np.int32)
        depth = tree.infoset_depth[mine]
        self.order = mine[np.lexsort((mine, depth))]
        self.n = len(self.order)
        self.local = {int(g): i for i, g in enumerate(self.order)}
        self.n_actions = np.array([tree.num_actions(int(g)) for g in self.order], dtype=np.int32)
        self.pair_off = np.zeros(self.n + 1, dtype=np.int32)
        np.cumsum(self.n_actions, out=self.pair_off[1:])
        self.n_pairs = int(self.pair_off[-1])

        # chains in pair-index space, root-most first
        self.chain: list[np.ndarray] = []
        self.chain_actions: list[tuple[tuple[int, int], ...]] = []
        for g in self.order:
            chain = tree.sequence_chain(int(g))
            self.chain.append(np.asarray([self.pair_index(giso, act) for giso, act in chain],
                                         dtype=np.int32))
            self.chain_actions.append(chain)

        # children infosets per pair: local iso lists
        kids: list[list[int]] = [[] for _ in range(self.n_pairs)]
        for li in range(self.n):
            ch = self.chain[li]
            if len(ch):
                kids[int(ch[-1])].append(li)
        self._children = [np.asarray(k, dtype=np.int32) for k in kids]

        self._blocked: list[np.ndarray] | None = None
        self._lazy_done = False

    # pair indexing ------------------------------------------------------------

    def pair_index(self, iso: int, action: int) -> int:
        """Dense index of the (global infoset, action) pair."""
        return int(self.pair_off[self.local[iso]] + action)

    def pair_decode(self, pidx: int) -> tuple[int, int]:
        li = int(np.searchsorted(self.pair_off, pidx, side="right")) - 1
        return int(self.order[li]), int(pidx - self.pair_off[li])

    def pair_local_infoset(self, pidx: int) -> int:
        return int(np.searchsorted(self.pair_off, pidx, side="right")) - 1

    def children_of(self, iso: int, action: int) -> list[int]:
        return [int(self.order[li]) for li in self._children[self.pair_index(iso, action)]]

    def children_local(self, pidx: int) -> np.ndarray:
        return self._children[pidx]

    def descendants(self, li: int) -> list[int]:
        """Local indices of infosets weakly following local infoset ``li``."""
        out, frontier = [li], [li]
        while frontier:
            nxt = []
            for cur in frontier:
                for p in range(self.pair_off[cur], self.pair_off[cur + 1]):
                    nxt.extend(int(c) for c in self._children[p])
            out.extend(nxt)
            frontier = nxt
        return sorted(set(out))

    def blocked_pairs(self, li: int) -> np.ndarray:
        """Pair indices of the blocking sequences of local infoset ``li``:
        off-path actions at strict ancestors."""
        if self._blocked is None:
            self._blocked = []
            for j in range(self.n):
                acc = []
                for giso, act in self.chain_actions[j]:
                    lj = self.local[int(giso)]
                    for b in range(self.n_actions[lj]):
                        if b != act:
                            acc.append(self.pair_off[lj] + b)
                self._blocked.append(np.asarray(acc, dtype=np.int32))
        return self._blocked[li]

    # terminal caches ------------------------------------------------------------

    def _build_terminal_caches(self) -> None:
        if self._lazy_done:
            return
        tree = self.tree
        nz = tree.num_terminals
        req_lists: list[list[int]] = [[] for _ in range(nz)]
        for z in range(nz):
            nid = int(tree.term_nodes[z])
            pairs = []
            while True:
                par = int(tree.parent[nid])
                if par < 0:
                    break
                if tree.kind[par] == DECISION and tree.node_player[par] == self.player:
                    pairs.append(self.pair_index(int(tree.node_infoset[par]), int(tree.parent_slot[nid])))
                nid = par
            req_lists[z] = pairs[::-1]

        counts = np.fromiter((len(r) for r in req_lists), dtype=np.int64, count=nz)
        self.req_off = np.zeros(nz + 1, dtype=np.int64)
        np.cumsum(counts, out=self.req_off[1:])
        self.req_pair = np.empty(int(self.req_off[-1]), dtype=np.int32)
        for z, r in enumerate(req_lists):
            self.req_pair[self.req_off[z]:self.req_off[z + 1]] = r
        self._req_lists = req_lists

        # Z_imm(I, a): terminals whose last own pair is (I, a); base terminals
        # never cross one of this player's decisions
        last = np.array([r[-1] if r else -1 for r in req_lists], dtype=np.int64)
        self.base_terms = np.flatnonzero(last < 0).astype(np.int32)
        zimm: list[list[int]] = [[] for _ in range(self.n_pairs)]
        for z, p in enumerate(last):
            if p >= 0:
                zimm[int(p)].append(z)
        zo = np.zeros(self.n_pairs + 1, dtype=np.int64)
        np.cumsum(np.fromiter((len(v) for v in zimm), dtype=np.int64, count=self.n_pairs), out=zo[1:])
        self.zimm_off = zo
        self.zimm_z = np.empty(int(zo[-1]), dtype=np.int32)
        for p, v in enumerate(zimm):
            self.zimm_z[zo[p]:zo[p + 1]] = v

        # inverted index pair -> all terminals whose constraints contain it (Z(I,a))
        inv: list[list[int]] = [[] for _ in range(self.n_pairs)]
        for z, r in enumerate(req_lists):
            for p in r:
                inv[p].append(z)
        self._pair_terms = [np.asarray(v, dtype=np.int32) for v in inv]
        self._lazy_done = True

    def pair_terminals(self, pidx: int) -> np.ndarray:
        """Z(I, a) for the pair with index ``pidx``."""
        self._build_terminal_caches()
        return self._pair_terms[pidx]

    def terminal_chain(self, z: int) -> list[tuple[int, int]]:
        """The owner's (infoset, action) pairs on the path to terminal ``z``."""
        self._build_terminal_caches()
        return [self.pair_decode(p) for p in self._req_lists[z]]

    def immediate_terminals(self, pidx: int) -> np.ndarray:
        """Z(I,a) minus terminals below further own infosets."""
        self._build_terminal_caches()
        return self.zimm_z[self.zimm_off[pidx]:self.zimm_off[pidx + 1]]

    # vectorised evaluation -------------------------------------------------------

    def selected_pairs(self, choices: np.ndarray) -> np.ndarray:
        """Boolean mask over pairs selected by a total plan."""
        sel = np.zeros(self.n_pairs, dtype=bool)
        sel[self.pair_off[:-1] + choices] = True
        return sel

    def reach_vector(self, choices: np.ndarray) -> np.ndarray:
        """For every terminal z: 1 iff the plan plays all its own actions on
        the path to z (the Pi_i(z) membership indicator, vectorised)."""
        self._build_terminal_caches()
        sel = self.selected_pairs(choices)
        ok = sel[self.req_pair].astype(np.int64)
        cum = np.concatenate(([0], np.cumsum(ok)))
        got = cum[self.req_off[1:]] - cum[self.req_off[:-1]]
        need = self.req_off[1:] - self.req_off[:-1]
        return got == need

    def segment_sums(self, values: np.ndarray) -> np.ndarray:
        """Sum ``values`` (indexed by terminal) over Z_imm of every pair."""
        self._build_terminal_caches()
        v = values[self.zimm_z]
        cum = np.concatenate(([0.0], np.cumsum(v)))
        return cum[self.zimm_off[1:]] - cum[self.zimm_off[:-1]]


def validate(tree: GameTree) -> ValidationReport:
    """Check every structural invariant; an empty report means well-formed.

    Covers: tree structure (orphans, duplicated parents), identical action
    lists within each infoset, chance outcome probabilities (positive, sum to
    one), and perfect recall (identical owner action sequence for every node
    of an infoset).
    """
    report = ValidationReport()
    report.violations.extend(tree._label_report.violations)
    report.violations.extend(tree._recall_report.violations)

    for nid in np.flatnonzero(tree.kind == CHANCE):
        probs = tree.chance_probs(int(nid))
        if (probs <= 0).any():
            report.add("chance", int(nid), f"chance node {nid} has a non-positive outcome probability")
        if abs(math.fsum(probs.tolist()) - 1.0) > 1e-12:
            report.add("chance", int(nid),
                       f"chance node {nid} probabilities sum to {math.fsum(probs.tolist())!r}")

    return report


def structurally_equal(a: GameTree, b: GameTree) -> bool:
    """Recursive comparison of two trees: same shape, players, labels, chance
    probabilities, payoffs, and infoset partition (names aside)."""
    if a.players != b.players:
        return False
    pairing: dict[tuple[int, int], tuple[int, int]] = {}

    def rec(x: int, y: int) -> bool:
        ka, kb = a.node_kind(x), b.node_kind(y)
        if ka != kb:
            return False
        if ka == TERMINAL:
            return bool(np.array_equal(a.terminal_payoffs(x), b.terminal_payoffs(y)))
        ca, cb = a.children(x), b.children(y)
        if len(ca) != len(cb):
            return False
        if ka == CHANCE:
            if not np.array_equal(a.chance_probs(x), b.chance_probs(y)):
                return False
            if a.chance_labels(x) != b.chance_labels(y):
                return False
        else:
            if a.node_player[x] != b.node_player[y]:
                return False
            ia, ib = int(a.node_infoset[x]), int(b.node_infoset[y])
            if a.infoset_actions(ia) != b.infoset_actions(ib):
                return False
            key = (int(a.node_player[x]), ia)
            if key in pairing:
                if pairing[key] != (int(b.node_player[y]), ib):
                    return False
            else:
                if any(v == (int(b.node_player[y]), ib) for v in pairing.values()):
                    return False
                pairing[key] = (int(b.node_player[y]), ib)
        return all(rec(int(cx), int(cy)) for cx, cy in zip(ca, cb))

    return rec(a.root, b.root)
