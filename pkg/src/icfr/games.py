"""Benchmark game generators.

All generators are deterministic: chance nodes enumerate deals and shuffles
exhaustively, no RNG is involved, and regenerating a spec yields an identical
tree.  Rule conventions that the sources leave open are pinned here and
documented next to each generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

from .tree import GameTree, TreeBuilder

FAMILIES = ("kuhn", "goofspiel", "leduc", "battleship", "figure1", "figure3")


@dataclass(frozen=True)
class GameSpec:
    """Parameters selecting one benchmark instance."""

    family: str
    players: int = 2
    ranks: int = 3
    grid: tuple[int, int] = (2, 2)
    rounds: int = 3
    ships: tuple[tuple[int, int], ...] = ((2, 1),)   # (length, value)
    loss_multiplier: float = 2.0
    limited_info: bool = True
    sorted_deck: bool = False

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "kuhn":
            if not 2 <= self.players <= 4:
                raise ValueError("kuhn supports 2..4 players")
            if self.ranks < self.players:
                raise ValueError("kuhn requires ranks >= players")
        elif self.family == "goofspiel":
            if not 2 <= self.players <= 3:
                raise ValueError("goofspiel supports 2..3 players")
            if not 1 <= self.ranks <= 4:
                raise ValueError("goofspiel supports 1..4 ranks")
        elif self.family == "leduc":
            if not 2 <= self.players <= 3:
                raise ValueError("leduc supports 2..3 players")
            if self.ranks < 1:
                raise ValueError("leduc requires at least one rank")
            if 3 * self.ranks < self.players + 1:
                raise ValueError("leduc deck (3 suits x ranks) too small for players + board")
        elif self.family == "battleship":
            rows, cols = self.grid
            if len(self.ships) != 1:
                raise ValueError("battleship supports exactly one ship")
            length, _ = self.ships[0]
            if length > max(rows, cols):
                raise ValueError("ship does not fit on the grid")
            if rows * cols > 9:
                raise ValueError("battleship grids larger than 9 cells are not supported")
            if self.rounds < 1:
                raise ValueError("battleship needs at least one round")


def generate(spec: GameSpec) -> GameTree:
    """Build the validated game tree for ``spec``."""
    spec.validate()
    if spec.family == "kuhn":
        return kuhn(spec.players, spec.ranks)
    if spec.family == "goofspiel":
        return goofspiel(spec.players, spec.ranks,
                         limited_info=spec.limited_info, sorted_deck=spec.sorted_deck)
    if spec.family == "leduc":
        return leduc(spec.players, spec.ranks)
    if spec.family == "battleship":
        return battleship(grid=spec.grid, rounds=spec.rounds,
                          ship=spec.ships[0], loss_multiplier=spec.loss_multiplier)
    if spec.family == "figure1":
        return figure_one()
    return figure_three()


def figure_games() -> dict[str, GameTree]:
    return {"figure1": figure_one(), "figure3": figure_three()}


# ---------------------------------------------------------------------------
# Kuhn poker
# ---------------------------------------------------------------------------

def kuhn(players: int = 3, ranks: int = 3) -> GameTree:
    """Kuhn poker.  Every player antes one chip and receives one private card
    out of ``ranks``.  Players in order may check or bet one chip while no bet
    is open; once somebody bets, the remaining players respond fold/call in
    cyclic order after the bettor.  Highest card among the non-folded wins
    the pot.
    """
    GameSpec("kuhn", players=players, ranks=ranks).validate()
    b = TreeBuilder(players)
    deals = list(permutations(range(1, ranks + 1), players))
    outcomes = []
    for cards in deals:
        child = _kuhn_betting(b, players, cards, "", None)
        outcomes.append(("d" + "_".join(map(str, cards)), 1.0 / len(deals), child))
    return b.build(b.chance(outcomes))


def _kuhn_betting(b: TreeBuilder, p: int, cards, hist: str, bettor: int | None) -> int:
    if bettor is None:
        turn = len(hist)
        if turn == p:
            return b.terminal(_kuhn_payoffs(p, cards, hist, bettor))
        key = f"{cards[turn]}|{hist}"
        kids = [_kuhn_betting(b, p, cards, hist + "k", None),
                _kuhn_betting(b, p, cards, hist + "b", turn)]
        return b.decision(turn, key, ("check", "bet"), kids)
    responded = len(hist) - bettor - 1
    if responded == p - 1:
        return b.terminal(_kuhn_payoffs(p, cards, hist, bettor))
    turn = (bettor + 1 + responded) % p
    key = f"{cards[turn]}|{hist}"
    kids = [_kuhn_betting(b, p, cards, hist + "f", bettor),
            _kuhn_betting(b, p, cards, hist + "c", bettor)]
    return b.decision(turn, key, ("fold", "call"), kids)


def _kuhn_payoffs(p: int, cards, hist: str, bettor: int | None):
    contrib = [1] * p
    active = list(range(p))
    if bettor is not None:
        contrib[bettor] += 1
        for k, a in enumerate(hist[bettor + 1:]):
            who = (bettor + 1 + k) % p
            if a == "f":
                active.remove(who)
            else:
                contrib[who] += 1
    pot = sum(contrib)
    winner = max(active, key=lambda i: cards[i])
    return [pot * (i == winner) - contrib[i] for i in range(p)]


# ---------------------------------------------------------------------------
# Goofspiel
# ---------------------------------------------------------------------------

def goofspiel(players: int = 2, ranks: int = 3,
              limited_info: bool = True, sorted_deck: bool = False) -> GameTree:
    """Goofspiel.  Each player holds cards 1..ranks; a prize deck of the same
    cards is either shuffled (chance reveals one prize per turn) or, with
    ``sorted_deck``, played in descending order with no chance at all.  Each
    turn all players bid one remaining card simultaneously; the strictly
    highest bid wins the prize, ties among the top discard it.  Scores are
    the summed values of prizes won.

    With ``limited_info`` players never see the opponents' cards: after each
    turn they observe only who took the prize, or the set of players tied at
    the top when it was discarded.  Without it all bids become public.
    """
    GameSpec("goofspiel", players=players, ranks=ranks).validate()
    b = TreeBuilder(players)
    hands = tuple(tuple(range(1, ranks + 1)) for _ in range(players))
    obs = tuple(() for _ in range(players))
    scores = (0,) * players
    prizes = tuple(range(1, ranks + 1))
    root = _goof_reveal(b, players, limited_info, sorted_deck, hands, obs, scores, prizes)
    return b.build(root)


def _goof_reveal(b, p, limited, sorted_deck, hands, obs, scores, prizes_left) -> int:
    if not prizes_left:
        return b.terminal(scores)
    if sorted_deck:
        prize = max(prizes_left)
        return _goof_bid(b, p, limited, sorted_deck, hands, obs, scores, prizes_left, prize, ())
    outcomes = []
    for prize in sorted(prizes_left):
        child = _goof_bid(b, p, limited, sorted_deck, hands, obs, scores, prizes_left, prize, ())
        outcomes.append((f"p{prize}", 1.0 / len(prizes_left), child))
    return b.chance(outcomes)


def _goof_bid(b, p, limited, sorted_deck, hands, obs, scores, prizes_left, prize, bids) -> int:
    i = len(bids)
    if i == p:
        top = max(bids)
        winners = [j for j in range(p) if bids[j] == top]
        token = f"w{winners[0]}" if len(winners) == 1 else "t" + "".join(map(str, winners))
        new_scores = tuple(scores[j] + (prize if [j] == winners else 0) for j in range(p))
        new_hands = tuple(tuple(c for c in hands[j] if c != bids[j]) for j in range(p))
        if limited:
            new_obs = tuple(obs[j] + ((prize, bids[j], token),) for j in range(p))
        else:
            new_obs = tuple(obs[j] + ((prize, bids),) for j in range(p))
        left = tuple(c for c in prizes_left if c != prize)
        return _goof_reveal(b, p, limited, sorted_deck, new_hands, new_obs, new_scores, left)
    key = (obs[i], prize)
    actions = sorted(hands[i])
    kids = [_goof_bid(b, p, limited, sorted_deck, hands, obs, scores, prizes_left, prize, bids + (c,))
            for c in actions]
    return b.decision(i, key, [str(c) for c in actions], kids)


# ---------------------------------------------------------------------------
# Leduc hold'em
# ---------------------------------------------------------------------------

def leduc(players: int = 3, ranks: int = 3) -> GameTree:
    """Leduc hold'em.  Deck of 3 suits x ``ranks`` cards; every player antes
    one chip and receives one private card; one board card is revealed
    between the two betting rounds.  Each round allows at most two raises
    (the opening bet counts as the first), of fixed size 2 in round one and 4
    in round two; betting order is player-index order among the non-folded.
    At showdown a pair with the board card beats any high card; otherwise the
    highest rank wins and exact ties split the pot.
    """
    GameSpec("leduc", players=players, ranks=ranks).validate()
    deck = [(r, s) for r in range(1, ranks + 1) for s in range(3)]
    b = TreeBuilder(players)
    deals = list(permutations(range(len(deck)), players))
    outcomes = []
    for deal in deals:
        child = _leduc_round(b, players, deck, deal, board=None,
                             round_no=1, active=tuple(range(players)),
                             paid=(1,) * players, hist="")
        outcomes.append(("d" + "_".join(map(str, deal)), 1.0 / len(deals), child))
    return b.build(b.chance(outcomes))


def _leduc_round(b, p, deck, deal, board, round_no, active, paid, hist) -> int:
    queue = list(active)
    return _leduc_act(b, p, deck, deal, board, round_no, list(active), list(paid), hist,
                      queue, price=0, raises=0, this_round={i: 0 for i in active})


def _leduc_act(b, p, deck, deal, board, round_no, active, paid, hist,
               queue, price, raises, this_round) -> int:
    if not queue:
        return _leduc_round_over(b, p, deck, deal, board, round_no, active, paid, hist)
    turn = queue[0]
    key = (deal[turn], None if board is None else board, hist)
    amount = 2 if round_no == 1 else 4
    labels, kids = [], []

    if price == this_round[turn]:
        labels.append("check")
        kids.append(_leduc_child(b, p, deck, deal, board, round_no, active, paid, hist + "k",
                                 queue[1:], price, raises, this_round, turn, pay_to=price))
    else:
        labels.append("fold")
        rem = [i for i in active if i != turn]
        if len(rem) == 1:
            kids.append(b.terminal(_leduc_fold_payoffs(p, paid, rem[0])))
        else:
            kids.append(_leduc_child(b, p, deck, deal, board, round_no, rem, paid, hist + "f",
                                     queue[1:], price, raises, this_round, turn, pay_to=None))
        labels.append("call")
        kids.append(_leduc_child(b, p, deck, deal, board, round_no, active, paid, hist + "c",
                                 queue[1:], price, raises, this_round, turn, pay_to=price))
    if raises < 2:
        labels.append("raise")
        new_price = price + amount
        responders = [i for k in range(1, p) for i in [(turn + k) % p] if i in active]
        kids.append(_leduc_child(b, p, deck, deal, board, round_no, active, paid, hist + "r",
                                 responders, new_price, raises + 1, this_round, turn, pay_to=new_price))
    return b.decision(turn, key, labels, kids)


def _leduc_child(b, p, deck, deal, board, round_no, active, paid, hist,
                 queue, price, raises, this_round, actor, pay_to) -> int:
    paid = list(paid)
    this_round = dict(this_round)
    if pay_to is not None:
        paid[actor] += pay_to - this_round[actor]
        this_round[actor] = pay_to
    return _leduc_act(b, p, deck, deal, board, round_no, list(active), paid, hist,
                      list(queue), price, raises, this_round)


def _leduc_round_over(b, p, deck, deal, board, round_no, active, paid, hist) -> int:
    if round_no == 2:
        return b.terminal(_leduc_showdown(p, deck, deal, board, active, paid))
    used = set(deal)
    remaining = [c for c in range(len(deck)) if c not in used]
    outcomes = []
    for c in remaining:
        child = _leduc_round(b, p, deck, deal, board=c, round_no=2,
                             active=tuple(active), paid=tuple(paid), hist=hist + "/")
        outcomes.append((f"b{c}", 1.0 / len(remaining), child))
    return b.chance(outcomes)


def _leduc_fold_payoffs(p, paid, winner):
    pot = sum(paid)
    return [pot * (i == winner) - paid[i] for i in range(p)]


def _leduc_showdown(p, deck, deal, board, active, paid):
    board_rank = deck[board][0]

    def strength(i):
        rank = deck[deal[i]][0]
        return (1 if rank == board_rank else 0, rank)

    best = max(strength(i) for i in active)
    winners = [i for i in active if strength(i) == best]
    pot = sum(paid)
    share = pot / len(winners)
    return [share * (i in winners) - paid[i] for i in range(p)]


# ---------------------------------------------------------------------------
# Battleship
# ---------------------------------------------------------------------------

def battleship(grid: tuple[int, int] = (2, 2), rounds: int = 3,
               ship: tuple[int, int] = (2, 1), loss_multiplier: float = 2.0) -> GameTree:
    """Battleship.  Both players secretly place one ``ship`` (length, value)
    on their own grid, then alternate shots starting with player 1, at most
    ``rounds`` shots each and never repeating one of their own targets.
    Shots and their hit/miss outcomes are public.  The game ends as soon as a
    ship has all its cells hit: the shooter scores the ship value, the owner
    loses value times ``loss_multiplier``.  If nobody sinks, both score zero.
    """
    GameSpec("battleship", grid=grid, rounds=rounds, ships=(ship,),
             loss_multiplier=loss_multiplier).validate()
    rows, cols = grid
    length, value = ship
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    placements = []
    for r in range(rows):
        for c in range(cols - length + 1):
            placements.append(tuple((r, c + k) for k in range(length)))
    for r in range(rows - length + 1):
        for c in range(cols):
            placements.append(tuple((r + k, c) for k in range(length)))

    b = TreeBuilder(2)

    def place_label(pl):
        return "-".join(f"{r}{c}" for r, c in pl)

    def shot_phase(placed, shots, turn) -> int:
        # shots: tuple of (shooter, cell, hit) in order; turn: next shooter
        mine = [s for s in shots if s[0] == turn]
        if len(mine) == rounds:
            other = 1 - turn
            if len([s for s in shots if s[0] == other]) == rounds:
                return b.terminal((0.0, 0.0))
            return shot_phase(placed, shots, other)
        tried = {s[1] for s in mine}
        options = [c for c in cells if c not in tried]
        key = (placements.index(placed[turn]), shots)
        labels, kids = [], []
        for cell in options:
            hit = cell in placed[1 - turn]
            new_shots = shots + ((turn, cell, hit),)
            hit_cells = {s[1] for s in new_shots if s[0] == turn and s[2]}
            if hit and all(c in hit_cells for c in placed[1 - turn]):
                pay = [0.0, 0.0]
                pay[turn] = float(value)
                pay[1 - turn] = -float(value) * loss_multiplier
                kids.append(b.terminal(pay))
            else:
                kids.append(shot_phase(placed, new_shots, 1 - turn))
            labels.append(f"{cell[0]}{cell[1]}")
        return b.decision(turn, key, labels, kids)

    def place_second(p1_placement) -> int:
        kids = [shot_phase((p1_placement, pl), (), 0) for pl in placements]
        return b.decision(1, "place", [place_label(pl) for pl in placements], kids)

    root = b.decision(0, "place", [place_label(pl) for pl in placements],
                      [place_second(pl) for pl in placements])
    return b.build(root)


# ---------------------------------------------------------------------------
# Figure games and one-shot matrix games
# ---------------------------------------------------------------------------

def figure_one(payoffs=None) -> GameTree:
    """Two-player tree with first-player infosets A, B, C, D (actions a/b,
    c/d, e/f, g/h) and two singleton second-player infosets in between; D
    spans two nodes.  The drawing leaves payoffs open, so they default to
    zero; pass eight per-player payoff pairs (leaves left to right) to
    override."""
    if payoffs is None:
        payoffs = [(0.0, 0.0)] * 8
    if len(payoffs) != 8:
        raise ValueError("figure_one takes eight payoff pairs")
    b = TreeBuilder(2)
    z = [b.terminal(v) for v in payoffs]
    nB = b.decision(0, "B", ("c", "d"), [z[0], z[1]])
    nC = b.decision(0, "C", ("e", "f"), [z[2], z[3]])
    nD1 = b.decision(0, "D", ("g", "h"), [z[4], z[5]])
    nD2 = b.decision(0, "D", ("g", "h"), [z[6], z[7]])
    nX = b.decision(1, "X", ("l", "r"), [nB, nC])
    nY = b.decision(1, "Y", ("l", "r"), [nD1, nD2])
    nA = b.decision(0, "A", ("a", "b"), [nX, nY])
    return b.build(nA)


def figure_three(payoffs=(5.0, 1.0, 3.0)) -> GameTree:
    """Single-player tree with root infoset I (actions a/b) and infoset J
    (actions c/d) under a.  Payoffs are (leaf under b, leaf under (a,c),
    leaf under (a,d)); the default values make the worked examples in the
    tests non-trivial."""
    if len(payoffs) != 3:
        raise ValueError("figure_three takes three payoffs")
    b = TreeBuilder(1)
    zb = b.terminal((payoffs[0],))
    zc = b.terminal((payoffs[1],))
    zd = b.terminal((payoffs[2],))
    nJ = b.decision(0, "J", ("c", "d"), [zc, zd])
    nI = b.decision(0, "I", ("a", "b"), [nJ, zb])
    return b.build(nI)


def bimatrix(a, b_matrix) -> GameTree:
    """One-shot simultaneous game from two payoff matrices (row player 0)."""
    import numpy as np

    A = np.asarray(a, dtype=float)
    B = np.asarray(b_matrix, dtype=float)
    if A.shape != B.shape or A.ndim != 2:
        raise ValueError("payoff matrices must share one 2-d shape")
    nr, nc = A.shape
    b = TreeBuilder(2)
    row_labels = [f"r{i}" for i in range(nr)]
    col_labels = [f"c{j}" for j in range(nc)]
    cols = []
    for i in range(nr):
        kids = [b.terminal((A[i, j], B[i, j])) for j in range(nc)]
        cols.append(b.decision(1, "col", col_labels, kids))
    return b.build(b.decision(0, "row", row_labels, cols))
