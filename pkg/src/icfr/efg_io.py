"""Line-based textual game format.

Header ``players <n>``, then one ``node`` line per node in preorder, then one
``edge <parent> <label> <child>`` line per edge.  Node payloads:

    node <id> chance {<label>:<prob>,...}
    node <id> player <p> infoset <name> actions {<label>,...}
    node <id> terminal payoffs {<v1>,...}

Floats are serialised with ``repr`` so round-trips are bit-exact.  The parser
rejects duplicate ids, dangling edges, duplicated or missing action edges,
and malformed lines, always reporting the offending line number.
"""

from __future__ import annotations

import re

from .tree import CHANCE, DECISION, TERMINAL, GameTree, TreeBuilder

_LABEL = re.compile(r"^[A-Za-z0-9_.|+-]+$")


class FormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


def _check_label(label: str) -> str:
    if not _LABEL.match(label):
        raise ValueError(f"label {label!r} contains characters the format reserves")
    return label


def serialize_game(tree: GameTree) -> str:
    lines = [f"players {tree.players}"]
    order = []
    stack = [tree.root]
    while stack:
        nid = stack.pop()
        order.append(nid)
        stack.extend(reversed([int(c) for c in tree.children(nid)]))

    edges = []
    for nid in order:
        kind = tree.node_kind(nid)
        if kind == TERMINAL:
            payoffs = ",".join(repr(float(v)) for v in tree.terminal_payoffs(nid))
            lines.append(f"node {nid} terminal payoffs {{{payoffs}}}")
            continue
        kids = tree.children(nid)
        if kind == CHANCE:
            labels = [_check_label(l) for l in tree.chance_labels(nid)]
            probs = tree.chance_probs(nid)
            body = ",".join(f"{l}:{repr(float(p))}" for l, p in zip(labels, probs))
            lines.append(f"node {nid} chance {{{body}}}")
        else:
            iso = int(tree.node_infoset[nid])
            labels = [_check_label(l) for l in tree.infoset_actions(iso)]
            lines.append(f"node {nid} player {int(tree.node_player[nid])} "
                         f"infoset i{iso} actions {{{','.join(labels)}}}")
        for label, child in zip(labels, kids):
            edges.append(f"edge {nid} {label} {int(child)}")
    lines.extend(edges)
    return "\n".join(lines) + "\n"


def export_game(tree: GameTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_game(tree))


def _braced(line_no: int, text: str) -> str:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise FormatError(line_no, f"expected a braced list, got {text!r}")
    return text[1:-1]


def parse_game(text: str, check: bool = True) -> GameTree:
    players = None
    nodes: dict[int, tuple] = {}   # id -> (kind, payload), in file order
    node_order: list[int] = []
    edges: list[tuple[int, int, str, int]] = []   # line, parent, label, child

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 2)
        if parts[0] == "players":
            if players is not None:
                raise FormatError(line_no, "duplicate players header")
            try:
                players = int(parts[1])
            except (IndexError, ValueError):
                raise FormatError(line_no, "expected `players <n>`")
        elif parts[0] == "node":
            if players is None:
                raise FormatError(line_no, "players header must come first")
            try:
                nid = int(parts[1])
            except (IndexError, ValueError):
                raise FormatError(line_no, "expected `node <id> ...`")
            if nid in nodes:
                raise FormatError(line_no, f"duplicate node id {nid}")
            rest = parts[2] if len(parts) > 2 else ""
            if rest.startswith("chance"):
                body = _braced(line_no, rest[len("chance"):])
                outcomes = []
                for item in body.split(","):
                    if ":" not in item:
                        raise FormatError(line_no, f"malformed chance outcome {item!r}")
                    label, prob = item.split(":", 1)
                    try:
                        outcomes.append((label, float(prob)))
                    except ValueError:
                        raise FormatError(line_no, f"bad probability {prob!r}")
                nodes[nid] = (CHANCE, outcomes)
            elif rest.startswith("player"):
                m = re.match(r"player\s+(\d+)\s+infoset\s+(\S+)\s+actions\s+(\{.*\})$", rest)
                if not m:
                    raise FormatError(line_no, "expected `player <p> infoset <name> actions {...}`")
                p = int(m.group(1))
                if not 0 <= p < players:
                    raise FormatError(line_no, f"player {p} out of range")
                labels = _braced(line_no, m.group(3)).split(",")
                nodes[nid] = (DECISION, (p, m.group(2), labels))
            elif rest.startswith("terminal"):
                m = re.match(r"terminal\s+payoffs\s+(\{.*\})$", rest)
                if not m:
                    raise FormatError(line_no, "expected `terminal payoffs {...}`")
                try:
                    payoffs = [float(v) for v in _braced(line_no, m.group(1)).split(",")]
                except ValueError:
                    raise FormatError(line_no, "bad payoff value")
                if len(payoffs) != players:
                    raise FormatError(line_no, f"expected {players} payoffs")
                nodes[nid] = (TERMINAL, payoffs)
            else:
                raise FormatError(line_no, f"unknown node kind in {rest!r}")
            node_order.append(nid)
        elif parts[0] == "edge":
            bits = line.split()
            if len(bits) != 4:
                raise FormatError(line_no, "expected `edge <parent> <label> <child>`")
            try:
                edges.append((line_no, int(bits[1]), bits[2], int(bits[3])))
            except ValueError:
                raise FormatError(line_no, "edge endpoints must be integers")
        else:
            raise FormatError(line_no, f"unknown directive {parts[0]!r}")

    if players is None:
        raise FormatError(0, "missing players header")
    if not node_order:
        raise FormatError(0, "no nodes")

    children: dict[int, dict[str, int]] = {nid: {} for nid in nodes}
    referenced = set()
    for line_no, parent, label, child in edges:
        if parent not in nodes:
            raise FormatError(line_no, f"edge from unknown node {parent}")
        if child not in nodes:
            raise FormatError(line_no, f"edge to unknown node {child}")
        if label in children[parent]:
            raise FormatError(line_no, f"duplicate edge label {label!r} at node {parent}")
        if child in referenced:
            raise FormatError(line_no, f"node {child} has more than one parent")
        children[parent][label] = child
        referenced.add(child)

    builder = TreeBuilder(players)
    built: dict[int, int] = {}

    def build(nid: int) -> int:
        kind, payload = nodes[nid]
        if kind == TERMINAL:
            if children[nid]:
                raise FormatError(0, f"terminal node {nid} has outgoing edges")
            built[nid] = builder.terminal(payload)
            return built[nid]
        if kind == CHANCE:
            outcomes = []
            for label, prob in payload:
                if label not in children[nid]:
                    raise FormatError(0, f"chance node {nid} is missing the edge {label!r}")
                outcomes.append((label, prob, build(children[nid][label])))
            if len(children[nid]) != len(payload):
                raise FormatError(0, f"chance node {nid} has stray edges")
            built[nid] = builder.chance(outcomes)
            return built[nid]
        p, iso_name, labels = payload
        kids = []
        for label in labels:
            if label not in children[nid]:
                raise FormatError(0, f"decision node {nid} is missing the edge {label!r}")
            kids.append(build(children[nid][label]))
        if len(children[nid]) != len(labels):
            raise FormatError(0, f"decision node {nid} has stray edges")
        built[nid] = builder.decision(p, iso_name, labels, kids)
        return built[nid]

    root = node_order[0]
    if root in referenced:
        raise FormatError(0, f"first node {root} is referenced as a child; no root")
    tree = builder.build(build(root), check=check)
    unreached = set(nodes) - set(built)
    if unreached:
        raise FormatError(0, f"nodes not connected to the root: {sorted(unreached)[:5]}")
    return tree


def import_game(path, check: bool = True) -> GameTree:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_game(fh.read(), check=check)
