"""Command-line experiment driver.

Subcommands:

    icfr run      -- run the dynamics over seeds, write CSVs and figures
    icfr export   -- generate a benchmark game and write the textual format
    icfr inspect  -- validate a game (generated or from file), print its size
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace

import numpy as np

from .efg_io import export_game, import_game
from .experiments import (ExperimentConfig, parse_config_file, parse_seed_list,
                          run_experiment)
from .games import FAMILIES, GameSpec, generate
from .tree import validate


def _add_game_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--game", choices=FAMILIES, help="game family")
    parser.add_argument("--players", type=int)
    parser.add_argument("--ranks", type=int)
    parser.add_argument("--grid", nargs=2, type=int, metavar=("ROWS", "COLS"))
    parser.add_argument("--rounds", type=int)
    parser.add_argument("--sorted-deck", action="store_true", default=None)
    parser.add_argument("--limited-info", dest="limited_info", action="store_true", default=None)
    parser.add_argument("--full-info", dest="limited_info", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icfr",
                                     description="no-regret dynamics experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run dynamics and evaluate deviation gaps")
    _add_game_flags(run_p)
    run_p.add_argument("-T", "--iterations", type=int, help="iterations per seed")
    run_p.add_argument("--seeds", type=str, help="e.g. 1..50 or 0,3,7")
    run_p.add_argument("--checkpoints", type=str, help="comma-separated iteration counts")
    run_p.add_argument("--gaps", type=str, help="subset of efce,efcce,nfcce")
    run_p.add_argument("--out", type=str, help="output directory (or $ICFR_OUT_DIR)")
    run_p.add_argument("--workers", type=int, help="parallel seed workers")
    run_p.add_argument("--config", type=str, help="key = value configuration file")
    run_p.add_argument("--no-verify", dest="verify", action="store_false", default=None)
    run_p.add_argument("--no-plots", dest="plots", action="store_false", default=None)
    run_p.add_argument("--resume", action="store_true", default=None,
                       help="continue from per-seed snapshots when present")

    exp_p = sub.add_parser("export", help="write a generated game to the textual format")
    _add_game_flags(exp_p)
    exp_p.add_argument("--out", type=str, required=True, help="output file")

    ins_p = sub.add_parser("inspect", help="validate a game and print its size")
    _add_game_flags(ins_p)
    ins_p.add_argument("path", nargs="?", help="textual game file (omit to generate)")

    return parser


def _config_from_args(args) -> ExperimentConfig:
    config = ExperimentConfig()
    if getattr(args, "config", None):
        config = replace(config, **parse_config_file(args.config))
    overrides = {}
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is None:
            continue
        if f.name == "seeds":
            value = parse_seed_list(value)
        elif f.name == "checkpoints":
            value = tuple(int(v) for v in value.split(","))
        elif f.name == "gaps":
            value = tuple(v.strip() for v in value.split(","))
        elif f.name == "grid":
            value = tuple(value)
        overrides[f.name] = value
    return replace(config, **overrides)


def _spec_from_args(args) -> GameSpec:
    spec = GameSpec(family=args.game or "kuhn")
    updates = {}
    for name in ("players", "ranks", "rounds"):
        if getattr(args, name, None) is not None:
            updates[name] = getattr(args, name)
    if getattr(args, "grid", None) is not None:
        updates["grid"] = tuple(args.grid)
    if getattr(args, "sorted_deck", None) is not None:
        updates["sorted_deck"] = args.sorted_deck
    if getattr(args, "limited_info", None) is not None:
        updates["limited_info"] = args.limited_info
    return replace(spec, **updates)


def cmd_run(args) -> int:
    config = _config_from_args(args)
    result = run_experiment(config)
    print(f"wrote {len(result.seed_files)} seed files, {result.aggregate_file}, "
          f"{result.welfare_file}")
    for fig in result.figure_files:
        print(f"figure: {fig}")
    if result.violations:
        print(f"{len(result.violations)} verification violations:", file=sys.stderr)
        for v in result.violations[:10]:
            print(f"  {v}", file=sys.stderr)
        return 1
    return 0


def cmd_export(args) -> int:
    spec = _spec_from_args(args)
    tree = generate(spec)
    export_game(tree, args.out)
    print(f"wrote {args.out} ({tree.num_nodes} nodes, {tree.num_terminals} terminals)")
    return 0


def cmd_inspect(args) -> int:
    if args.path:
        tree = import_game(args.path, check=False)
    else:
        tree = generate(_spec_from_args(args))
    report = validate(tree)
    print(f"players:   {tree.players}")
    print(f"nodes:     {tree.num_nodes}")
    print(f"terminals: {tree.num_terminals}")
    for i in range(tree.players):
        isos = np.flatnonzero(tree.infoset_player == i)
        seqs = sum(tree.num_actions(int(s)) for s in isos) + 1
        print(f"player {i}: {len(isos)} infosets, {seqs} sequences")
    if report.ok:
        print("validation: ok")
        return 0
    print(f"validation: {len(report.violations)} violations")
    for v in report.violations[:10]:
        print(f"  [{v.kind}] {v.message}")
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "export": cmd_export, "inspect": cmd_inspect}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
