"""Experiment driver: run the dynamics over seeds, evaluate gaps at
checkpoints, verify the regret/deviation identity, and emit CSV files.

Per seed: one record CSV (checkpoint rows) and one resumable snapshot.
Across seeds: an aggregate CSV with mean/std per checkpoint and player, and a
social-welfare CSV with one row per seed.  All floats are serialised with 17
significant digits and runs are byte-deterministic given (config, seeds).
"""

from __future__ import annotations

import csv
import os
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .diagnostics import accumulator_consumer, max_trigger_regret
from .dynamics import Runner
from .evaluation import (EmpiricalFrequency, GapEvaluator,
                         efcce_decomposition_violations)
from .games import GameSpec, generate

GAP_KINDS = ("efce", "efcce", "nfcce")
SEED_CSV_HEADER = ["t", "player", "delta_efce", "delta_efcce", "delta_nfcce"]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass
class ExperimentConfig:
    game: str = "kuhn"
    players: int = 3
    ranks: int = 3
    grid: tuple[int, int] = (2, 2)
    rounds: int = 3
    limited_info: bool = True
    sorted_deck: bool = False
    iterations: int = 1000
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    checkpoints: tuple[int, ...] | None = None
    gaps: tuple[str, ...] = GAP_KINDS
    out: str = ""
    workers: int = 1
    verify: bool = True
    plots: bool = True
    resume: bool = False

    def game_spec(self) -> GameSpec:
        return GameSpec(family=self.game, players=self.players, ranks=self.ranks,
                        grid=self.grid, rounds=self.rounds,
                        limited_info=self.limited_info, sorted_deck=self.sorted_deck)

    def schedule(self) -> list[int]:
        if self.checkpoints:
            cps = sorted(set(int(c) for c in self.checkpoints))
            if cps[0] < 1 or cps[-1] > self.iterations:
                raise ValueError("checkpoints must lie in [1, iterations]")
            if cps[-1] != self.iterations:
                cps.append(self.iterations)
            return cps
        return default_checkpoints(self.iterations)

    def out_dir(self) -> Path:
        base = self.out or os.environ.get("ICFR_OUT_DIR", "runs")
        return Path(base)


def default_checkpoints(iterations: int) -> list[int]:
    """Geometric doubling from 100, always including the final iteration."""
    cps = []
    c = 100
    while c < iterations:
        cps.append(c)
        c *= 2
    cps.append(iterations)
    return [c for c in cps if c >= 1]


def parse_seed_list(text: str) -> tuple[int, ...]:
    """Comma-separated integers; ``a..b`` expands to the inclusive range."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("empty seed list")
    return tuple(seeds)


def parse_config_file(path) -> dict:
    """Flat ``key = value`` file; # starts a comment.  Unknown keys and
    malformed lines raise with their line number."""
    known = {f.name for f in fields(ExperimentConfig)} | {"T"}
    out: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected `key = value`")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise ValueError(f"{path}:{line_no}: unknown key {key!r}")
            try:
                out.update(_coerce(key, value))
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from None
    return out


def _coerce(key: str, value: str) -> dict:
    if key == "T":
        key = "iterations"
    if key in ("players", "ranks", "rounds", "iterations", "workers"):
        return {key: int(value)}
    if key in ("limited_info", "sorted_deck", "verify", "plots", "resume"):
        lowered = value.lower()
        if lowered not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"bad boolean {value!r}")
        return {key: lowered in ("true", "1", "yes")}
    if key == "seeds":
        return {key: parse_seed_list(value)}
    if key == "checkpoints":
        return {key: tuple(int(v) for v in value.split(","))}
    if key == "gaps":
        kinds = tuple(v.strip() for v in value.split(",") if v.strip())
        bad = [k for k in kinds if k not in GAP_KINDS]
        if bad:
            raise ValueError(f"unknown gap kinds {bad}")
        return {key: kinds}
    if key == "grid":
        rows, cols = value.lower().replace("x", " ").split()
        return {key: (int(rows), int(cols))}
    return {key: value}


@dataclass
class SeedResult:
    seed: int
    rows: list            # (t, player, {kind: gap})
    welfare: tuple        # (per-player utilities, sum)
    violations: list = field(default_factory=list)


def checkpoint_verification(tree, freq, accs, report, tol: float = 1e-9) -> list[str]:
    """Cross-path checks at one checkpoint: the deviation/regret identity and
    the per-infoset coarse-gap decomposition bound."""
    problems = []
    if report.efce is not None:
        delta = report.overall("efce")
        reg = max(max_trigger_regret(acc)[0] for acc in accs) / freq.total
        if abs(delta - reg) > tol:
            problems.append(
                f"t={freq.total}: deviation {delta!r} != max regret/T {reg!r}")
    if report.efce_gains is not None and report.efcce_gains is not None:
        for player, li, gain, bound in efcce_decomposition_violations(report, tree, tol):
            problems.append(
                f"t={freq.total}: coarse gain {gain!r} at player {player} infoset {li} "
                f"exceeds per-action bound {bound!r}")
    return problems


def run_seed(config: ExperimentConfig, seed: int) -> SeedResult:
    tree = generate(config.game_spec())
    freq = EmpiricalFrequency(tree)
    accs, consume_acc = accumulator_consumer(tree)
    runner = Runner(tree, seed, store_tables=False,
                    consumers=[consume_acc, lambda t, ch, tb: freq.record_choices(ch)])
    evaluator = GapEvaluator(tree)

    out = config.out_dir()
    snap_path = out / f"seed_{seed}.state.pkl"
    rows: list = []
    done_upto = 0
    if config.resume and snap_path.exists():
        with open(snap_path, "rb") as fh:
            snap = pickle.load(fh)
        runner.load_state_dict(snap["runner"])
        freq.counts.update(snap["freq"])
        freq.total = sum(freq.counts.values())
        for (i,), data in snap["accumulators"].items():
            accs[i].counts[:] = data["counts"]
            accs[i].imm[:] = data["imm"]
            accs[i].cf[:] = data["cf"]
            accs[i].followed[:] = data["followed"]
            accs[i].iterations = data["iterations"]
        rows = snap["rows"]
        done_upto = runner.t

    violations: list[str] = []
    for cp in config.schedule():
        if cp <= done_upto:
            continue
        runner.run_until(cp)
        report = evaluator.evaluate(freq, kinds=config.gaps)
        if config.verify:
            violations.extend(checkpoint_verification(tree, freq, accs, report))
        for player in range(tree.players):
            gaps = {}
            for kind in GAP_KINDS:
                vals = getattr(report, kind)
                gaps[kind] = vals[player] if vals is not None else None
            rows.append((cp, player, gaps))
        _save_snapshot(snap_path, runner, freq, accs, rows)

    welfare = evaluator.social_welfare(freq)
    return SeedResult(seed=seed, rows=rows, welfare=welfare, violations=violations)


def _save_snapshot(path, runner, freq, accs, rows) -> None:
    snap = {
        "runner": runner.state_dict(),
        "freq": dict(freq.counts),
        "accumulators": {(i,): {"counts": acc.counts.copy(), "imm": acc.imm.copy(),
                                "cf": acc.cf.copy(), "followed": acc.followed.copy(),
                                "iterations": acc.iterations}
                         for i, acc in enumerate(accs)},
        "rows": list(rows),
    }
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        pickle.dump(snap, fh)
    os.replace(tmp, path)


def write_seed_csv(path, result: SeedResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SEED_CSV_HEADER)
        for t, player, gaps in result.rows:
            writer.writerow([t, player] +
                            [fmt(gaps[k]) if gaps[k] is not None else "" for k in GAP_KINDS])


def write_aggregate_csv(path, results: list[SeedResult]) -> None:
    keyed: dict = {}
    for res in results:
        for t, player, gaps in res.rows:
            keyed.setdefault((t, player), []).append(gaps)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["t", "player"]
        for kind in GAP_KINDS:
            header += [f"mean_{kind}", f"std_{kind}"]
        writer.writerow(header)
        for (t, player) in sorted(keyed):
            row = [t, player]
            for kind in GAP_KINDS:
                vals = [g[kind] for g in keyed[(t, player)] if g[kind] is not None]
                if vals:
                    arr = np.asarray(vals)
                    row += [fmt(arr.mean()), fmt(arr.std())]
                else:
                    row += ["", ""]
            writer.writerow(row)


def write_welfare_csv(path, results: list[SeedResult], players: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed"] + [f"u_player{i + 1}" for i in range(players)]
                        + ["welfare_sum"])
        for res in results:
            per, total = res.welfare
            writer.writerow([res.seed] + [fmt(v) for v in per] + [fmt(total)])


def _worker(args) -> SeedResult:
    config, seed = args
    return run_seed(config, seed)


@dataclass
class ExperimentResult:
    out_dir: Path
    seed_files: list
    aggregate_file: Path
    welfare_file: Path
    figure_files: list
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    config.game_spec().validate()
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_worker, [(config, s) for s in config.seeds]))
    else:
        results = [run_seed(config, s) for s in config.seeds]
    results.sort(key=lambda r: config.seeds.index(r.seed))

    seed_files = []
    for res in results:
        path = out / f"seed_{res.seed}.csv"
        write_seed_csv(path, res)
        seed_files.append(path)
    aggregate_file = out / "aggregate.csv"
    write_aggregate_csv(aggregate_file, results)
    players = generate(config.game_spec()).players
    welfare_file = out / "welfare.csv"
    write_welfare_csv(welfare_file, results, players)

    figure_files = []
    if config.plots:
        from . import plots
        figure_files.append(plots.convergence_figure(aggregate_file, out / "convergence.png"))
        if players == 2:
            figure_files.append(plots.welfare_figure(welfare_file, out / "welfare.png"))

    violations = [f"seed {res.seed}: {v}" for res in results for v in res.violations]
    return ExperimentResult(out, seed_files, aggregate_file, welfare_file,
                            figure_files, violations)
