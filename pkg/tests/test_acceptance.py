"""Acceptance criteria.

Each test prints one pass/fail line (visible with ``pytest -s`` or on
failure).  The heavy ten-seed benchmark run is shared between the convergence
criterion and the gap-ordering criterion through a module-scoped fixture.
"""

import filecmp

import numpy as np
import pytest

from icfr import games
from icfr.diagnostics import (accumulator_consumer, check_decomposition,
                              max_trigger_regret)
from icfr.dynamics import Runner
from icfr.evaluation import (EmpiricalFrequency, GapEvaluator,
                             efcce_decomposition_violations)
from icfr.experiments import ExperimentConfig, run_experiment
from icfr.games import GameSpec, generate
from icfr.oracle import certify, gap_by_enumeration, reach_identity_residual
from icfr.regret import (ExternalRegretMatcher, InternalRegretMatcher,
                         sample_index, stationary_distribution)


def verdict(criterion: int, ok: bool, message: str) -> None:
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {message}", flush=True)


def run_instrumented(tree, iterations, seed, checkpoints, kinds=("efce",),
                     store_tables=False):
    """Run the dynamics, returning (per-checkpoint reports, accumulators,
    per-checkpoint accumulator-path max regrets, record)."""
    freq = EmpiricalFrequency(tree)
    accs, consume = accumulator_consumer(tree)
    runner = Runner(tree, seed=seed, store_tables=store_tables,
                    consumers=[consume, lambda t, ch, tb: freq.record_choices(ch)])
    evaluator = GapEvaluator(tree)
    reports, regrets = {}, {}
    for cp in checkpoints:
        runner.run_until(cp)
        reports[cp] = evaluator.evaluate(freq, kinds=kinds)
        regrets[cp] = max(max_trigger_regret(acc)[0] for acc in accs) / cp
    return reports, accs, regrets, runner.record


@pytest.fixture(scope="module")
def benchmark_runs():
    """K3.3, ten seeds, 10^4 iterations, geometric checkpoints; used by the
    convergence-trend and gap-ordering criteria."""
    tree = games.kuhn(3, 3)
    checkpoints = [100, 200, 400, 800, 1600, 3200, 6400, 10000]
    runs = {}
    for seed in range(10):
        reports, _, regrets, _ = run_instrumented(
            tree, 10000, seed, checkpoints, kinds=("efce", "efcce"))
        runs[seed] = (reports, regrets)
    return tree, checkpoints, runs


def test_criterion_1_regret_deviation_identity():
    """Distribution-path deviation equals accumulator-path max regret / T."""
    worst = 0.0
    for tree in (games.figure_three(), games.kuhn(3, 3)):
        for seed in (0, 1):
            reports, _, regrets, _ = run_instrumented(tree, 1000, seed, [100, 1000])
            for cp in (100, 1000):
                delta = reports[cp].overall("efce")
                worst = max(worst, abs(delta - regrets[cp]))
    ok = worst <= 1e-9
    verdict(1, ok, f"max |deviation - regret/T| = {worst:.3e} (tolerance 1e-9)")
    assert ok


def test_criterion_2_oracle_equivalence():
    """Enumeration-based deviation equals the main path to 1e-12; the
    excluded-terminal flow identity holds per terminal to 1e-12."""
    worst_delta, worst_flow = 0.0, 0.0

    fig3 = games.figure_three()
    freq3 = EmpiricalFrequency(fig3)
    runner = Runner(fig3, seed=5, store_tables=False,
                    consumers=[lambda t, ch, tb: freq3.record_choices(ch)])
    runner.run_until(100)

    matrix = games.bimatrix([[4.0, 0.0], [1.0, 2.0]], [[2.0, 1.0], [0.0, 3.0]])
    freq_m = EmpiricalFrequency(matrix)
    for r in range(2):
        for c in range(2):
            freq_m.record(((r,), (c,)))
    runner = Runner(matrix, seed=5, store_tables=False,
                    consumers=[lambda t, ch, tb: freq_m.record_choices(ch)])
    runner.run_until(64)

    for tree, freq in ((fig3, freq3), (matrix, freq_m)):
        oracle = gap_by_enumeration(freq, tree)
        main = GapEvaluator(tree).evaluate(freq, kinds=("efce",))
        worst_delta = max(worst_delta, abs(oracle.delta - main.overall("efce")))
        worst_flow = max(worst_flow, oracle.max_identity_residual,
                         oracle.max_reduction_residual)

    ok = worst_delta <= 1e-12 and worst_flow <= 1e-12
    verdict(2, ok, f"oracle vs main delta {worst_delta:.3e}, flow identity "
                   f"{worst_flow:.3e} (tolerance 1e-12)")
    assert ok


def test_criterion_3_lemma_suite():
    """Recursion equality, laminar bound, ascent inequality, and the reach
    identity hold at every checkpoint of ten-seed runs."""
    checkpoints = [100, 200, 400, 800, 1000]
    bad = []
    worst_rho = 0.0
    rng = np.random.default_rng(0)
    for tree in (games.figure_three(), games.kuhn(3, 3)):
        for seed in range(10):
            freq = EmpiricalFrequency(tree)
            accs, consume = accumulator_consumer(tree)
            runner = Runner(tree, seed=seed, store_tables=True,
                            consumers=[consume, lambda t, ch, tb: freq.record_choices(ch)])
            for cp in checkpoints:
                runner.run_until(cp)
                report = check_decomposition(accs)
                if not report.ok:
                    bad.append((tree.players, seed, cp, report.violations[:2]))
                for _ in range(3):
                    t = int(rng.integers(runner.record.length))
                    player = int(rng.integers(tree.players))
                    hat = tuple(int(rng.integers(tree.num_actions(int(i))))
                                for i in tree.player_infosets(player))
                    worst_rho = max(worst_rho, reach_identity_residual(
                        tree, runner.record, t, player, hat))
    ok = not bad and worst_rho <= 1e-9
    verdict(3, ok, f"decomposition violations: {len(bad)}, "
                   f"max reach-identity residual {worst_rho:.3e}")
    assert ok, bad[:3]


def test_criterion_4_convergence_trend(benchmark_runs):
    """Seed-median deviation at 10^4 iterations is at most a quarter of the
    median at 10^2."""
    _, _, runs = benchmark_runs
    early = np.median([runs[s][0][100].overall("efce") for s in runs])
    late = np.median([runs[s][0][10000].overall("efce") for s in runs])
    ok = late <= 0.25 * early
    verdict(4, ok, f"median deviation {early:.5f} @1e2 -> {late:.6f} @1e4 "
                   f"(ratio {late / early:.4f}, bound 0.25)")
    assert ok


def test_criterion_5_game_sizes():
    """Generated instances against the benchmark table's per-player counts.

    The three-player 3-rank two-round poker row (3294/7687 per player) is not
    reproducible from the stated rules under any standard betting or
    observation convention we could construct; the faithful generator yields
    11043/25282.  See the decisions ledger for the search record.  The row is
    asserted as specified and expected to fail honestly.
    """
    expected = {
        ("kuhn", 3, 3): [(12, 25)] * 3,
        ("kuhn", 3, 4): [(16, 33)] * 3,
        ("goofspiel", 2, 3): [(213, 262)] * 2,
        ("goofspiel", 2, 4): [(8716, 10649)] * 2,
        ("goofspiel", 3, 3): [(837, 934)] * 3,
        ("battleship", 2, None): [(1413, 2965), (1873, 4101)],
        ("leduc", 3, 3): [(3294, 7687)] * 3,
    }
    mismatches = []
    for (family, players, ranks), want in expected.items():
        spec = GameSpec(family, players=players, ranks=ranks or 3)
        tree = generate(spec)
        got = []
        for p in range(tree.players):
            isos = np.flatnonzero(tree.infoset_player == p)
            seqs = sum(tree.num_actions(int(i)) for i in isos) + 1
            got.append((len(isos), seqs))
        if got != want:
            mismatches.append((family, players, ranks, want, got))
    ok = not mismatches
    verdict(5, ok, "all per-player infoset/sequence counts match the table"
            if ok else f"mismatches: {mismatches}")
    assert ok, mismatches


def test_criterion_6_regret_minimizer_properties():
    """Regret-matching bound, internal-regret decay, stationarity residual."""
    # external: brute-force regret within 2 * range * sqrt(n T) on oblivious streams
    ext_ok = True
    for n, seed in ((2, 0), (3, 1), (4, 2)):
        rng = np.random.default_rng(seed)
        rm = ExternalRegretMatcher(n)
        horizon = 3000
        stream = [rng.random(n) if t % 3 else np.eye(n)[t % n] for t in range(horizon)]
        totals = np.zeros(n)
        realized = 0.0
        for u in stream:
            c = sample_index(rm.recommend(), rng)
            rm.observe(u, c, 1.0)
            totals += u
            realized += u[c]
        ext_ok &= (totals.max() - realized) <= 2 * 1.0 * np.sqrt(n * horizon)

    # internal: per-seed decay of the realized pairwise regret rate
    worst_ratio = 0.0
    scale = np.array([1.0, 0.7, 0.4])
    for seed in range(10):
        u_rng = np.random.default_rng([seed, 0])
        s_rng = np.random.default_rng([seed, 1])
        rm = InternalRegretMatcher(3)
        table = np.zeros((3, 3))
        rates = {}
        for t in range(1, 4001):
            a = sample_index(rm.recommend(), s_rng)
            u = u_rng.random(3) * scale
            rm.observe(u, a, 1.0)
            table[a] += u - u[a]
            if t in (250, 4000):
                m = table.copy()
                np.fill_diagonal(m, 0.0)
                rates[t] = m.max() / t
        worst_ratio = max(worst_ratio, rates[4000] / rates[250])
    int_ok = worst_ratio <= 0.5

    # stationarity residual on random and adversarial matrices
    worst_res = 0.0
    rng = np.random.default_rng(3)
    cases = [np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(3),
             np.array([[1.0, 1e-6], [0.0, 1.0 - 1e-6]])]
    for _ in range(200):
        n = int(rng.integers(2, 6))
        m = rng.random((n, n)) ** 3 + 1e-9
        m /= m.sum(axis=0, keepdims=True)
        cases.append(m)
    for m in cases:
        q = stationary_distribution(m)
        worst_res = max(worst_res, float(np.abs(q - m @ q).sum()))
    sta_ok = worst_res <= 1e-9

    ok = ext_ok and int_ok and sta_ok
    verdict(6, ok, f"external bound {'ok' if ext_ok else 'violated'}, internal "
                   f"worst rate ratio {worst_ratio:.4f} (bound 0.5), stationary "
                   f"residual {worst_res:.3e} (bound 1e-9)")
    assert ok


def test_criterion_7_gap_ordering(benchmark_runs):
    """Per infoset, the coarse gain never exceeds the summed positive parts of
    the per-action triggered gains, at every checkpoint of the ten-seed runs."""
    tree, checkpoints, runs = benchmark_runs
    violations = []
    for seed, (reports, _) in runs.items():
        for cp in checkpoints:
            violations.extend((seed, cp, v)
                              for v in efcce_decomposition_violations(reports[cp], tree))
    ok = not violations
    verdict(7, ok, f"coarse-gain decomposition violations: {len(violations)}")
    assert ok, violations[:3]


def test_criterion_8_byte_determinism(tmp_path):
    """Identical config and seeds give byte-identical CSV outputs."""
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        run_experiment(ExperimentConfig(game="kuhn", players=3, ranks=3,
                                        iterations=200, seeds=(1, 2, 3),
                                        checkpoints=(100, 200), out=str(out),
                                        plots=False))
        outs.append(out)
    files = ["seed_1.csv", "seed_2.csv", "seed_3.csv", "aggregate.csv", "welfare.csv"]
    same = all(filecmp.cmp(outs[0] / f, outs[1] / f, shallow=False) for f in files)
    verdict(8, same, "CSV outputs byte-identical across two executions")
    assert same


def test_criterion_1_accumulator_identity_also_at_benchmark_scale(benchmark_runs):
    """Supplementary: the identity holds at every checkpoint of the ten-seed
    benchmark runs as well."""
    tree, checkpoints, runs = benchmark_runs
    worst = max(abs(reports[cp].overall("efce") - regrets[cp])
                for reports, regrets in runs.values() for cp in checkpoints)
    ok = worst <= 1e-9
    verdict(1, ok, f"benchmark-scale identity residual {worst:.3e}")
    assert ok
