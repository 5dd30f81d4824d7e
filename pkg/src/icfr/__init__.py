"""Uncoupled no-regret dynamics for extensive-form correlated equilibria."""

from .diagnostics import (TriggerAccumulators, accumulator_consumer,
                          check_decomposition, laminar_regret,
                          max_trigger_regret, replay_accumulators,
                          subtree_regret, trigger_regret)
from .dynamics import PlayerState, Runner, RunRecord, run
from .efg_io import export_game, import_game, parse_game, serialize_game
from .evaluation import DeviationReport, EmpiricalFrequency, GapEvaluator
from .games import GameSpec, figure_games, generate
from .oracle import certify, enumerate_plans, gap_by_enumeration
from .regret import (ExternalRegretMatcher, InternalRegretMatcher,
                     sample_index, stationary_distribution)
from .tree import (GameTree, Plan, PlanProfile, Sequence, TreeBuilder,
                   ValidationReport, validate)

__all__ = [
    "GameTree", "TreeBuilder", "Plan", "PlanProfile", "Sequence",
    "ValidationReport", "validate",
    "GameSpec", "generate", "figure_games",
    "ExternalRegretMatcher", "InternalRegretMatcher",
    "stationary_distribution", "sample_index",
    "PlayerState", "Runner", "RunRecord", "run",
    "TriggerAccumulators", "accumulator_consumer", "trigger_regret",
    "subtree_regret", "laminar_regret", "max_trigger_regret",
    "replay_accumulators", "check_decomposition",
    "EmpiricalFrequency", "GapEvaluator", "DeviationReport",
    "enumerate_plans", "gap_by_enumeration", "certify",
    "serialize_game", "parse_game", "export_game", "import_game",
]

__version__ = "0.1.0"
