"""Identify workers and slackers from rounds of disjoint pairwise OR tests."""

from .adaptive import identify_all_known_eps, identify_all_unknown_eps, phase_one, phase_two
from .analysis import expected_unidentified_after_k, planning_summary
from .bounded import classify_bracket, identify_bounded
from .core import (
    Pair,
    Population,
    Round,
    Semantics,
    Status,
    Transcript,
    execute_round,
    make_rng,
    pairwise_test,
    random_perfect_matching,
    round_robin_schedule,
)
from .errors import PairTestError
from .inference import InferenceEngine, KnowledgeState, Label, brute_force_identified, propagate
from .nonadaptive import deterministic_cover_schedule, random_matching_schedule, rounds_for_confidence, run_schedule
from .session import Report, TestSession

__all__ = [
    "InferenceEngine", "KnowledgeState", "Label", "Pair", "PairTestError", "Population", "Report",
    "Round", "Semantics", "Status", "TestSession", "Transcript", "brute_force_identified",
    "classify_bracket", "deterministic_cover_schedule", "execute_round", "expected_unidentified_after_k",
    "identify_all_known_eps", "identify_all_unknown_eps", "identify_bounded", "make_rng",
    "pairwise_test", "phase_one", "phase_two", "planning_summary", "propagate",
    "random_matching_schedule", "random_perfect_matching", "round_robin_schedule",
    "rounds_for_confidence", "run_schedule",
]
