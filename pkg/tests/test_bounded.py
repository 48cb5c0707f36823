from fractions import Fraction as F

import pytest

from pairtest.bounded import (
    Bracket,
    classify_bracket,
    identify_bounded,
    placement_round,
    unidentified_groups_bound,
)
from pairtest.core import Population, Semantics, make_rng, random_perfect_matching
from pairtest.errors import BracketViolation, DeltaTooLarge
from pairtest.session import TestSession


@pytest.mark.parametrize("delta,bracket", [
    (F(1, 4), Bracket.TWO_ROUND),
    (0, Bracket.TWO_ROUND),
    (F(5, 14), Bracket.THREE_ROUND),
    (F(3, 10), Bracket.THREE_ROUND),
    (F(19, 46), Bracket.FOUR_ROUND),
    (F(2, 5), Bracket.FOUR_ROUND),
    (F(1, 2), Bracket.FIVE_ROUND),
    (F(9, 20), Bracket.FIVE_ROUND),
])
def test_classify_bracket(delta, bracket):
    assert classify_bracket(delta).bracket is bracket


def test_classify_bracket_rejects_large_delta():
    with pytest.raises(DeltaTooLarge):
        classify_bracket(F(51, 100))


def test_unidentified_groups_bound_examples():
    assert unidentified_groups_bound(24, F(1, 2)) == 4
    assert unidentified_groups_bound(24, 1) == 0
    assert unidentified_groups_bound(100, F(3, 4)) == 8


def test_two_round_example():
    rng = make_rng(1)
    for _ in range(200):
        pop = Population.random(40, 32, rng)
        r = identify_bounded(40, F(1, 5), pop, rng)
        assert r.known_slackers_by_round[0] >= 20
        assert r.rounds_used <= 2 and r.fully_identified and r.matches(pop)


def test_three_round_example():
    rng = make_rng(2)
    for _ in range(300):
        pop = Population.random(28, 20, rng)  # 8 workers, delta = 2/7
        r = identify_bounded(28, F(2, 7), pop, rng)
        assert r.rounds_used <= 3 and r.fully_identified and r.matches(pop)
        assert r.notes.get("three_round_branch") in {None, "half-known", "fill-with-workers"}


def test_three_round_accounting_after_round_two():
    rng = make_rng(3)
    n = 28
    for _ in range(300):
        pop = Population.random(n, 18, rng)  # delta = 5/14
        r = identify_bounded(n, F(5, 14), pop, rng)
        assert r.rounds_used <= 3 and r.matches(pop)
        if r.rounds_used >= 2:
            assert r.known_slackers_by_round[1] >= 3 * n / 7
            assert r.known_slackers_by_round[1] + r.known_workers_by_round[1] >= 4 * n / 7


def test_five_round_example():
    rng = make_rng(4)
    for _ in range(300):
        pop = Population.random(24, 12, rng)
        r = identify_bounded(24, F(1, 2), pop, rng)
        assert r.rounds_used <= 5 and r.fully_identified and r.matches(pop)
        assert r.notes["known_slackers_after_round_robin"] >= 8
        assert r.notes["silent_groups"] <= 4


def test_five_round_scheme_can_be_forced_for_small_delta():
    rng = make_rng(5)
    pop = Population.random(40, 32, rng)
    r = identify_bounded(40, F(1, 5), pop, rng, scheme=Bracket.FIVE_ROUND)
    assert r.algorithm == "bounded-5" and r.rounds_used <= 5 and r.fully_identified


def test_bracket_violation_errors():
    rng = make_rng(6)
    with pytest.raises(BracketViolation):
        identify_bounded(40, F(3, 10), Population.random(40, 28, rng), rng, scheme=Bracket.TWO_ROUND)
    with pytest.raises(BracketViolation):
        identify_bounded(22, F(1, 2), Population.random(22, 11, rng), rng)


def test_population_must_match_delta():
    rng = make_rng(7)
    with pytest.raises(ValueError):
        identify_bounded(40, F(1, 5), Population.random(40, 30, rng), rng)


def test_placement_round_pairs_known_slackers_with_unknowns():
    rng = make_rng(8)
    pop = Population.random(20, 15, rng)
    s = TestSession(pop)
    s.run(random_perfect_matching(range(20), rng))
    targets = set(s.known_targets())
    unknown = set(s.unknowns())
    rnd = placement_round(s, rng)
    faced = {b if a in targets else a for a, b in rnd.pairs if (a in targets) != (b in targets)}
    assert len(faced & unknown) == min(len(targets), len(unknown))


def test_and_dual_bounded():
    for seed in range(20):
        pop = Population.random(24, 16, make_rng(seed))
        a = identify_bounded(24, F(1, 3), pop, make_rng(100 + seed))
        b = identify_bounded(24, F(1, 3), pop.swapped(), make_rng(100 + seed), semantics=Semantics.AND)
        assert b.transcript == a.transcript.negated()
        assert b.state == a.state.swapped()
