import itertools
import math
from fractions import Fraction as F

import pytest

from pairtest.core import Population, Round, Status, Transcript, execute_round, make_rng
from pairtest.errors import DegenerateInputs, EpsilonOutOfRange
from pairtest.inference import brute_force_identified
from pairtest.nonadaptive import (
    ScheduleKind,
    adversary_witness,
    deterministic_cover_schedule,
    random_matching_schedule,
    rounds_for_confidence,
    run_schedule,
    slacker_count,
)


def test_cover_examples():
    s = deterministic_cover_schedule(8, F(1, 2))
    assert len(s) == 5 and s.kind is ScheduleKind.DETERMINISTIC_COVER
    assert all(len(p) == 5 for p in s.partners(8))
    s = deterministic_cover_schedule(4, F(1, 2))
    assert len(s) == 3
    assert all(len(p) == 3 for p in s.partners(4))


def test_cover_odd_n_gives_enough_partners():
    for n in range(3, 30, 2):
        for m in range(2, n):
            s = deterministic_cover_schedule(n, F(m, n))
            need = min(n - m + 1, n - 1)
            assert min(len(p) for p in s.partners(n)) >= need


def test_cover_classifies_random_populations():
    rng = make_rng(1)
    s = deterministic_cover_schedule(20, F(3, 10))
    for _ in range(200):
        pop = Population.random(20, 6, rng)
        r = run_schedule(s, pop)
        assert r.fully_identified and r.matches(pop)


def test_cover_exhaustive_small():
    for n in range(3, 10):
        for m in range(2, n):
            s = deterministic_cover_schedule(n, F(m, n))
            for slackers in itertools.combinations(range(n), m):
                pop = Population.from_slackers(n, slackers)
                assert run_schedule(s, pop).fully_identified


def test_cover_domain():
    with pytest.raises(EpsilonOutOfRange):
        deterministic_cover_schedule(10, F(1, 10))
    with pytest.raises(EpsilonOutOfRange):
        deterministic_cover_schedule(10, 1)


def test_cover_text_export_has_no_outcomes():
    text = deterministic_cover_schedule(4, F(1, 2)).to_text()
    assert text == "0-1 2-3\n0-2 1-3\n0-3 1-2\n"


def test_random_matching_schedule():
    s = random_matching_schedule(2, 3, make_rng(0))
    assert s.rounds == (Round.of([(0, 1)]),) * 3
    s = random_matching_schedule(100, 39, make_rng(1))
    assert len(s) == 39 and all(len(r) == 50 for r in s.rounds)
    assert random_matching_schedule(30, 5, make_rng(9)) == random_matching_schedule(30, 5, make_rng(9))


def test_rounds_for_confidence_examples():
    assert rounds_for_confidence(100, 20, 1) == 39
    assert rounds_for_confidence(100, 20, 1, simplified=True) == 42
    assert rounds_for_confidence(4, 2, 1) == 4


def test_rounds_for_confidence_odd_n_sums_terms():
    n, m = 101, 20
    slack = math.log(m) / math.log(n / (n - m + 1))
    work = math.log(n - m) / math.log(n / (n - m))
    assert rounds_for_confidence(n, m, 1) == math.ceil(2 * (slack + work))


def test_rounds_for_confidence_edges():
    assert rounds_for_confidence(10, 9, 1) >= 1  # one worker: slacker term only
    for m in (0, 1, 10):
        with pytest.raises(DegenerateInputs):
            rounds_for_confidence(10, m, 1)
    with pytest.raises(ValueError):
        rounds_for_confidence(10, 3, 0)


def test_slacker_count_uses_exact_rational():
    assert slacker_count(100, F(1, 5)) == 20
    assert slacker_count(10, "3/10") == 3


def test_run_schedule_stop_when_complete():
    pop = Population.parse("SSWW")
    s = deterministic_cover_schedule(4, F(1, 2))
    r = run_schedule(s, pop, stop_when_complete=True)
    assert r.fully_identified and r.rounds_used <= 3


def test_adversary_witness_is_indistinguishable():
    for n in range(6, 13):
        for m in range(2, n - 1):
            cover = deterministic_cover_schedule(n, F(m, n))
            k = -(-(n - m) // 2) - 1  # largest k below (n - m) / 2
            rounds = cover.rounds[:k]
            w = adversary_witness(rounds, n, m)
            assert w is not None
            a, b, u, v = w
            assert a.slacker_count == b.slacker_count == m
            assert a[u] is Status.SLACKER and b[u] is Status.WORKER
            ta = Transcript.build(rounds, [execute_round(a, r) for r in rounds])
            tb = Transcript.build(rounds, [execute_round(b, r) for r in rounds])
            assert ta == tb
            known = {i for i, _ in brute_force_identified(ta, n, m)}
            assert u not in known and v not in known
