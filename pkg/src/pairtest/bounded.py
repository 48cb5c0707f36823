"""Constant-round identification when workers are scarce (worker share <= 1/2).

With ``delta`` the worker fraction:

* ``delta <= 1/4``: one random matching exposes at least n/2 slackers; a
  second round pairs every unknown with one of them (2 rounds).
* ``delta <= 5/14``: after the first matching, known slackers are spread over
  separate pairs against unknowns and the leftover unknowns meet each other;
  a third round finishes (3 rounds).
* ``delta <= 19/46``: the same placement strategy needs one more round (4).
* ``delta <= 1/2``: groups of four run a full round robin (3 rounds); groups
  with two or more slackers are then fully known, which supplies enough known
  slackers to finish in two more rounds (5).

Rounds after the opening always follow one placement rule: every known
slacker gets its own pair with an unknown while unknowns remain, the other
unknowns are matched among themselves, and identified workers pair with each
other. The counting arguments for each bracket bound how many rounds that
rule needs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    Population,
    Round,
    Semantics,
    as_fraction,
    merge_parallel,
    random_perfect_matching,
    round_robin_schedule,
)
from .errors import BracketViolation, DeltaTooLarge
from .inference import Label
from .session import Report, TestSession


class Bracket(enum.Enum):
    TWO_ROUND = 2
    THREE_ROUND = 3
    FOUR_ROUND = 4
    FIVE_ROUND = 5

    @property
    def rounds(self) -> int:
        return self.value

    @property
    def upper(self) -> Fraction:
        return _UPPER[self]


_UPPER = {
    Bracket.TWO_ROUND: Fraction(1, 4),
    Bracket.THREE_ROUND: Fraction(5, 14),
    Bracket.FOUR_ROUND: Fraction(19, 46),
    Bracket.FIVE_ROUND: Fraction(1, 2),
}


@dataclass(frozen=True)
class DeltaBracket:
    delta: Fraction
    bracket: Bracket


def classify_bracket(delta) -> DeltaBracket:
    delta = as_fraction(delta)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    for b in Bracket:
        if delta <= b.upper:
            return DeltaBracket(delta, b)
    raise DeltaTooLarge(f"delta={delta} exceeds 1/2; no bounded-round scheme applies")


def unidentified_groups_bound(n: int, eps) -> int:
    """Most groups of four that can stay silent after their round robin."""
    eps = as_fraction(eps)
    if eps < Fraction(1, 2) or eps > 1:
        raise ValueError("needs 1/2 <= eps <= 1")
    if n % 4:
        raise ValueError("n must be divisible by 4")
    return math.floor((1 - eps) * n / 3)


def _pair_up(items, out):
    for i in range(0, len(items) - 1, 2):
        out.append((items[i], items[i + 1]))


def placement_round(session: TestSession, rng: np.random.Generator) -> Round:
    """Known slackers each face an unknown; spare unknowns meet each other."""
    targets = session.known_targets()
    unknown = session.unknowns()
    others = session.known_others()
    targets = [targets[i] for i in rng.permutation(len(targets))]
    unknown = [unknown[i] for i in rng.permutation(len(unknown))]
    others = [others[i] for i in rng.permutation(len(others))]
    k = min(len(targets), len(unknown))
    pairs = list(zip(targets[:k], unknown[:k]))
    spare = unknown[k:]
    _pair_up(spare, pairs)
    filler = targets[k:] + others
    if len(spare) % 2:
        if filler:
            pairs.append((spare[-1], filler.pop()))
    _pair_up(filler, pairs)
    return Round.of(pairs)


def identify_bounded(n: int, delta, pop: Population, rng: np.random.Generator,
                     semantics: Semantics = Semantics.OR, scheme: Bracket | None = None,
                     seed: int | None = None, max_rounds: int | None = None) -> Report:
    """Classify everyone within the round count of the bracket of ``delta``.

    ``scheme`` may force a looser bracket (e.g. the five-round scheme for
    any ``delta <= 1/2``). Should an instance need more rounds than the
    bracket promises, testing continues and ``notes["bracket_violation"]``
    is set.
    """
    if pop.n != n:
        raise ValueError("population size does not match n")
    delta = as_fraction(delta)
    tight = classify_bracket(delta)
    scheme = scheme or tight.bracket
    if delta > scheme.upper:
        raise BracketViolation(f"delta={delta} is outside the {scheme.rounds}-round bracket")
    workers = pop.count(semantics.target.other())
    if workers != round(delta * n):
        raise ValueError(f"population has {workers} workers, delta*n rounds to {round(delta * n)}")

    session = TestSession(pop, semantics)
    notes: dict = {"bracket": scheme.name, "bound": scheme.rounds}
    if scheme is Bracket.FIVE_ROUND:
        if n % 4:
            raise BracketViolation("the five-round scheme needs n divisible by 4")
        perm = rng.permutation(n)
        groups = [tuple(int(i) for i in perm[j:j + 4]) for j in range(0, n, 4)]
        for rnd in merge_parallel(round_robin_schedule(g) for g in groups):
            session.run(rnd)
        labels = session.engine.labels
        notes["silent_groups"] = sum(1 for g in groups if all(labels[i] is Label.UNKNOWN for i in g))
        notes["known_slackers_after_round_robin"] = session.engine.target_known
    else:
        session.run(random_perfect_matching(range(n), rng))

    cap = max_rounds if max_rounds is not None else n + 5
    while not session.engine.complete and session.rounds_used < cap:
        if scheme is Bracket.THREE_ROUND and session.rounds_used == 2:
            # known slackers now cover all unknowns, or identified workers fill the gap
            half = 2 * session.engine.target_known >= n
            notes["three_round_branch"] = "half-known" if half else "fill-with-workers"
        session.run(placement_round(session, rng))

    notes["bracket_violation"] = session.rounds_used > scheme.rounds or not session.engine.complete
    return Report.from_session(f"bounded-{scheme.rounds}", session, seed=seed, notes=notes)
