"""Schedules fixed before any outcome is seen."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .core import (
    Population,
    Round,
    Semantics,
    Status,
    as_fraction,
    random_perfect_matching,
    round_robin_length,
    round_robin_schedule,
    schedule_to_text,
)
from .errors import DegenerateInputs, EpsilonOutOfRange
from .session import Report, TestSession


class ScheduleKind(enum.Enum):
    DETERMINISTIC_COVER = "deterministic-cover"
    RANDOM_MATCHING = "random-matching"


@dataclass(frozen=True)
class NonadaptiveSchedule:
    rounds: tuple[Round, ...]
    kind: ScheduleKind
    params: dict[str, Any] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.rounds)

    def truncated(self, k: int) -> NonadaptiveSchedule:
        return NonadaptiveSchedule(self.rounds[:k], self.kind, {**self.params, "truncated": k})

    def partners(self, n: int) -> list[set[int]]:
        out: list[set[int]] = [set() for _ in range(n)]
        for r in self.rounds:
            for a, b in r.pairs:
                out[a].add(b)
                out[b].add(a)
        return out

    def to_text(self) -> str:
        return schedule_to_text(self.rounds)


def slacker_count(n: int, eps) -> int:
    """``round(eps * n)`` with eps taken as an exact rational."""
    return round(as_fraction(eps) * n)


def deterministic_cover_schedule(n: int, eps) -> NonadaptiveSchedule:
    """Circle-method rounds giving everyone ``(1-eps)n + 1`` distinct partners.

    For odd ``n`` one extra round is taken, since each circle-method round
    leaves somebody idle.
    """
    m = slacker_count(n, eps)
    if n < 3 or not 2 <= m < n:
        raise EpsilonOutOfRange(f"need 2/n <= eps < 1, got eps*n={m} for n={n}")
    wanted = n - m + 1 + (n % 2)
    full = round_robin_schedule(range(n))
    k = min(wanted, round_robin_length(n))
    return NonadaptiveSchedule(tuple(full[:k]), ScheduleKind.DETERMINISTIC_COVER,
                               {"n": n, "m": m, "eps": eps})


def random_matching_schedule(n: int, k: int, rng: np.random.Generator,
                             seed: int | None = None) -> NonadaptiveSchedule:
    if n < 2 or k < 0:
        raise ValueError("need n >= 2 and k >= 0")
    rounds = tuple(random_perfect_matching(range(n), rng) for _ in range(k))
    return NonadaptiveSchedule(rounds, ScheduleKind.RANDOM_MATCHING, {"n": n, "k": k, "seed": seed})


def rounds_for_confidence(n: int, m: int, alpha: float = 1.0, simplified: bool = False) -> int:
    """Rounds of random matchings after which ``< 1/n**alpha`` remain unclassified.

    Even ``n``: ``(1+alpha) * max(log_{(n-1)/(n-m)} m, log_{(n-1)/(n-m-1)} (n-m))``.
    Odd ``n``: ``(1+alpha) * (log_{n/(n-m+1)} m + log_{n/(n-m)} (n-m))``.
    ``simplified`` gives ``(1+alpha) * log_{1/(1-m/n)} n``. The result is the
    ceiling of the real value.
    """
    if not 2 <= m < n:
        raise DegenerateInputs(f"need 2 <= m < n, got m={m}, n={n}")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if simplified:
        return math.ceil((1 + alpha) * math.log(n) / math.log(n / (n - m)))
    w = n - m
    if n % 2 == 0:
        slack = math.log(m) / math.log((n - 1) / (n - m))
        # one worker (or none) needs no rounds of its own
        work = math.log(w) / math.log((n - 1) / (w - 1)) if w >= 2 else 0.0
        return math.ceil((1 + alpha) * max(slack, work))
    slack = math.log(m) / math.log(n / (n - m + 1))
    work = math.log(w) / math.log(n / w) if w >= 2 else 0.0
    return math.ceil((1 + alpha) * (slack + work))


def run_schedule(schedule: NonadaptiveSchedule, pop: Population,
                 semantics: Semantics = Semantics.OR, seed: int | None = None,
                 stop_when_complete: bool = False) -> Report:
    session = TestSession(pop, semantics)
    for rnd in schedule.rounds:
        if stop_when_complete and session.engine.complete:
            break
        session.run(rnd)
    return Report.from_session(schedule.kind.value, session, seed=seed,
                               notes={"scheduled_rounds": len(schedule)})


def adversary_witness(rounds: Sequence[Round], n: int, m: int):
    """Two populations with ``m`` slackers that no test in ``rounds`` separates.

    Picks a pair ``u, v`` (tested together when possible), makes ``u`` a
    slacker, ``v`` and all partners of either a worker, and fills the rest.
    Swapping ``u`` and ``v`` leaves every outcome unchanged. Returns
    ``(pop_a, pop_b, u, v)`` or ``None`` when the schedule is too dense.
    """
    partners: list[set[int]] = [set() for _ in range(n)]
    edges = []
    for r in rounds:
        for a, b in r.pairs:
            partners[a].add(b)
            partners[b].add(a)
            edges.append((a, b))
    candidates: Iterable[tuple[int, int]] = edges + [(u, v) for u in range(n) for v in range(u + 1, n)]
    for u, v in candidates:
        blocked = partners[u] | partners[v] | {u, v}
        free = [i for i in range(n) if i not in blocked]
        if len(free) < m - 1:
            continue
        slackers = [u] + free[:m - 1]
        a = Population.from_slackers(n, slackers)
        b = Population.from_slackers(n, [v] + free[:m - 1])
        assert a[u] is Status.SLACKER and b[u] is Status.WORKER
        return a, b, u, v
    return None
