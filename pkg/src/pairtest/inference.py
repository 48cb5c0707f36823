"""Classification of individuals from test outcomes.

Two rules are applied to a fixpoint, retroactively over every recorded test:

* a revealing outcome (a failed OR test) marks both members as the target
  status (slackers);
* a non-revealing outcome whose partner is a known target marks the other
  member as non-target (worker).

Optionally the known total number of slackers is used as well. In that mode
the remaining unknowns are resolved exactly: the undetermined slackers must
form an independent set of the "quiet" test graph, so an individual is forced
when no independent set of the required size can include (or exclude) it.

:func:`brute_force_identified` is the enumeration oracle used to check all of
this on small instances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Pair, Semantics, Status, Transcript
from .errors import (
    ContradictionDetected,
    IndexOutOfRange,
    InstanceTooLarge,
    NoConsistentAssignment,
)

BRUTE_FORCE_LIMIT = 20


class Label(enum.IntEnum):
    UNKNOWN = 0
    KNOWN_SLACKER = 1
    KNOWN_WORKER = 2

    @classmethod
    def known(cls, status: Status) -> Label:
        return cls.KNOWN_SLACKER if status is Status.SLACKER else cls.KNOWN_WORKER

    @property
    def status(self) -> Status | None:
        if self is Label.KNOWN_SLACKER:
            return Status.SLACKER
        if self is Label.KNOWN_WORKER:
            return Status.WORKER
        return None


@dataclass(frozen=True)
class KnowledgeState:
    labels: tuple[Label, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(Label(x) for x in self.labels))

    @classmethod
    def unknown(cls, n: int) -> KnowledgeState:
        return cls((Label.UNKNOWN,) * n)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def known_slacker_count(self) -> int:
        return sum(1 for x in self.labels if x is Label.KNOWN_SLACKER)

    @property
    def known_worker_count(self) -> int:
        return sum(1 for x in self.labels if x is Label.KNOWN_WORKER)

    @property
    def unknown_count(self) -> int:
        return sum(1 for x in self.labels if x is Label.UNKNOWN)

    @property
    def complete(self) -> bool:
        return all(x is not Label.UNKNOWN for x in self.labels)

    def identified(self) -> set[tuple[int, Status]]:
        return {(i, x.status) for i, x in enumerate(self.labels) if x is not Label.UNKNOWN}

    def indices(self, label: Label) -> list[int]:
        return [i for i, x in enumerate(self.labels) if x is label]

    def swapped(self) -> KnowledgeState:
        flip = {
            Label.UNKNOWN: Label.UNKNOWN,
            Label.KNOWN_SLACKER: Label.KNOWN_WORKER,
            Label.KNOWN_WORKER: Label.KNOWN_SLACKER,
        }
        return KnowledgeState(tuple(flip[x] for x in self.labels))

    def refines(self, other: KnowledgeState) -> bool:
        """True when every label known in ``other`` is known identically here."""
        return all(b is Label.UNKNOWN or a is b for a, b in zip(self.labels, other.labels))

    def __str__(self) -> str:
        return "".join(".SW"[x] for x in self.labels)


class InferenceEngine:
    """Incremental rule engine; feed it rounds as they are tested.

    Labels only ever move from unknown to known. Any outcome that conflicts
    with what is already known raises :class:`ContradictionDetected`.
    """

    def __init__(self, n: int, semantics: Semantics = Semantics.OR,
                 initial: KnowledgeState | None = None):
        self.n = n
        self.semantics = semantics
        self._target = Label.known(semantics.target)
        self._other = Label.known(semantics.target.other())
        self._reveal = semantics.revealing_outcome
        self.labels: list[Label] = [Label.UNKNOWN] * n
        self._quiet: list[list[int]] = [[] for _ in range(n)]
        self.target_known = 0
        self.other_known = 0
        if initial is not None:
            if initial.n != n:
                raise ValueError("initial state has the wrong size")
            for i, lab in enumerate(initial.labels):
                if lab is self._target:
                    self._mark_target(i)
                elif lab is self._other:
                    self._mark_other(i)

    @property
    def known_slackers(self) -> int:
        return self.target_known if self._target is Label.KNOWN_SLACKER else self.other_known

    @property
    def known_workers(self) -> int:
        return self.other_known if self._target is Label.KNOWN_SLACKER else self.target_known

    @property
    def unknown(self) -> int:
        return self.n - self.target_known - self.other_known

    @property
    def complete(self) -> bool:
        return self.target_known + self.other_known == self.n

    def state(self) -> KnowledgeState:
        return KnowledgeState(tuple(self.labels))

    def is_target(self, i: int) -> bool:
        return self.labels[i] is self._target

    def is_other(self, i: int) -> bool:
        return self.labels[i] is self._other

    def _mark_target(self, x: int) -> None:
        lab = self.labels[x]
        if lab is self._target:
            return
        if lab is self._other:
            raise ContradictionDetected(f"individual {x} cannot be both classes")
        self.labels[x] = self._target
        self.target_known += 1
        for y in self._quiet[x]:
            self._mark_other(y)

    def _mark_other(self, y: int) -> None:
        lab = self.labels[y]
        if lab is self._other:
            return
        if lab is self._target:
            raise ContradictionDetected(f"quiet test between two known targets at {y}")
        self.labels[y] = self._other
        self.other_known += 1

    def add_test(self, a: int, b: int, outcome: bool) -> None:
        if not (0 <= a < self.n and 0 <= b < self.n):
            raise IndexOutOfRange(f"pair {a}-{b} outside population of {self.n}")
        if outcome == self._reveal:
            self._mark_target(a)
            self._mark_target(b)
            return
        ta, tb = self.labels[a] is self._target, self.labels[b] is self._target
        if ta and tb:
            raise ContradictionDetected(f"quiet test between known targets {a} and {b}")
        self._quiet[a].append(b)
        self._quiet[b].append(a)
        if ta:
            self._mark_other(b)
        elif tb:
            self._mark_other(a)

    def add_round(self, pairs: Iterable[Pair], outcomes: Sequence[bool]) -> int:
        """Record a round; returns how many individuals became known."""
        before = self.target_known + self.other_known
        for (a, b), out in zip(pairs, outcomes):
            self.add_test(a, b, out)
        return self.target_known + self.other_known - before

    def apply_count(self, target_count: int) -> int:
        """Resolve unknowns exactly given the total number of targets."""
        before = self.target_known + self.other_known
        unknown = [i for i in range(self.n) if self.labels[i] is Label.UNKNOWN]
        need = target_count - self.target_known
        if need < 0:
            raise ContradictionDetected("more known targets than the stated count")
        forced_target, forced_other = _resolve_by_count(unknown, self._quiet, self.labels, need)
        for i in forced_target:
            self._mark_target(i)
        for i in forced_other:
            self._mark_other(i)
        return self.target_known + self.other_known - before


def _resolve_by_count(unknown, quiet, labels, need):
    """Exact forced members for: choose ``need`` unknowns, no two quietly tested."""
    local = {v: k for k, v in enumerate(unknown)}
    adj = [0] * len(unknown)
    for v, k in local.items():
        for y in quiet[v]:
            j = local.get(y)
            if j is not None and labels[y] is Label.UNKNOWN:
                adj[k] |= 1 << j
    # connected components as bitmasks
    comps = []
    seen = 0
    for k in range(len(unknown)):
        bit = 1 << k
        if seen & bit:
            continue
        comp, frontier = bit, bit
        while frontier:
            low = frontier & -frontier
            frontier ^= low
            nb = adj[low.bit_length() - 1] & ~comp
            comp |= nb
            frontier |= nb
        seen |= comp
        comps.append(comp)

    memo: dict[int, int] = {}
    alphas = [_mis(c, adj, memo) for c in comps]
    total = sum(alphas)
    if need > total:
        raise ContradictionDetected("too few unknowns can be targets to meet the count")
    forced_target, forced_other = [], []
    for comp, alpha in zip(comps, alphas):
        rest = total - alpha
        m = comp
        while m:
            low = m & -m
            m ^= low
            k = low.bit_length() - 1
            can_be_other = need <= rest + _mis(comp & ~low, adj, memo)
            can_be_target = need >= 1 and need <= rest + 1 + _mis(comp & ~(low | adj[k]), adj, memo)
            if not can_be_other:
                forced_target.append(unknown[k])
            elif not can_be_target:
                forced_other.append(unknown[k])
    return forced_target, forced_other


def _mis(mask: int, adj: list[int], memo: dict[int, int]) -> int:
    """Maximum independent set size of the subgraph induced by ``mask``."""
    if mask == 0:
        return 0
    hit = memo.get(mask)
    if hit is not None:
        return hit
    best_v, best_d = -1, -1
    m = mask
    res = None
    while m:
        low = m & -m
        m ^= low
        v = low.bit_length() - 1
        d = (adj[v] & mask).bit_count()
        if d <= 1:
            # a vertex of degree <= 1 always belongs to some maximum set
            res = 1 + _mis(mask & ~(low | adj[v]), adj, memo)
            break
        if d > best_d:
            best_v, best_d = v, d
    if res is None:
        bit = 1 << best_v
        res = max(_mis(mask & ~bit, adj, memo), 1 + _mis(mask & ~(bit | adj[best_v]), adj, memo))
    memo[mask] = res
    return res


def propagate(state: KnowledgeState, transcript: Transcript, use_count_constraint: bool = False,
              slacker_count: int | None = None,
              semantics: Semantics = Semantics.OR) -> KnowledgeState:
    """Close ``state`` under the inference rules over every test in ``transcript``."""
    engine = InferenceEngine(state.n, semantics, initial=state)
    for r, out in zip(transcript.rounds, transcript.outcomes):
        engine.add_round(r.pairs, out)
    if use_count_constraint:
        if slacker_count is None:
            raise ValueError("count constraint requested without a slacker count")
        if not 0 <= slacker_count <= state.n:
            raise ValueError("slacker count outside [0, n]")
        target = slacker_count if semantics is Semantics.OR else state.n - slacker_count
        engine.apply_count(target)
    return engine.state()


def brute_force_identified(transcript: Transcript, n: int, slacker_count: int | None = None,
                           semantics: Semantics = Semantics.OR) -> set[tuple[int, Status]]:
    """Individuals whose status agrees across every consistent assignment.

    Enumerates all 2**n assignments (bit i set means individual i works),
    optionally restricted to exactly ``slacker_count`` slackers, and prunes
    them test by test.
    """
    if n > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"enumeration capped at n={BRUTE_FORCE_LIMIT}, got {n}")
    x = np.arange(1 << n, dtype=np.int64)
    if slacker_count is not None:
        x = x[np.bitwise_count(x) == n - slacker_count]
    for r, out in zip(transcript.rounds, transcript.outcomes):
        for (a, b), o in zip(r.pairs, out):
            if b >= n or a < 0:
                raise IndexOutOfRange(f"pair {a}-{b} outside population of {n}")
            ba, bb = (x >> a) & 1, (x >> b) & 1
            val = (ba | bb) if semantics is Semantics.OR else (ba & bb)
            x = x[val == int(o)]
        if x.size == 0:
            break
    if x.size == 0:
        raise NoConsistentAssignment("no status assignment explains the transcript")
    found = set()
    for i in range(n):
        bits = (x >> i) & 1
        if bits.all():
            found.add((i, Status.WORKER))
        elif not bits.any():
            found.add((i, Status.SLACKER))
    return found
