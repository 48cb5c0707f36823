"""Population model, the pairwise test, rounds, transcripts and schedulers.

Transcript text format (stable): one round per line, pairs written as
``a-b`` with ``a < b`` and sorted ascending, separated by single spaces.
A recorded outcome is appended to each token as ``+`` (test passed) or
``-`` (test failed), e.g. ``0-1- 2-3+``. Schedules without outcomes omit the
suffix. An empty line is a round with no tests.

Randomness: every random choice goes through a ``numpy.random.Generator``
backed by PCG64. Independent streams are derived from a root seed with
``numpy.random.SeedSequence`` (see :func:`derive_seed`).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import BinTooSmall, DuplicateIndexInRound, IndexOutOfRange

RNG_NAME = "numpy.PCG64"
RNG_STREAM_VERSION = 1


def as_fraction(x) -> Fraction:
    """Exact rational for a density given as int, Fraction, str or float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x).limit_denominator(10**6)


class Status(enum.IntEnum):
    """Ground-truth status; the integer value is the Boolean used by tests."""

    SLACKER = 0
    WORKER = 1

    @property
    def symbol(self) -> str:
        return "S" if self is Status.SLACKER else "W"

    def other(self) -> Status:
        return Status.WORKER if self is Status.SLACKER else Status.SLACKER


class Semantics(enum.Enum):
    """Boolean function computed by a pairwise test.

    Under OR a test fails only when two slackers meet. Under AND it passes
    only when two workers meet, which is the OR test with roles and outcome
    both negated.
    """

    OR = "or"
    AND = "and"

    @property
    def target(self) -> Status:
        """The status exposed when two individuals of that status meet."""
        return Status.SLACKER if self is Semantics.OR else Status.WORKER

    @property
    def revealing_outcome(self) -> bool:
        return self is Semantics.AND


def pairwise_test(x: Status, y: Status, semantics: Semantics = Semantics.OR) -> bool:
    if semantics is Semantics.OR:
        return bool(x) or bool(y)
    return bool(x) and bool(y)


class Pair(NamedTuple):
    a: int
    b: int

    @classmethod
    def of(cls, x: int, y: int) -> Pair:
        x, y = int(x), int(y)
        if x == y:
            raise DuplicateIndexInRound(f"individual {x} paired with itself")
        return cls(x, y) if x < y else cls(y, x)

    def __str__(self) -> str:
        return f"{self.a}-{self.b}"


@dataclass(frozen=True)
class Round:
    """A set of disjoint pairs, kept sorted."""

    pairs: tuple[Pair, ...] = ()

    def __post_init__(self):
        canon = sorted(p if type(p) is Pair and p.a < p.b else Pair.of(*p) for p in self.pairs)
        flat = [i for p in canon for i in p]
        if len(set(flat)) != len(flat):
            seen = set()
            for p in canon:
                if p.a in seen or p.b in seen:
                    raise DuplicateIndexInRound(f"index reused in round at pair {p}")
                seen.update(p)
        object.__setattr__(self, "pairs", tuple(canon))

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, int]]) -> Round:
        return cls(tuple(pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def indices(self) -> frozenset[int]:
        return frozenset(i for p in self.pairs for i in p)

    def to_text(self, outcomes: Sequence[bool] | None = None) -> str:
        if outcomes is None:
            return " ".join(str(p) for p in self.pairs)
        if len(outcomes) != len(self.pairs):
            raise ValueError("outcome count does not match pair count")
        return " ".join(f"{p}{'+' if o else '-'}" for p, o in zip(self.pairs, outcomes))


@dataclass(frozen=True)
class Population:
    statuses: tuple[Status, ...]

    def __post_init__(self):
        object.__setattr__(self, "statuses", tuple(Status(s) for s in self.statuses))

    @classmethod
    def from_slackers(cls, n: int, slackers: Iterable[int]) -> Population:
        st = [Status.WORKER] * n
        for i in slackers:
            st[i] = Status.SLACKER
        return cls(tuple(st))

    @classmethod
    def parse(cls, text: str) -> Population:
        """Build from a string such as ``"SSWW"``."""
        table = {"S": Status.SLACKER, "W": Status.WORKER}
        return cls(tuple(table[c] for c in text.strip().upper() if not c.isspace()))

    @classmethod
    def random(cls, n: int, slacker_count: int, rng: np.random.Generator) -> Population:
        """Place ``slacker_count`` slackers by a uniform random permutation."""
        if not 0 <= slacker_count <= n:
            raise ValueError(f"slacker count {slacker_count} outside [0, {n}]")
        perm = rng.permutation(n)
        return cls.from_slackers(n, perm[:slacker_count].tolist())

    @property
    def n(self) -> int:
        return len(self.statuses)

    def __len__(self) -> int:
        return len(self.statuses)

    def __getitem__(self, i: int) -> Status:
        return self.statuses[i]

    @cached_property
    def slacker_count(self) -> int:
        return sum(1 for s in self.statuses if s is Status.SLACKER)

    @property
    def worker_count(self) -> int:
        return self.n - self.slacker_count

    def count(self, status: Status) -> int:
        return self.slacker_count if status is Status.SLACKER else self.worker_count

    @cached_property
    def bits(self) -> tuple[bool, ...]:
        return tuple(bool(s) for s in self.statuses)

    def swapped(self) -> Population:
        """Same individuals with worker/slacker roles exchanged."""
        return Population(tuple(s.other() for s in self.statuses))

    def __str__(self) -> str:
        return "".join(s.symbol for s in self.statuses)


@dataclass(frozen=True)
class Transcript:
    rounds: tuple[Round, ...] = ()
    outcomes: tuple[tuple[bool, ...], ...] = ()

    def __post_init__(self):
        if len(self.rounds) != len(self.outcomes):
            raise ValueError("one outcome list is required per round")
        for r, out in zip(self.rounds, self.outcomes):
            if len(r) != len(out):
                raise ValueError("outcome count does not match pair count")

    @classmethod
    def build(cls, rounds: Iterable[Round], outcomes: Iterable[Sequence[bool]]) -> Transcript:
        return cls(tuple(rounds), tuple(tuple(bool(o) for o in out) for out in outcomes))

    def __len__(self) -> int:
        return len(self.rounds)

    @property
    def tests_used(self) -> int:
        return sum(len(r) for r in self.rounds)

    def extended(self, other: Transcript) -> Transcript:
        return Transcript(self.rounds + other.rounds, self.outcomes + other.outcomes)

    def prefix(self, k: int) -> Transcript:
        return Transcript(self.rounds[:k], self.outcomes[:k])

    def negated(self) -> Transcript:
        return Transcript(self.rounds, tuple(tuple(not o for o in out) for out in self.outcomes))

    def tests(self):
        """Yield ``(pair, outcome)`` over all rounds in order."""
        for r, out in zip(self.rounds, self.outcomes):
            yield from zip(r.pairs, out)

    def to_text(self) -> str:
        return "".join(r.to_text(o) + "\n" for r, o in zip(self.rounds, self.outcomes))

    @classmethod
    def from_text(cls, text: str) -> Transcript:
        rounds, outcomes = [], []
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        for line in lines:
            pairs, out = [], []
            for tok in line.split():
                m = _TOKEN.fullmatch(tok)
                if m is None or not m.group(3):
                    raise ValueError(f"bad transcript token {tok!r}")
                pairs.append((int(m.group(1)), int(m.group(2))))
                out.append(m.group(3) == "+")
            # outcomes follow the token order; Round sorts, so re-align
            order = {Pair.of(a, b): o for (a, b), o in zip(pairs, out)}
            r = Round.of(pairs)
            rounds.append(r)
            outcomes.append(tuple(order[p] for p in r.pairs))
        return cls(tuple(rounds), tuple(outcomes))


_TOKEN = re.compile(r"(\d+)-(\d+)([+-]?)")


def schedule_to_text(rounds: Iterable[Round]) -> str:
    return "".join(r.to_text() + "\n" for r in rounds)


def schedule_from_text(text: str) -> list[Round]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    out = []
    for line in lines:
        pairs = []
        for tok in line.split():
            m = _TOKEN.fullmatch(tok)
            if m is None:
                raise ValueError(f"bad schedule token {tok!r}")
            pairs.append((int(m.group(1)), int(m.group(2))))
        out.append(Round.of(pairs))
    return out


def execute_round(pop: Population, rnd: Round, semantics: Semantics = Semantics.OR) -> list[bool]:
    """Run every test of ``rnd`` against the hidden statuses in ``pop``."""
    n = pop.n
    bits = pop.bits
    seen = set()
    out = []
    for a, b in rnd.pairs:
        if a < 0 or b >= n:
            raise IndexOutOfRange(f"pair {a}-{b} outside population of {n}")
        if a in seen or b in seen:
            raise DuplicateIndexInRound(f"index reused in round at pair {a}-{b}")
        seen.add(a)
        seen.add(b)
        if semantics is Semantics.OR:
            out.append(bits[a] or bits[b])
        else:
            out.append(bits[a] and bits[b])
    return out


def round_robin_schedule(members: Sequence[int]) -> list[Round]:
    """Circle-method round robin over ``members``.

    Returns ``s - 1`` rounds for an even bin of size ``s`` and ``s`` rounds
    for an odd one (one member sits out each round). Every pair of members
    meets exactly once.
    """
    members = list(members)
    s = len(members)
    if s < 2:
        raise BinTooSmall(f"round robin needs at least 2 members, got {s}")
    if len(set(members)) != s:
        raise DuplicateIndexInRound("bin members must be distinct")
    slots: list[int | None] = members + ([None] if s % 2 else [])
    fixed, rest = slots[0], slots[1:]
    half = len(rest) // 2
    rounds = []
    for r in range(len(rest)):
        q = rest[r:] + rest[:r]
        cand = [(fixed, q[0])] + [(q[i], q[-i]) for i in range(1, half + 1)]
        rounds.append(Round.of((a, b) for a, b in cand if a is not None and b is not None))
    return rounds


def round_robin_length(size: int) -> int:
    """Number of rounds :func:`round_robin_schedule` emits for a bin of ``size``."""
    if size < 2:
        return 0
    return size - 1 if size % 2 == 0 else size


def merge_parallel(fragments: Iterable[Sequence[Round]]) -> list[Round]:
    """Zip per-bin round lists into shared rounds (bins must be disjoint)."""
    fragments = [list(f) for f in fragments]
    depth = max((len(f) for f in fragments), default=0)
    merged = []
    for i in range(depth):
        pairs = []
        for f in fragments:
            if i < len(f):
                pairs.extend(f[i].pairs)
        merged.append(Round(tuple(pairs)))
    return merged


def random_perfect_matching(indices: Sequence[int], rng: np.random.Generator) -> Round:
    """Uniform random matching; with an odd count one uniform member is idle."""
    idx = list(indices)
    if len(idx) < 2:
        raise ValueError("a matching needs at least 2 individuals")
    perm = rng.permutation(len(idx))
    pairs = [(idx[perm[i]], idx[perm[i + 1]]) for i in range(0, len(idx) - 1, 2)]
    return Round.of(pairs)


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(root_seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for the stream identified by ``keys``."""
    ss = np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])

