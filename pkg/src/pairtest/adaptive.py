"""Two-phase adaptive identification and its unknown-density wrapper.

Phase one splits everyone into ``floor(eps*n/2)`` bins and runs a round robin
inside every bin in parallel; any bin holding two or more slackers ends up
fully classified, which leaves at least ``ceil(eps*n/2)`` known slackers.
Phase two seeds ``ceil(eps*n/2)`` fresh bins with one known slacker each,
deals the remaining individuals so that no two phase-one bin mates share a
phase-two bin, and runs another round robin. Every member of a phase-two bin
meets its seed, so everyone is classified.

The bin layout (sizes and round counts) depends only on ``n`` and ``eps``,
never on who is a slacker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .core import Population, as_fraction, Round, Semantics, merge_parallel, round_robin_length, round_robin_schedule
from .errors import EpsilonTooSmall, LayoutInfeasible, NoSlackersDetectable, NotEnoughKnownSlackers
from .session import Report, TestSession

MAX_DEAL_ATTEMPTS = 8


@dataclass(frozen=True)
class BinLayout:
    bins: tuple[tuple[int, ...], ...]
    bin_capacity: int

    @property
    def bin_count(self) -> int:
        return len(self.bins)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(sorted((len(b) for b in self.bins), reverse=True))

    @property
    def rounds(self) -> int:
        return max((round_robin_length(len(b)) for b in self.bins), default=0)

    def bin_of(self) -> dict[int, int]:
        return {i: k for k, b in enumerate(self.bins) for i in b}

    def shape(self) -> tuple[int, tuple[int, ...], int]:
        return (self.bin_count, self.sizes, self.rounds)

    def schedule(self) -> list[Round]:
        return merge_parallel(round_robin_schedule(b) for b in self.bins if len(b) >= 2)


def capacity(eps: Fraction) -> int:
    return math.ceil(2 / eps)


def phase_one_sizes(n: int, eps) -> list[int]:
    """Bin sizes for phase one as a function of ``(n, eps)`` only."""
    eps = as_fraction(eps)
    if n < 2:
        raise ValueError("need at least 2 individuals")
    b = math.floor(eps * n / 2)
    if b < 1:
        raise EpsilonTooSmall(f"eps={eps} gives no phase-one bins for n={n}")
    c = capacity(eps)
    # floor(eps*n/2) bins of capacity ceil(2/eps) hold everyone unless eps*n
    # is odd; then keep the bin count (it carries the pigeonhole bound) and
    # let bins grow past capacity.
    k = math.ceil(n / c) if n <= b * c else b
    q, r = divmod(n, k)
    sizes = [q + 1] * r + [q] * (k - r)
    if sizes[-1] == 1 and len(sizes) > 1:
        sizes.pop()
        sizes[-1] += 1
    return sizes


def phase_two_sizes(n: int, eps) -> list[int]:
    eps = as_fraction(eps)
    k = math.ceil(eps * n / 2)
    q, r = divmod(n, k)
    return [q + 1] * r + [q] * (k - r)


def _split(perm: Sequence[int], sizes: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    out, at = [], 0
    for s in sizes:
        out.append(tuple(int(i) for i in perm[at:at + s]))
        at += s
    return tuple(out)


def phase_one(session: TestSession, eps, rng: np.random.Generator):
    """Random bins plus parallel round robin.

    Returns ``(layout, transcript_fragment, state)``.
    """
    eps = as_fraction(eps)
    n = session.n
    sizes = phase_one_sizes(n, eps)
    layout = BinLayout(_split(rng.permutation(n), sizes), capacity(eps))
    start = session.rounds_used
    for rnd in layout.schedule():
        session.run(rnd)
    return layout, session.transcript(start), session.state()


def _deal(groups, seeds_by_bin, sizes, limits, rng):
    """Randomised greedy: fullest-capacity eligible bin first, ties random."""
    nb = len(sizes)
    remaining = [s - 1 for s in sizes]  # seat 0 is the seed
    assignment = [[s] for s in seeds_by_bin]
    order = sorted(range(len(groups)), key=lambda g: (-len(groups[g][1]), rng.random()))
    for g in order:
        seeded, members = groups[g]
        used = [0] * nb
        for j in seeded:
            used[j] += 1
        noise = rng.random(nb).tolist()
        for i in rng.permutation(len(members)).tolist():
            best, key = -1, 0.0
            for j in range(nb):
                if used[j] < limits[g] and remaining[j] > 0:
                    k = remaining[j] + 0.5 * noise[j]
                    if best < 0 or k > key:
                        best, key = j, k
            if best < 0:
                return None
            assignment[best].append(members[i])
            remaining[best] -= 1
            used[best] += 1
    return assignment


def _deal_by_flow(groups, seeds_by_bin, sizes, limits, rng):
    """Exact fallback: max flow from phase-one groups to phase-two bins.

    Groups and bins are shuffled before solving so the result is not tied
    to index order.
    """
    ng, nb = len(groups), len(sizes)
    gperm, bperm = rng.permutation(ng), rng.permutation(nb)
    src, sink = ng + nb, ng + nb + 1
    cap = np.zeros((ng + nb + 2, ng + nb + 2), dtype=np.int32)
    need = 0
    for gi, g in enumerate(gperm):
        seeded, members = groups[g]
        if not members:
            continue
        cap[src, gi] = len(members)
        need += len(members)
        for bj, j in enumerate(bperm):
            cap[gi, ng + bj] = max(0, limits[g] - seeded.count(j))
    for bj, j in enumerate(bperm):
        cap[ng + bj, sink] = max(0, sizes[j] - 1)
    res = maximum_flow(csr_matrix(cap), src, sink)
    if res.flow_value < need:
        return None
    flow = res.flow.toarray()
    assignment = [[s] for s in seeds_by_bin]
    for gi, g in enumerate(gperm):
        members = groups[g][1]
        pool = [members[i] for i in rng.permutation(len(members))]
        for bj, j in enumerate(bperm):
            for _ in range(int(flow[gi, ng + bj])):
                assignment[j].append(pool.pop())
    return assignment


def phase_two(session: TestSession, eps, phase_one_layout: BinLayout, rng: np.random.Generator,
              strict: bool = False):
    """Seeded re-binning plus round robin.

    Returns ``(layout, transcript_fragment, state, relaxed)``. ``relaxed`` is
    True when phase-one bins were larger than the number of phase-two bins,
    so bin mates could not all be separated; they are then spread as evenly
    as possible (``strict=True`` raises :class:`LayoutInfeasible` instead).
    """
    eps = as_fraction(eps)
    n = session.n
    sizes = phase_two_sizes(n, eps)
    nb = len(sizes)
    known = session.known_targets()
    if len(known) < nb:
        raise NotEnoughKnownSlackers(f"phase two needs {nb} known, have {len(known)}")
    chosen = [known[i] for i in rng.choice(len(known), size=nb, replace=False)]
    seeds_by_bin = [chosen[j] for j in rng.permutation(nb)]
    seed_bin = {s: j for j, s in enumerate(seeds_by_bin)}

    where = phase_one_layout.bin_of()
    groups_map: dict[int, tuple[list[int], list[int]]] = {}
    for i in range(n):
        g = where.get(i, -1 - i)
        seeded, members = groups_map.setdefault(g, ([], []))
        if i in seed_bin:
            seeded.append(seed_bin[i])
        else:
            members.append(i)
    groups = [groups_map[g] for g in sorted(groups_map)]
    group_sizes = [len(s) + len(m) for s, m in groups]
    relaxed = max(group_sizes) > nb
    if relaxed and strict:
        raise LayoutInfeasible(f"a phase-one bin of {max(group_sizes)} cannot spread over {nb} bins")
    limits = [math.ceil(s / nb) for s in group_sizes]

    assignment = None
    for _ in range(MAX_DEAL_ATTEMPTS):
        assignment = _deal(groups, seeds_by_bin, sizes, limits, rng)
        if assignment is not None:
            break
    if assignment is None:
        assignment = _deal_by_flow(groups, seeds_by_bin, sizes, limits, rng)
    if assignment is None:
        raise LayoutInfeasible("no phase-two layout separates phase-one bin mates")

    layout = BinLayout(tuple(tuple(b) for b in assignment), capacity(eps))
    start = session.rounds_used
    for rnd in layout.schedule():
        session.run(rnd)
    return layout, session.transcript(start), session.state(), relaxed


def phase_two_needed(n: int, eps, layout: BinLayout) -> bool:
    """False when phase one classifies everyone for every admissible population.

    That holds when even the worst placement of the ``n - eps*n`` workers
    leaves two slackers in every bin. Depends on ``(n, eps)`` only.
    """
    workers = n - as_fraction(eps) * n
    smallest = min(len(b) for b in layout.bins)
    return workers > smallest - 2


def _target_density(n: int, eps, pop: Population, semantics: Semantics) -> Fraction:
    m = pop.count(semantics.target)
    if eps is None:
        return Fraction(m, n)
    eps = as_fraction(eps)
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if round(eps * n) != m:
        raise ValueError(f"population has {m} slackers, eps*n rounds to {round(eps * n)}")
    return Fraction(m, n)


def identify_all_known_eps(n: int, eps, pop: Population, rng: np.random.Generator,
                           semantics: Semantics = Semantics.OR, strict_layout: bool = False,
                           seed: int | None = None) -> Report:
    """Classify everyone in at most ``2 * ceil(2/eps)`` rounds, density known."""
    if pop.n != n:
        raise ValueError("population size does not match n")
    eps = _target_density(n, eps, pop, semantics)
    session = TestSession(pop, semantics)
    layout1, _, _ = phase_one(session, eps, rng)
    r1 = session.rounds_used
    notes = {"phase_one_shape": layout1.shape()}
    if phase_two_needed(n, eps, layout1):
        layout2, _, _, relaxed = phase_two(session, eps, layout1, rng, strict=strict_layout)
        notes["phase_two_shape"] = layout2.shape()
        notes["phase_two_relaxed"] = relaxed
        notes["layouts"] = (layout1, layout2)
    else:
        notes["layouts"] = (layout1,)
    return Report.from_session(
        "adaptive-known", session, seed=seed, epsilon_estimate_history=[eps],
        phase_rounds={"phase1": r1, "phase2": session.rounds_used - r1}, notes=notes)


def identify_all_unknown_eps(n: int, pop: Population, rng: np.random.Generator,
                             semantics: Semantics = Semantics.OR, seed: int | None = None) -> Report:
    """Halve a density guess until phase one finds enough slackers, then finish."""
    if pop.n != n:
        raise ValueError("population size does not match n")
    session = TestSession(pop, semantics)
    guess = Fraction(1, 2) if n >= 4 else Fraction(1)
    history: list[Fraction] = []
    per_iteration: list[tuple[int, int]] = []
    while guess >= Fraction(2, n):
        history.append(guess)
        start = session.rounds_used
        layout1, _, _ = phase_one(session, guess, rng)
        r1 = session.rounds_used - start
        if session.engine.target_known >= math.ceil(guess * n / 2):
            layout2, _, _, relaxed = phase_two(session, guess, layout1, rng)
            per_iteration.append((r1, session.rounds_used - start - r1))
            return Report.from_session(
                "adaptive-unknown", session, seed=seed, epsilon_estimate_history=history,
                phase_rounds={"phase1": sum(a for a, _ in per_iteration),
                              "phase2": sum(b for _, b in per_iteration)},
                notes={"iterations": per_iteration, "phase_two_relaxed": relaxed,
                       "final_estimate": guess})
        per_iteration.append((r1, 0))
        guess /= 2
    report = Report.from_session("adaptive-unknown", session, seed=seed,
                                 epsilon_estimate_history=history,
                                 notes={"iterations": per_iteration})
    raise NoSlackersDetectable(
        f"estimate fell below 2/n after {len(history)} iterations; fewer than 2 slackers", report)

