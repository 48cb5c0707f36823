"""A live testing session: hidden population, growing transcript, knowledge."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .core import Population, Round, Semantics, Transcript, execute_round
from .inference import InferenceEngine, KnowledgeState, Label


class TestSession:
    """Runs rounds against a population and keeps inference up to date.

    Algorithms see outcomes only through :meth:`run`; the population itself
    stays hidden behind the session.
    """

    __test__ = False  # not a pytest class

    def __init__(self, pop: Population, semantics: Semantics = Semantics.OR):
        self._pop = pop
        self.n = pop.n
        self.semantics = semantics
        self.engine = InferenceEngine(pop.n, semantics)
        self._rounds: list[Round] = []
        self._outcomes: list[tuple[bool, ...]] = []
        self.newly_identified: list[int] = []
        self.known_slackers: list[int] = []
        self.known_workers: list[int] = []

    def run(self, rnd: Round) -> list[bool]:
        out = execute_round(self._pop, rnd, self.semantics)
        self._rounds.append(rnd)
        self._outcomes.append(tuple(out))
        self.newly_identified.append(self.engine.add_round(rnd.pairs, out))
        self.known_slackers.append(self.engine.known_slackers)
        self.known_workers.append(self.engine.known_workers)
        return out

    @property
    def rounds_used(self) -> int:
        return len(self._rounds)

    @property
    def tests_used(self) -> int:
        return sum(len(r) for r in self._rounds)

    def transcript(self, start: int = 0) -> Transcript:
        return Transcript(tuple(self._rounds[start:]), tuple(self._outcomes[start:]))

    def state(self) -> KnowledgeState:
        return self.engine.state()

    # target = the status revealed by pairing two of them (slackers under OR)
    def known_targets(self) -> list[int]:
        return [i for i in range(self.n) if self.engine.is_target(i)]

    def known_others(self) -> list[int]:
        return [i for i in range(self.n) if self.engine.is_other(i)]

    def unknowns(self) -> list[int]:
        return [i for i, lab in enumerate(self.engine.labels) if lab is Label.UNKNOWN]


@dataclass
class Report:
    """Outcome of one algorithm run."""

    algorithm: str
    n: int
    transcript: Transcript
    state: KnowledgeState
    seed: int | None = None
    semantics: Semantics = Semantics.OR
    newly_identified: list[int] = field(default_factory=list)
    known_slackers_by_round: list[int] = field(default_factory=list)
    known_workers_by_round: list[int] = field(default_factory=list)
    phase_rounds: dict[str, int] = field(default_factory=dict)
    epsilon_estimate_history: list[Any] = field(default_factory=list)
    notes: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_session(cls, algorithm: str, session: TestSession, **kw) -> Report:
        return cls(
            algorithm=algorithm,
            n=session.n,
            transcript=session.transcript(),
            state=session.state(),
            semantics=session.semantics,
            newly_identified=list(session.newly_identified),
            known_slackers_by_round=list(session.known_slackers),
            known_workers_by_round=list(session.known_workers),
            **kw,
        )

    @property
    def rounds_used(self) -> int:
        return len(self.transcript)

    @property
    def tests_used(self) -> int:
        return self.transcript.tests_used

    @property
    def fully_identified(self) -> bool:
        return self.state.complete

    def matches(self, pop: Population) -> bool:
        """Every known label agrees with the ground truth."""
        return all(lab.status is None or lab.status is s for lab, s in zip(self.state.labels, pop.statuses))

    def to_dict(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "n": self.n,
            "semantics": self.semantics.value,
            "seed": self.seed,
            "rounds_used": self.rounds_used,
            "tests_used": self.tests_used,
            "fully_identified": self.fully_identified,
            "known_slackers": self.state.known_slacker_count,
            "known_workers": self.state.known_worker_count,
            "newly_identified": self.newly_identified,
            "phase_rounds": self.phase_rounds,
            "epsilon_estimate_history": [str(e) for e in self.epsilon_estimate_history],
            "classification": str(self.state),
            "notes": {k: (str(v) if not isinstance(v, (int, float, bool, list, dict)) else v)
                      for k, v in self.notes.items()},
        }
