"""Monte Carlo driver: seeded trials, grid experiments and CSV export.

Every trial draws its own generator from
``SeedSequence(root_seed, spawn_key=(algorithm, n, eps_num, eps_den, trial))``
so a trial's result does not depend on which other trials ran, in what
order, or in which process.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .adaptive import identify_all_known_eps, identify_all_unknown_eps
from .bounded import identify_bounded
from .core import (
    Population,
    Round,
    Semantics,
    Transcript,
    as_fraction,
    derive_seed,
    make_rng,
    random_perfect_matching,
)
from .errors import PairTestError
from .inference import KnowledgeState, brute_force_identified, propagate
from .nonadaptive import deterministic_cover_schedule, rounds_for_confidence, run_schedule
from .session import Report, TestSession

CSV_HEADER = ("algorithm", "n", "eps", "fraction", "mean_tests", "stderr", "trials", "seed")
DEFAULT_FRACTIONS = (0.5, 0.8, 0.9, 1.0)
MATCHING_ROUND_CAP = 100_000


class Algorithm(enum.Enum):
    ADAPTIVE_KNOWN = "adaptive-known"
    ADAPTIVE_UNKNOWN = "adaptive-unknown"
    DETERMINISTIC_COVER = "cover"
    RANDOM_MATCHING = "random-matching"
    BOUNDED_ROUNDS = "bounded"

    @property
    def stream_id(self) -> int:
        return list(Algorithm).index(self)


def _check_eps(alg: Algorithm, eps: Fraction) -> None:
    if not 0 < eps <= 1:
        raise ValueError(f"eps={eps} outside (0, 1]")
    if alg is Algorithm.DETERMINISTIC_COVER and eps >= 1:
        raise ValueError("the cover schedule needs eps < 1")
    if alg is Algorithm.RANDOM_MATCHING and eps >= 1:
        raise ValueError("random matching analysis needs eps < 1")
    if alg is Algorithm.BOUNDED_ROUNDS and eps < Fraction(1, 2):
        raise ValueError("bounded-round schemes need eps >= 1/2")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: Algorithm
    n_values: tuple[int, ...] = ()
    eps_values: tuple[Fraction, ...] = ()
    trials: int = 100
    alpha: float = 1.0
    root_seed: int = 0
    target_fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    rounds: int | None = None
    semantics: Semantics = Semantics.OR
    until_complete: bool = False

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "eps_values", tuple(as_fraction(e) for e in self.eps_values))
        object.__setattr__(self, "target_fractions", tuple(sorted(float(f) for f in self.target_fractions)))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not (0 <= self.root_seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if any(not 0 < f <= 1 for f in self.target_fractions):
            raise ValueError("target fractions must lie in (0, 1]")
        for e in self.eps_values:
            _check_eps(self.algorithm, e)


@dataclass
class TrialMetrics:
    n: int
    eps: Fraction
    trial_index: int
    seed: int
    tests_to_fraction: dict[float, int | None] = field(default_factory=dict)
    rounds_used: int = 0
    tests_used: int = 0
    fully_identified: bool = False
    correct: bool = True
    unidentified: int = 0
    error: str | None = None


def trial_seed(config: ExperimentConfig, n: int, eps, trial_index: int) -> int:
    eps = as_fraction(eps)
    return derive_seed(config.root_seed, config.algorithm.stream_id, n,
                       eps.numerator, eps.denominator, trial_index)


def _random_matching_report(n: int, k: int, pop: Population, rng, semantics, seed,
                            until_complete: bool = False) -> Report:
    """``k`` fresh matchings, or as many as it takes when ``until_complete``."""
    session = TestSession(pop, semantics)
    cap = MATCHING_ROUND_CAP if until_complete else k
    while session.rounds_used < cap and not (until_complete and session.engine.complete):
        session.run(random_perfect_matching(range(n), rng))
    return Report.from_session("random-matching", session, seed=seed, notes={"k": k})


def run_algorithm(config: ExperimentConfig, n: int, eps, pop: Population,
                  rng: np.random.Generator, seed: int | None = None) -> Report:
    eps = as_fraction(eps)
    alg, sem = config.algorithm, config.semantics
    m = pop.count(sem.target)
    if alg is Algorithm.ADAPTIVE_KNOWN:
        return identify_all_known_eps(n, Fraction(m, n), pop, rng, semantics=sem, seed=seed)
    if alg is Algorithm.ADAPTIVE_UNKNOWN:
        return identify_all_unknown_eps(n, pop, rng, semantics=sem, seed=seed)
    if alg is Algorithm.DETERMINISTIC_COVER:
        return run_schedule(deterministic_cover_schedule(n, Fraction(m, n)), pop, sem, seed=seed)
    if alg is Algorithm.RANDOM_MATCHING:
        k = config.rounds
        if k is None and not config.until_complete:
            k = rounds_for_confidence(n, m, config.alpha)
        return _random_matching_report(n, k, pop, rng, sem, seed, config.until_complete)
    return identify_bounded(n, Fraction(n - m, n), pop, rng, semantics=sem, seed=seed)


def fraction_milestones(report: Report, m: int, fractions: Sequence[float]) -> dict[float, int | None]:
    """Cumulative tests at the end of the first round reaching each fraction of slackers."""
    counts = report.known_slackers_by_round
    if report.semantics is Semantics.AND:
        counts = report.known_workers_by_round
    cumulative = np.cumsum([len(r) for r in report.transcript.rounds]).tolist()
    out: dict[float, int | None] = {}
    for f in fractions:
        need = math.ceil(f * m - 1e-9)
        hit = None
        if need <= 0:
            hit = 0
        else:
            for c, t in zip(counts, cumulative):
                if c >= need:
                    hit = t
                    break
        out[f] = hit
    return out


def run_trial(config: ExperimentConfig, n: int, eps, trial_index: int) -> TrialMetrics:
    eps = as_fraction(eps)
    seed = trial_seed(config, n, eps, trial_index)
    rng = make_rng(seed)
    m = round(eps * n)
    metrics = TrialMetrics(n=n, eps=eps, trial_index=trial_index, seed=seed)
    pop = Population.random(n, m, rng)
    if config.semantics is Semantics.AND:
        pop = pop.swapped()
    try:
        report = run_algorithm(config, n, eps, pop, rng, seed)
    except PairTestError as exc:
        metrics.error = f"{type(exc).__name__}: {exc}"
        return metrics
    metrics.tests_to_fraction = fraction_milestones(report, m, config.target_fractions)
    metrics.rounds_used = report.rounds_used
    metrics.tests_used = report.tests_used
    metrics.fully_identified = report.fully_identified
    metrics.correct = report.matches(pop)
    metrics.unidentified = report.state.unknown_count
    return metrics


def _trial_task(args):
    return run_trial(*args)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[dict]
    trials: list[TrialMetrics]

    @property
    def errors(self) -> list[TrialMetrics]:
        return [t for t in self.trials if t.error is not None]

    @property
    def partial(self) -> bool:
        return bool(self.errors)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r["algorithm"], r["n"], _fmt_eps(r["eps"]), _fmt(r["fraction"]),
                        _fmt(r["mean_tests"]), _fmt(r["stderr"]), r["trials"], r["seed"]])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{**r, "eps": _fmt_eps(r["eps"])} for r in self.rows]
        return json.dumps({"rows": rows, "partial": self.partial,
                           "errors": [{"n": t.n, "eps": _fmt_eps(t.eps), "trial": t.trial_index,
                                       "error": t.error} for t in self.errors]},
                          indent=2, sort_keys=True) + "\n"

    def to_plot_data(self) -> str:
        """Whitespace columns, one gnuplot data block per (n, eps)."""
        lines = []
        key = None
        for r in self.rows:
            if (r["n"], r["eps"]) != key:
                if key is not None:
                    lines += ["", ""]
                key = (r["n"], r["eps"])
                lines.append(f"# algorithm={r['algorithm']} n={r['n']} eps={_fmt_eps(r['eps'])}")
                lines.append("# fraction mean_tests stderr trials")
            lines.append(f"{_fmt(r['fraction'])} {_fmt(r['mean_tests'])} {_fmt(r['stderr'])} {r['trials']}")
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    if isinstance(x, float):
        return f"{x:.6f}".rstrip("0").rstrip(".") if x != int(x) else f"{x:.1f}"
    return str(x)


def _fmt_eps(e) -> str:
    return f"{float(e):.6g}"


def aggregate(config: ExperimentConfig, trials: Sequence[TrialMetrics]) -> list[dict]:
    rows = []
    for n in config.n_values:
        for eps in config.eps_values:
            cell = [t for t in trials if t.n == n and t.eps == eps and t.error is None]
            for f in config.target_fractions:
                vals = [t.tests_to_fraction[f] for t in cell if t.tests_to_fraction.get(f) is not None]
                k = len(vals)
                mean = float(np.mean(vals)) if k else float("nan")
                se = float(np.std(vals, ddof=1) / math.sqrt(k)) if k > 1 else 0.0 if k else float("nan")
                rows.append({"algorithm": config.algorithm.value, "n": n, "eps": eps, "fraction": f,
                             "mean_tests": mean, "stderr": se, "trials": k, "seed": config.root_seed})
    return rows


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    tasks = [(config, n, eps, t) for n in config.n_values for eps in config.eps_values
             for t in range(config.trials)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trials = list(pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        trials = [_trial_task(t) for t in tasks]
    return ExperimentResult(config, aggregate(config, trials), trials)


def random_partial_round(n: int, rng: np.random.Generator) -> Round:
    """A random matching with a random subset of its pairs kept."""
    full = random_perfect_matching(range(n), rng)
    keep = rng.random(len(full)) < 0.7
    return Round(tuple(p for p, k in zip(full.pairs, keep) if k))


def verify_inference(n_max: int, cases: int, rng: np.random.Generator, max_rounds: int = 3,
                     semantics: Semantics = Semantics.OR) -> list[dict]:
    """Compare rule inference against brute force on random small instances.

    Returns the mismatching cases (empty when everything agrees).
    """
    bad = []
    for case in range(cases):
        n = int(rng.integers(2, n_max + 1))
        m = int(rng.integers(0, n + 1))
        pop = Population.random(n, m, rng)
        k = int(rng.integers(1, max_rounds + 1))
        session = TestSession(pop, semantics)
        for _ in range(k):
            session.run(random_partial_round(n, rng))
        t: Transcript = session.transcript()
        for use_count in (False, True):
            count = pop.slacker_count if use_count else None
            got = propagate(KnowledgeState.unknown(n), t, use_count, count, semantics).identified()
            want = brute_force_identified(t, n, count, semantics)
            if got != want:
                bad.append({"case": case, "population": str(pop), "transcript": t.to_text(),
                            "count_constraint": use_count, "rules": sorted(got), "oracle": sorted(want)})
    return bad
