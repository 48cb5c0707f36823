"""Closed-form planning formulas for random-matching schedules and lower bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import round_robin_length
from .errors import DegenerateInputs
from .nonadaptive import rounds_for_confidence


@dataclass(frozen=True)
class AnalysisParams:
    n: int
    m: int
    k: int = 0
    alpha: float = 1.0

    def __post_init__(self):
        if not 0 <= self.m <= self.n:
            raise ValueError("need 0 <= m <= n")
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def eps(self) -> Fraction:
        return Fraction(self.m, self.n)

    @property
    def delta(self) -> Fraction:
        return 1 - self.eps


def coupon_packet_expected_uncollected(n: int, m: int, k: int) -> float:
    """Expected cards missing after ``k`` duplicate-free packets of ``m`` out of ``n``."""
    if not 0 <= m <= n or k < 0:
        raise ValueError("need 0 <= m <= n and k >= 0")
    return n * ((n - m) / n) ** k


def per_round_miss_probabilities(n: int, m: int) -> tuple[Fraction, Fraction]:
    """Chance that a slacker / a worker meets no slacker in one random round.

    Even ``n``: ``(n-m)/(n-1)`` and ``(n-m-1)/(n-1)``. Odd ``n`` (one
    uniform individual idles): ``(n-m+1)/n`` and ``(n-m)/n``.
    """
    if not 2 <= m <= n - 1:
        raise DegenerateInputs(f"need 2 <= m <= n-1, got m={m}, n={n}")
    if n % 2 == 0:
        return Fraction(n - m, n - 1), Fraction(n - m - 1, n - 1)
    return Fraction(n - m + 1, n), Fraction(n - m, n)


def expected_unidentified_after_k(n: int, m: int, k: int) -> float:
    """Expected number of individuals not yet paired with a slacker after ``k`` rounds."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    p_s, p_w = per_round_miss_probabilities(n, m)
    return m * float(p_s) ** k + (n - m) * float(p_w) ** k


def expected_unidentified_exact(n: int, m: int, k: int) -> Fraction:
    """Same quantity as :func:`expected_unidentified_after_k`, in exact rationals."""
    p_s, p_w = per_round_miss_probabilities(n, m)
    return m * p_s**k + (n - m) * p_w**k


def survival_probability_lower_bound(eps: float, k: float) -> tuple[float, float]:
    """``((1-eps)**k, ((1-eps)/e)**(eps*k))``; the first never falls below the second."""
    if not 0 < eps < 1 or k < 0:
        raise ValueError("need 0 < eps < 1 and k >= 0")
    exact = (1 - eps) ** k
    bound = ((1 - eps) / math.e) ** (eps * k)
    # compare logs; both sides underflow for large k
    lhs = k * math.log1p(-eps)
    rhs = eps * k * (math.log1p(-eps) - 1)
    if lhs < rhs - 1e-12 * max(1.0, abs(rhs)):
        raise ArithmeticError(f"bound violated at eps={eps}, k={k}")
    return exact, bound


def adaptive_lower_bound_probability(n: int, eps: float, rounds: int) -> float:
    """Union bound on a random slacker being exposed within ``rounds`` rounds."""
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    if rounds > 1 / (2 * eps):
        raise ValueError("bound only holds for rounds <= 1/(2 eps)")
    return rounds * (eps * n - 1) / (n / 2)


def analysis_table(n: int, m: int, ks, alpha: float = 1.0) -> list[dict]:
    """One row per ``k`` with every formula evaluated at ``(n, m, k)``."""
    eps = m / n
    rows = []
    for k in ks:
        row = {
            "n": n,
            "m": m,
            "eps": eps,
            "k": k,
            "coupon_uncollected": coupon_packet_expected_uncollected(n, m, k),
            "expected_unidentified": expected_unidentified_after_k(n, m, k),
        }
        if 0 < eps < 1:
            exact, bound = survival_probability_lower_bound(eps, k)
            row["slacker_miss_prob"] = exact
            row["slacker_miss_lower_bound"] = bound
        rows.append(row)
    return rows


def planning_summary(n: int, m: int, alpha: float = 1.0) -> dict:
    return {
        "n": n,
        "m": m,
        "alpha": alpha,
        "rounds_for_confidence": rounds_for_confidence(n, m, alpha),
        "rounds_simplified": rounds_for_confidence(n, m, alpha, simplified=True),
        "adaptive_round_budget": 2 * math.ceil(2 * n / m),
        "deterministic_cover_rounds": min(n - m + 1 + (n % 2), round_robin_length(n)),
    }
