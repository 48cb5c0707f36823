import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest

from pairtest.analysis import (
    AnalysisParams,
    adaptive_lower_bound_probability,
    analysis_table,
    coupon_packet_expected_uncollected,
    expected_unidentified_after_k,
    expected_unidentified_exact,
    per_round_miss_probabilities,
    planning_summary,
    survival_probability_lower_bound,
)
from pairtest.errors import DegenerateInputs


def all_perfect_matchings(items):
    items = list(items)
    if not items:
        yield []
        return
    a = items[0]
    for i in range(1, len(items)):
        rest = items[1:i] + items[i + 1:]
        for m in all_perfect_matchings(rest):
            yield [(a, items[i])] + m


def simulate_unpaired(n, m, ks, trials, rng):
    """Mean and SE of the count never paired with a slacker after each k."""
    is_slacker = np.zeros(n, dtype=bool)
    is_slacker[:m] = True
    met = np.zeros((trials, n), dtype=bool)
    out = {}
    rows = np.arange(trials)[:, None]
    for k in range(1, max(ks) + 1):
        perm = rng.permuted(np.tile(np.arange(n), (trials, 1)), axis=1)
        partner = np.full((trials, n), -1)
        half = n // 2
        a, b = perm[:, 0:2 * half:2], perm[:, 1:2 * half:2]
        partner[rows, a] = b
        partner[rows, b] = a
        valid = partner >= 0
        met |= valid & is_slacker[np.where(valid, partner, 0)]
        if k in ks:
            left = (~met).sum(axis=1)
            out[k] = (left.mean(), left.std(ddof=1) / math.sqrt(trials))
    return out


def test_params_validation():
    p = AnalysisParams(10, 3, 2)
    assert p.eps == F(3, 10) and p.delta == F(7, 10)
    for bad in [dict(n=3, m=4), dict(n=3, m=1, k=-1), dict(n=3, m=1, alpha=0)]:
        with pytest.raises(ValueError):
            AnalysisParams(**bad)


def test_coupon_examples():
    assert coupon_packet_expected_uncollected(100, 50, 2) == 25.0
    assert coupon_packet_expected_uncollected(37, 5, 0) == 37
    assert coupon_packet_expected_uncollected(60, 15, 10) == pytest.approx(60 * 0.75**10)
    assert coupon_packet_expected_uncollected(60, 15, 10) == pytest.approx(3.37881, abs=1e-5)


def test_coupon_packet_monte_carlo():
    rng = np.random.default_rng(3)
    trials, n, m, k = 20000, 60, 15, 10
    got = np.zeros((trials, n), dtype=bool)
    for _ in range(k):
        packets = np.argsort(rng.random((trials, n)), axis=1)[:, :m]
        got[np.arange(trials)[:, None], packets] = True
    left = (~got).sum(axis=1)
    se = left.std(ddof=1) / math.sqrt(trials)
    assert abs(left.mean() - coupon_packet_expected_uncollected(n, m, k)) < 3 * se


def test_expected_unidentified_examples():
    assert expected_unidentified_after_k(4, 2, 1) == pytest.approx(2.0)
    assert expected_unidentified_exact(4, 2, 1) == 2
    assert expected_unidentified_after_k(30, 7, 0) == 30
    direct = 20 * (80 / 99) ** 39 + 80 * (79 / 99) ** 39
    assert expected_unidentified_after_k(100, 20, 39) == pytest.approx(direct, rel=1e-12)
    assert expected_unidentified_after_k(100, 20, 39) == pytest.approx(0.01696, abs=1e-5)


def test_expected_unidentified_domain():
    with pytest.raises(DegenerateInputs):
        expected_unidentified_after_k(10, 1, 2)
    with pytest.raises(DegenerateInputs):
        expected_unidentified_after_k(10, 10, 2)


@pytest.mark.parametrize("n", [4, 6])
def test_miss_probabilities_exact_by_enumeration(n):
    for m in range(2, n):
        matchings = list(all_perfect_matchings(range(n)))
        slackers = set(range(m))
        s_miss = w_miss = 0
        for mt in matchings:
            partner = {a: b for a, b in mt} | {b: a for a, b in mt}
            s_miss += partner[0] not in slackers
            w_miss += partner[n - 1] not in slackers
        p_s, p_w = per_round_miss_probabilities(n, m)
        assert F(s_miss, len(matchings)) == p_s == F(n - m, n - 1)
        assert F(w_miss, len(matchings)) == p_w == F(n - m - 1, n - 1)


def test_odd_n_miss_probabilities():
    assert per_round_miss_probabilities(7, 3) == (F(5, 7), F(4, 7))


def test_slacker_miss_frequency_n20():
    rng = np.random.default_rng(5)
    n, m = 20, 6
    res = simulate_unpaired(n, m, {1}, 20000, rng)
    # slacker 0 analysed alone: rerun and look at one column
    perm = rng.permuted(np.tile(np.arange(n), (20000, 1)), axis=1)
    pos = np.argmax(perm == 0, axis=1)
    mate = perm[np.arange(20000), pos ^ 1]
    freq = np.mean(mate >= m)
    p = float(F(n - m, n - 1))
    assert abs(freq - p) < 4 * math.sqrt(p * (1 - p) / 20000)
    # with n even exactly m individuals face a slacker each round
    mean, se = res[1]
    assert mean == expected_unidentified_after_k(n, m, 1) == n - m and se == 0


@pytest.mark.parametrize("n", [20, 50, 100])
@pytest.mark.parametrize("frac", [F(1, 10), F(1, 4), F(1, 2)])
def test_formula_matches_simulation(n, frac):
    m = round(frac * n)
    ks = (1, 5, 10, 20)
    rng = np.random.default_rng(n * 1000 + frac.denominator)
    res = simulate_unpaired(n, m, set(ks), 10_000, rng)
    for k in ks:
        mean, se = res[k]
        want = expected_unidentified_after_k(n, m, k)
        # rare-event cells can show zero spread; floor SE at the Poisson level
        se = max(se, math.sqrt(want / 10_000))
        assert abs(mean - want) <= 3 * se, (n, m, k, mean, want, se)


def test_monotone_in_k_and_m():
    for n in (20, 21, 50):
        for m in range(2, n - 1):
            vals = [expected_unidentified_exact(n, m, k) for k in range(12)]
            assert all(a >= b for a, b in zip(vals, vals[1:]))
            for k in range(1, 6):
                assert expected_unidentified_exact(n, m, k) >= expected_unidentified_exact(n, m + 1, k)


def test_coupon_gap_at_one_round():
    for n, m in [(100, 5), (200, 10), (1000, 20)]:
        a = coupon_packet_expected_uncollected(n, m, 1)
        b = expected_unidentified_after_k(n, m, 1)
        assert abs(a - b) / a <= m / (n - 1)


def test_survival_bound_examples():
    assert survival_probability_lower_bound(0.5, 0) == (1.0, 1.0)
    exact, bound = survival_probability_lower_bound(0.5, 10)
    assert exact == pytest.approx(9.765625e-4)
    assert bound == pytest.approx((0.5 / math.e) ** 5)
    assert bound == pytest.approx(2.1056e-4, rel=1e-4)


def test_survival_bound_grid():
    for e10, k in itertools.product(range(1, 10), range(1, 101)):
        exact, bound = survival_probability_lower_bound(e10 / 10, k)
        assert exact >= bound or math.isclose(exact, bound, rel_tol=1e-12)


def test_survival_bound_domain():
    with pytest.raises(ValueError):
        survival_probability_lower_bound(1.0, 3)


def test_adaptive_lower_bound_examples():
    assert adaptive_lower_bound_probability(100, 0.2, 1) == pytest.approx(0.38)
    assert adaptive_lower_bound_probability(1000, 0.1, 2) == pytest.approx(0.396)
    assert adaptive_lower_bound_probability(50, 0.3, 0) == 0
    with pytest.raises(ValueError):
        adaptive_lower_bound_probability(100, 0.2, 3)


def test_tables():
    rows = analysis_table(100, 20, [1, 39])
    assert [r["k"] for r in rows] == [1, 39]
    assert rows[1]["expected_unidentified"] == pytest.approx(0.01696, abs=1e-5)
    s = planning_summary(100, 20)
    assert s["rounds_for_confidence"] == 39 and s["rounds_simplified"] == 42
    assert s["adaptive_round_budget"] == 20
