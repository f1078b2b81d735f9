import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zrseval.featio import GoldPair, ScoredStimulus
from zrseval.fixtures import make_paired
from zrseval.probmetrics import Tally, bootstrap_ci, pair_credits, paired_accuracy


def counting_oracle(scores, gold):
    table = {s.stimulus_id: s.logprob for s in scores}
    credit = Fraction(0)
    for g in gold:
        p, n = table[g.positive_id], table[g.negative_id]
        credit += 1 if p > n else Fraction(1, 2) if p == n else 0
    return credit / len(gold)


def random_fixture(rng, n, labelled=True, ties=True):
    vals = rng.integers(-20, 0, size=2 * n) if ties else rng.normal(size=2 * n) * 10
    scores = [ScoredStimulus(f"s{i}", float(v)) for i, v in enumerate(vals)]
    gold = []
    for i in range(n):
        if labelled:
            gold.append(GoldPair(f"s{2 * i}", f"s{2 * i + 1}", f"p{rng.integers(5)}", f"c{rng.integers(2)}"))
        else:
            gold.append(GoldPair(f"s{2 * i}", f"s{2 * i + 1}"))
    return scores, gold


def test_single_win():
    res = paired_accuracy([ScoredStimulus("w", -5), ScoredStimulus("n", -9)], [GoldPair("w", "n")])
    assert res.overall == 1.0 and res.n_pairs == 1


def test_all_tied():
    scores = [ScoredStimulus(f"x{i}", -3.0) for i in range(6)]
    gold = [GoldPair("x0", "x1"), GoldPair("x2", "x3"), GoldPair("x4", "x5")]
    assert paired_accuracy(scores, gold).overall == 0.5


def test_random_scores_near_half():
    rng = np.random.default_rng(1000)
    scores, gold = random_fixture(rng, 1000, labelled=False, ties=False)
    res = paired_accuracy(scores, gold)
    assert res.tally.fraction == counting_oracle(scores, gold)
    assert abs(res.overall - 0.5) <= 0.05


@given(st.integers(0, 2**32 - 1), st.integers(1, 60))
def test_matches_counting_oracle(seed, n):
    scores, gold = random_fixture(np.random.default_rng(seed), n)
    assert paired_accuracy(scores, gold).tally.fraction == counting_oracle(scores, gold)


def test_planted_fraction():
    scores, gold = make_paired(400, 0.75, seed=3)
    assert paired_accuracy(scores, gold).overall == 0.75


def test_missing_id_reported():
    with pytest.raises(KeyError, match="ghost"):
        paired_accuracy([ScoredStimulus("w", -1)], [GoldPair("w", "ghost")])


def test_duplicate_id():
    with pytest.raises(ValueError, match="duplicate"):
        paired_accuracy([ScoredStimulus("w", -1), ScoredStimulus("w", -2), ScoredStimulus("n", -1)],
                        [GoldPair("w", "n")])


def test_no_pairs():
    with pytest.raises(ValueError):
        paired_accuracy([ScoredStimulus("w", -1)], [])


# ---------------------------------------------------------------- properties


def _transforms():
    return [lambda x: 3.0 * x + 7.0, lambda x: math.exp(x / 10.0), lambda x: x ** 3, lambda x: math.atan(x)]


@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(0, 3))
def test_monotone_invariance(seed, n, which):
    scores, gold = random_fixture(np.random.default_rng(seed), n)
    f = _transforms()[which]
    moved = [ScoredStimulus(s.stimulus_id, f(s.logprob)) for s in scores]
    assert pair_credits(scores, gold).tolist() == pair_credits(moved, gold).tolist()


@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_antisymmetry(seed, n):
    scores, gold = random_fixture(np.random.default_rng(seed), n)
    flipped = [GoldPair(g.negative_id, g.positive_id, g.paradigm, g.category) for g in gold]
    a = paired_accuracy(scores, gold).tally.fraction
    b = paired_accuracy(scores, flipped).tally.fraction
    assert a + b == 1


@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_breakdown_weighted_mean(seed, n):
    scores, gold = random_fixture(np.random.default_rng(seed), n)
    res = paired_accuracy(scores, gold)
    for tallies in (res.paradigm_tally, res.category_tally):
        total = sum(t.n_pairs * t.fraction for t in tallies.values())
        assert total / sum(t.n_pairs for t in tallies.values()) == res.tally.fraction


def test_syntactic_breakdown_labels():
    scores, gold = make_paired(680, 0.5, seed=0, n_paradigms=68, n_categories=12)
    res = paired_accuracy(scores, gold)
    assert len(res.by_paradigm) == 68 and len(res.by_category) == 12
    js = res.to_json()
    assert js["by_paradigm"]["paradigm00"]["n_pairs"] == 10


def test_tally():
    t = Tally().add(2).add(1).add(0)
    assert (t.wins, t.ties, t.n_pairs) == (1, 1, 3)
    assert t.fraction == Fraction(1, 2)


# ---------------------------------------------------------------- length normalization


def test_length_normalization_flag():
    scores = [ScoredStimulus("w", -10.0, 5), ScoredStimulus("n", -8.0, 2)]
    gold = [GoldPair("w", "n")]
    assert paired_accuracy(scores, gold).overall == 0.0
    assert paired_accuracy(scores, gold, "length").overall == 1.0
    with pytest.raises(ValueError, match="length"):
        paired_accuracy([ScoredStimulus("w", -1.0), ScoredStimulus("n", -2.0)], gold, "length")


# ---------------------------------------------------------------- bootstrap


def test_bootstrap_degenerate():
    scores, gold = make_paired(50, 1.0, seed=1)
    assert bootstrap_ci(scores, gold, 2000, seed=0) == (1.0, 1.0)
    scores, gold = make_paired(50, 0.0, seed=1)
    assert bootstrap_ci(scores, gold, 2000, seed=0) == (0.0, 0.0)


def test_bootstrap_half_and_half():
    scores, gold = make_paired(1000, 0.5, seed=2)
    low, high = bootstrap_ci(scores, gold, 10_000, seed=0)
    assert low < 0.5 < high
    assert high - low < 0.1
    # normal approximation to the binomial interval: 0.5 +- 1.96 * sqrt(0.25 / 1000)
    half = 1.959964 * math.sqrt(0.25 / 1000)
    assert abs(low - (0.5 - half)) < 0.005 and abs(high - (0.5 + half)) < 0.005


def test_bootstrap_deterministic():
    scores, gold = make_paired(200, 0.6, seed=5)
    assert bootstrap_ci(scores, gold, 3000, seed=9) == bootstrap_ci(scores, gold, 3000, seed=9)


def test_bootstrap_too_few():
    with pytest.raises(ValueError, match="at least 2"):
        bootstrap_ci([ScoredStimulus("w", -1), ScoredStimulus("n", -2)], [GoldPair("w", "n")])
