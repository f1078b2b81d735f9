import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import naive_ranks, naive_spearman, semantic_oracle
from zrseval.featio import FeatureSequence, SimilarityRecord
from zrseval.fixtures import make_semantic
from zrseval.semantic import aggregate, average_ranks, cosine_similarity, evaluate_semantic, pool, spearman_rho


def test_pool_examples():
    frames = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert pool(frames, "max").tolist() == [1.0, 2.0]
    assert pool(frames, "mean").tolist() == [0.5, 1.0]
    assert pool(frames, "last").tolist() == [0.0, 2.0]
    with pytest.raises(ValueError):
        pool(frames, "median")


def test_cosine_zero_vectors():
    assert cosine_similarity(np.zeros(3), np.zeros(3)) == 1.0
    assert cosine_similarity(np.zeros(3), np.ones(3)) == 0.0


def test_spearman_examples():
    assert spearman_rho([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]) == 0.8
    xs = [0.3, -1.0, 7.5, 2.2]
    assert spearman_rho(xs, xs) == 1.0
    assert spearman_rho(xs, [-x for x in xs]) == -1.0


def test_spearman_undefined():
    assert math.isnan(spearman_rho([1, 1, 1], [1, 2, 3]))
    with pytest.raises(ValueError):
        spearman_rho([1], [2])
    with pytest.raises(ValueError):
        spearman_rho([1, 2], [1, 2, 3])


def test_average_ranks_ties():
    assert average_ranks([10, 20, 10, 30]).tolist() == [1.5, 3.0, 1.5, 4.0]
    assert average_ranks([5, 5, 5]).tolist() == naive_ranks([5, 5, 5])


@given(st.integers(0, 2**32 - 1), st.integers(2, 40))
def test_spearman_matches_naive(seed, n):
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, 6, size=n).astype(float)
    ys = rng.normal(size=n).round(1)
    expected = naive_spearman(xs.tolist(), ys.tolist()) if len(set(xs)) > 1 and len(set(ys)) > 1 else math.nan
    got = spearman_rho(xs, ys)
    if math.isnan(expected):
        assert math.isnan(got)
    else:
        assert abs(got - expected) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(3, 30))
def test_rank_invariance(seed, n):
    rng = np.random.default_rng(seed)
    xs, ys = rng.normal(size=n), rng.integers(0, 5, size=n).astype(float)
    base = spearman_rho(xs, ys)
    if math.isnan(base):
        assert math.isnan(spearman_rho(np.exp(xs), ys))
        return
    assert spearman_rho(np.exp(xs), ys) == base
    assert spearman_rho(xs, ys ** 3 + 2) == base


# ---------------------------------------------------------------- aggregation


def test_aggregation_arithmetic():
    assert aggregate({"a": (0.10, 10), "b": (0.20, 90)}) == (15.0, 19.0)
    u, w = aggregate({"a": (0.10, 10), "b": (0.20, 90)}, scale=False)
    assert u == pytest.approx(0.15) and w == pytest.approx(0.19)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=8), st.integers(2, 50))
def test_equal_sizes_weighted_equals_unweighted(rhos, n):
    u, w = aggregate({f"s{i}": (r, n) for i, r in enumerate(rhos)})
    assert u == w


def test_removing_largest_subset():
    subs = {"a": (0.3, 5), "b": (-0.1, 40), "c": (0.6, 500)}
    rest = {k: v for k, v in subs.items() if k != "c"}
    u_rest, w_rest = aggregate(rest)
    assert w_rest == float(sum(n * Fraction(r * 100) for r, n in rest.values()) / 45)
    assert u_rest == float(sum(Fraction(r * 100) for r, _ in rest.values()) / 2)


# ---------------------------------------------------------------- end to end


def test_perfect_fixture():
    features, gold = make_semantic((12,), seed=4)
    score = evaluate_semantic(features, gold)
    assert score.unweighted == score.weighted == 100.0


@pytest.mark.parametrize("mode", ["max", "mean", "last"])
def test_matches_end_to_end_oracle(mode):
    features, gold = make_semantic((8, 15, 30), noise=0.5, seed=11)
    score = evaluate_semantic(features, gold, mode)
    rhos, u, w = semantic_oracle(features, gold, mode)
    for sid, (rho, n) in rhos.items():
        assert score.by_subset[sid][1] == n
        assert abs(score.by_subset[sid][0] - rho) <= 1e-10
    assert abs(score.unweighted - u) <= 1e-10
    assert abs(score.weighted - w) <= 1e-10


@pytest.mark.parametrize("mode", ["max", "mean", "last"])
def test_positive_scaling(mode):
    features, gold = make_semantic((10, 20), noise=0.3, seed=2)
    scaled = {k: FeatureSequence(np.asarray(v.frames, np.float64) * 3.7, v.frame_shift, k)
              for k, v in features.items()}
    for r in gold:
        a = cosine_similarity(pool(features[r.word_a], mode), pool(features[r.word_b], mode))
        b = cosine_similarity(pool(scaled[r.word_a], mode), pool(scaled[r.word_b], mode))
        assert abs(a - b) <= 1e-10


def test_exclusions():
    features, gold = make_semantic((6,), noise=0.2, seed=1)
    extra = [SimilarityRecord(gold[0].word_a, gold[0].word_b, 3.0, "tiny"),
             SimilarityRecord(gold[0].word_a, gold[1].word_b, 4.0, "flat"),
             SimilarityRecord(gold[1].word_a, gold[2].word_b, 4.0, "flat")]
    score = evaluate_semantic(features, gold + extra)
    assert set(score.by_subset) == {"subset00"}
    assert "tiny" in score.excluded and "flat" in score.excluded
    js = score.to_json()
    assert set(js["excluded_subsets"]) == {"tiny", "flat"}
    assert js["by_subset"]["subset00"]["n"] == 6


def test_missing_word():
    features, gold = make_semantic((4,), seed=1)
    with pytest.raises(KeyError, match="nowhere"):
        evaluate_semantic(features, gold + [SimilarityRecord("nowhere", gold[0].word_a, 1.0, "subset00")])


def test_all_excluded():
    features, gold = make_semantic((4,), seed=1)
    with pytest.raises(ValueError):
        evaluate_semantic(features, gold[:1])
