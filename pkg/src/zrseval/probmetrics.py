"""Paired-accuracy metrics over pseudo-log-probabilities.

The same computation serves the lexical task (word vs matched nonword) and
the syntactic task (grammatical vs ungrammatical sentence).  A pair earns 1
when the positive stimulus scores higher, 0.5 on a tie, 0 otherwise.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .featio import GoldPair, ScoredStimulus

NORMALIZATIONS = ("none", "length")


@dataclass(frozen=True)
class Tally:
    """Exact credit for a group of pairs: wins, ties, total."""

    wins: int = 0
    ties: int = 0
    n_pairs: int = 0

    @property
    def fraction(self) -> Fraction:
        return Fraction(2 * self.wins + self.ties, 2 * self.n_pairs)

    @property
    def accuracy(self) -> float:
        return float(self.fraction)

    def add(self, credit2: int) -> "Tally":
        return Tally(self.wins + (credit2 == 2), self.ties + (credit2 == 1), self.n_pairs + 1)


@dataclass
class PairedAccuracy:
    overall: float
    n_pairs: int
    by_paradigm: dict[str, float] = field(default_factory=dict)
    by_category: dict[str, float] = field(default_factory=dict)
    tally: Tally = field(default_factory=Tally)
    paradigm_tally: dict[str, Tally] = field(default_factory=dict)
    category_tally: dict[str, Tally] = field(default_factory=dict)
    normalization: str = "none"

    def to_json(self) -> dict:
        return {
            "accuracy": self.overall,
            "n_pairs": self.n_pairs,
            "wins": self.tally.wins,
            "ties": self.tally.ties,
            "tie_credit": 0.5,
            "normalization": self.normalization,
            "by_paradigm": {k: {"accuracy": v, "n_pairs": self.paradigm_tally[k].n_pairs}
                            for k, v in self.by_paradigm.items()},
            "by_category": {k: {"accuracy": v, "n_pairs": self.category_tally[k].n_pairs}
                            for k, v in self.by_category.items()},
        }


def _score_table(scores: Sequence[ScoredStimulus], normalization: str) -> dict[str, float]:
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    table = {}
    for s in scores:
        if s.stimulus_id in table:
            raise ValueError(f"duplicate stimulus id {s.stimulus_id!r}")
        if normalization == "length":
            if s.length is None:
                raise ValueError(f"{s.stimulus_id}: length normalization needs a length column")
            table[s.stimulus_id] = s.logprob / s.length
        else:
            table[s.stimulus_id] = s.logprob
    return table


def pair_credits(scores: Sequence[ScoredStimulus], gold: Sequence[GoldPair],
                 normalization: str = "none") -> np.ndarray:
    """Per-pair credit doubled to an integer: 2 win, 1 tie, 0 loss."""
    table = _score_table(scores, normalization)
    missing = sorted({i for g in gold for i in (g.positive_id, g.negative_id)} - set(table))
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise KeyError(f"{len(missing)} gold stimulus id(s) have no score: {shown}")
    pos = np.array([table[g.positive_id] for g in gold])
    neg = np.array([table[g.negative_id] for g in gold])
    return (pos > neg).astype(np.int64) * 2 + (pos == neg)


def paired_accuracy(scores: Sequence[ScoredStimulus], gold: Sequence[GoldPair],
                    normalization: str = "none") -> PairedAccuracy:
    if not gold:
        raise ValueError("no gold pairs")
    credits = pair_credits(scores, gold, normalization)
    total = Tally(int((credits == 2).sum()), int((credits == 1).sum()), len(credits))
    paradigms: dict[str, Tally] = defaultdict(Tally)
    categories: dict[str, Tally] = defaultdict(Tally)
    for g, c in zip(gold, credits):
        if g.paradigm is not None:
            paradigms[g.paradigm] = paradigms[g.paradigm].add(int(c))
        if g.category is not None:
            categories[g.category] = categories[g.category].add(int(c))
    paradigms = dict(sorted(paradigms.items()))
    categories = dict(sorted(categories.items()))
    return PairedAccuracy(
        total.accuracy, total.n_pairs,
        {k: t.accuracy for k, t in paradigms.items()},
        {k: t.accuracy for k, t in categories.items()},
        total, paradigms, categories, normalization,
    )


def bootstrap_ci(scores: Sequence[ScoredStimulus], gold: Sequence[GoldPair],
                 n_resamples: int = 10_000, seed: int = 0, level: float = 0.95,
                 normalization: str = "none") -> tuple[float, float]:
    """Percentile interval of the accuracy under resampling of pairs."""
    credits = pair_credits(scores, gold, normalization) / 2.0
    n = len(credits)
    if n < 2:
        raise ValueError("bootstrap needs at least 2 pairs")
    rng = np.random.default_rng(seed)
    means = np.empty(n_resamples)
    step = max(1, 2_000_000 // n)
    for start in range(0, n_resamples, step):
        stop = min(n_resamples, start + step)
        idx = rng.integers(0, n, size=(stop - start, n))
        means[start:stop] = credits[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    low, high = np.percentile(means, [100 * alpha, 100 * (1 - alpha)])
    return float(low), float(high)
