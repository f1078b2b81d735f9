"""Semantic similarity metric: pooled word representations vs human judgements."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .featio import FeatureSequence, SimilarityRecord

POOLING = ("max", "mean", "last")


def pool(seq: FeatureSequence | np.ndarray, mode: str = "max") -> np.ndarray:
    frames = seq.frames if isinstance(seq, FeatureSequence) else np.atleast_2d(seq)
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[0] == 0:
        raise ValueError("cannot pool an empty sequence")
    if mode == "max":
        return frames.max(axis=0)
    if mode == "mean":
        return frames.mean(axis=0)
    if mode == "last":
        return frames[-1].copy()
    raise ValueError(f"unknown pooling mode {mode!r}")


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = float(np.dot(u, u)), float(np.dot(v, v))
    if nu == 0.0 or nv == 0.0:
        return 1.0 if nu == nv else 0.0
    return float(np.dot(u, v)) / math.sqrt(nu * nv)


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    ranks = np.empty(len(values))
    start = 0
    n = len(values)
    while start < n:
        stop = start + 1
        while stop < n and sorted_vals[stop] == sorted_vals[start]:
            stop += 1
        ranks[order[start:stop]] = (start + 1 + stop) / 2.0
        start = stop
    return ranks


def spearman_rho(xs, ys) -> float:
    """Tie-corrected Spearman correlation; NaN when either side is constant."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("spearman_rho needs two 1-D lists of equal length")
    if len(xs) < 2:
        raise ValueError("spearman_rho needs at least 2 observations")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    sxx, syy = float(rx @ rx), float(ry @ ry)
    if sxx == 0.0 or syy == 0.0:
        return math.nan
    rho = float(rx @ ry) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


@dataclass
class SemanticScore:
    by_subset: dict[str, tuple[float, int]]
    unweighted: float
    weighted: float
    scale: bool = True
    pooling: str = "max"
    excluded: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        factor = 100.0 if self.scale else 1.0
        return {
            "metric": "semantic",
            "pooling": self.pooling,
            "similarity": "cosine similarity of pooled vectors (higher = more similar)",
            "scale": "rho x 100" if self.scale else "rho",
            "unweighted": self.unweighted,
            "weighted": self.weighted,
            "by_subset": {k: {"rho": rho, "rho_scaled": rho * factor, "n": n}
                          for k, (rho, n) in self.by_subset.items()},
            "excluded_subsets": self.excluded,
        }


def aggregate(by_subset: Mapping[str, tuple[float, int]], scale: bool = True) -> tuple[float, float]:
    """(unweighted mean, size-weighted mean) of per-subset rho, x100 when ``scale``."""
    if not by_subset:
        raise ValueError("no subset to aggregate")
    factor = 100.0 if scale else 1.0
    # scale first so round inputs stay round, then average in exact rationals
    scaled = [(Fraction(rho * factor), n) for rho, n in by_subset.values()]
    unweighted = sum(r for r, _ in scaled) / len(scaled)
    weighted = sum(n * r for r, n in scaled) / sum(n for _, n in scaled)
    return float(unweighted), float(weighted)


def evaluate_semantic(features: Mapping[str, FeatureSequence], gold: Sequence[SimilarityRecord],
                      mode: str = "max", distance: str = "cosine", scale: bool = True) -> SemanticScore:
    if distance != "cosine":
        raise ValueError(f"unsupported distance {distance!r}")
    missing = sorted({w for r in gold for w in (r.word_a, r.word_b)} - set(features))
    if missing:
        raise KeyError(f"no features for word(s): {', '.join(missing[:10])}")
    pooled = {}

    def vec(word):
        if word not in pooled:
            pooled[word] = pool(features[word], mode)
        return pooled[word]

    subsets = defaultdict(list)
    for r in gold:
        subsets[r.subset_id].append(r)
    by_subset = {}
    excluded = {}
    for sid in sorted(subsets):
        recs = subsets[sid]
        if len(recs) < 2:
            excluded[sid] = f"only {len(recs)} pair(s)"
            continue
        model = [cosine_similarity(vec(r.word_a), vec(r.word_b)) for r in recs]
        rho = spearman_rho(model, [r.human_score for r in recs])
        if math.isnan(rho):
            excluded[sid] = "undefined correlation (constant scores)"
            continue
        by_subset[sid] = (rho, len(recs))
    if not by_subset:
        raise ValueError("no subset produced a defined correlation")
    unweighted, weighted = aggregate(by_subset, scale)
    return SemanticScore(by_subset, unweighted, weighted, scale, mode, excluded)
