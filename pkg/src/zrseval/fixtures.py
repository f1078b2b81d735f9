"""Deterministic synthetic corpora with known metric outcomes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .featio import (AbxItem, FeatureSequence, GoldPair, ScoredStimulus, SimilarityRecord, write_feature_file,
                     write_gold_pairs, write_item_file, write_scored_file, write_similarity_file)
from .mfcc import PcmSignal, write_wav
from .report import SubmissionManifest, TrainData, format_manifest

KINDS = ("abx", "lexical", "syntactic", "semantic", "audio", "submission")
PHONES = ("a", "e", "i", "o", "u", "b", "d", "g", "k", "p", "t", "s", "z", "m", "n", "l")


@dataclass(frozen=True)
class AbxFixture:
    """Category blend: ``(1 - s) * shared + s * own``.

    ``shared`` has one distribution for every phone; ``own`` is non-zero only
    on the phone's private block of dimensions.  ``s = 0`` makes categories
    exchangeable, ``s = 1`` gives disjoint supports (zero ABX error under
    cosine distance).  ``constant`` replaces every frame by the same vector.
    """

    separability: float = 1.0
    n_phones: int = 2
    n_contexts: int = 2
    n_speakers: int = 2
    tokens: int = 3
    mean_frames: int = 10
    dim: int = 39
    items_per_file: int = 4
    frame_shift: float = 0.01
    constant: bool = False

    def __post_init__(self):
        if math.isinf(self.separability):
            object.__setattr__(self, "separability", 1.0)
        if not 0.0 <= self.separability <= 1.0:
            raise ValueError("separability must lie in [0, 1] (or be inf)")
        if not 2 <= self.n_phones <= len(PHONES):
            raise ValueError(f"n_phones must lie in [2, {len(PHONES)}]")
        if self.dim < self.n_phones:
            raise ValueError("need at least one private dimension per phone")
        if min(self.n_contexts, self.n_speakers, self.tokens, self.items_per_file) < 1:
            raise ValueError("counts must be >= 1")
        if self.mean_frames < 1:
            raise ValueError("mean_frames must be >= 1")

    @property
    def n_items(self) -> int:
        return self.n_phones * self.n_contexts * self.n_speakers * self.tokens


def make_abx(params: AbxFixture, seed: int = 0):
    """Return ``(features, items)`` held in memory."""
    rng = np.random.default_rng(seed)
    phones = PHONES[:params.n_phones]
    blocks = np.array_split(np.arange(params.dim), params.n_phones)
    spread = max(1, params.mean_frames // 2)
    specs = []
    for s in range(params.n_speakers):
        for c in range(params.n_contexts):
            ctx = (PHONES[-1 - (c % 8)], PHONES[-1 - ((c // 8) % 8)] + (str(c // 64) if c >= 64 else ""))
            for p, phone in enumerate(phones):
                for _ in range(params.tokens):
                    specs.append((f"spk{s:02d}", ctx, p, phone))
    order = rng.permutation(len(specs))
    specs = [specs[i] for i in order]

    features = {}
    items = []
    by_speaker: dict[str, list] = {}
    for spec in specs:
        by_speaker.setdefault(spec[0], []).append(spec)
    const = np.abs(rng.normal(size=params.dim)) + 0.1
    for speaker in sorted(by_speaker):
        todo = by_speaker[speaker]
        for f0 in range(0, len(todo), params.items_per_file):
            chunk = todo[f0:f0 + params.items_per_file]
            file_id = f"{speaker}_{f0 // params.items_per_file:04d}"
            parts = []
            start = 0
            for _, ctx, p, phone in chunk:
                n = int(rng.integers(max(1, params.mean_frames - spread), params.mean_frames + spread + 1))
                if params.constant:
                    frames = np.tile(const, (n, 1))
                else:
                    shared = np.abs(rng.normal(size=(n, params.dim))) + 0.1
                    own = np.zeros((n, params.dim))
                    own[:, blocks[p]] = np.abs(rng.normal(size=(n, len(blocks[p])))) + 0.1
                    s = params.separability
                    frames = (1.0 - s) * shared + s * own
                parts.append(frames)
                items.append(AbxItem(file_id, start * params.frame_shift, (start + n) * params.frame_shift,
                                     phone, ctx[0], ctx[1], speaker))
                start += n
            features[file_id] = FeatureSequence(np.vstack(parts).astype(np.float32),
                                                params.frame_shift, file_id)
    return features, items


def gen_abx(out_dir, params: AbxFixture, seed: int = 0) -> dict[str, Path]:
    out = Path(out_dir)
    (out / "features").mkdir(parents=True, exist_ok=True)
    features, items = make_abx(params, seed)
    for fid, seq in features.items():
        write_feature_file(out / "features" / f"{fid}.zrf", seq, "binary")
    write_item_file(out / "items.item", items)
    return {"features": out / "features", "items": out / "items.item"}


def make_paired(n_pairs: int = 400, win_fraction: float = 0.75, seed: int = 0,
                n_paradigms: int = 0, n_categories: int = 0, prefix: str = "w"):
    """Scores and gold pairs with exactly ``round(win_fraction * n_pairs)`` wins."""
    if n_pairs < 1 or not 0.0 <= win_fraction <= 1.0:
        raise ValueError("need n_pairs >= 1 and win_fraction in [0, 1]")
    rng = np.random.default_rng(seed)
    n_wins = int(round(win_fraction * n_pairs))
    wins = np.zeros(n_pairs, dtype=bool)
    wins[rng.permutation(n_pairs)[:n_wins]] = True
    scores, gold = [], []
    for i in range(n_pairs):
        hi = float(-rng.gamma(2.0, 10.0))
        lo = hi - float(rng.uniform(0.1, 5.0))
        pos, neg = f"{prefix}{i:05d}_pos", f"{prefix}{i:05d}_neg"
        scores += [ScoredStimulus(pos, hi if wins[i] else lo), ScoredStimulus(neg, lo if wins[i] else hi)]
        if n_paradigms:
            par = i % n_paradigms
            cat = par % max(1, n_categories) if n_categories else par
            gold.append(GoldPair(pos, neg, f"paradigm{par:02d}", f"category{cat:02d}"))
        else:
            gold.append(GoldPair(pos, neg))
    order = rng.permutation(len(scores))
    return [scores[i] for i in order], gold


def gen_paired(out_dir, kind: str = "lexical", n_pairs: int = 400, win_fraction: float = 0.75,
               seed: int = 0) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "syntactic":
        scores, gold = make_paired(n_pairs, win_fraction, seed, n_paradigms=68, n_categories=12, prefix="s")
    else:
        scores, gold = make_paired(n_pairs, win_fraction, seed)
    write_scored_file(out / "scores.txt", scores)
    write_gold_pairs(out / "gold.txt", gold)
    return {"scores": out / "scores.txt", "gold": out / "gold.txt"}


def make_semantic(subset_sizes=(10, 20, 40), noise: float = 0.0, dim: int = 16, max_frames: int = 5,
                  n_words: int = 60, seed: int = 0):
    """Words with random frame sequences; human scores plant a known ranking.

    ``noise == 0`` makes human scores a strictly increasing map of the
    max-pooled cosine similarity (rho = 1 on every subset).
    """
    rng = np.random.default_rng(seed)
    words = [f"word{i:04d}" for i in range(n_words)]
    features = {}
    pooled = {}
    for w in words:
        frames = rng.normal(size=(int(rng.integers(1, max_frames + 1)), dim))
        features[w] = FeatureSequence(frames.astype(np.float32), 0.01, w)
        pooled[w] = np.asarray(features[w].frames, dtype=np.float64).max(axis=0)
    records = []
    for k, size in enumerate(subset_sizes):
        sid = f"subset{k:02d}"
        seen = set()
        while len(seen) < size:
            a, b = rng.choice(n_words, 2, replace=False)
            if (a, b) in seen or (b, a) in seen:
                continue
            seen.add((a, b))
            u, v = pooled[words[a]], pooled[words[b]]
            sim = float(u @ v / np.sqrt((u @ u) * (v @ v)))
            human = 5.0 + 4.0 * sim + noise * float(rng.normal())
            records.append(SimilarityRecord(words[a], words[b], human, sid))
    return features, records


def gen_semantic(out_dir, subset_sizes=(10, 20, 40), noise: float = 0.0, seed: int = 0) -> dict[str, Path]:
    out = Path(out_dir)
    (out / "features").mkdir(parents=True, exist_ok=True)
    features, records = make_semantic(subset_sizes, noise, seed=seed)
    for w, seq in features.items():
        write_feature_file(out / "features" / f"{w}.zrf", seq, "binary")
    write_similarity_file(out / "gold.txt", records)
    return {"features": out / "features", "gold": out / "gold.txt"}


def make_audio(duration: float = 1.0, sample_rate: int = 16000, seed: int = 0) -> PcmSignal:
    rng = np.random.default_rng(seed)
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    f0 = rng.uniform(100, 250)
    sig = sum(0.2 / h * np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi)) for h in range(1, 6))
    sig = sig * (0.6 + 0.4 * np.sin(2 * np.pi * 3 * t)) + 0.01 * rng.normal(size=len(t))
    return PcmSignal(np.clip(sig, -0.99, 0.99), sample_rate)


def gen_audio(out_dir, n_files: int = 3, duration: float = 1.0, seed: int = 0) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(n_files):
        write_wav(out / f"utt{i:03d}.wav", make_audio(duration, seed=seed + i))
    return {"audio": out}


def gen_submission(out_dir, seed: int = 0, missing: tuple[str, ...] = ()) -> dict[str, Path]:
    """A complete (or partially stripped) submission directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = SubmissionManifest(
        "low_budget", 3, 24.0,
        (TrainData("SpokenCOCO", 742.0, 118287, 0.0), TrainData("LibriSpeech-100", 100.0, 0, 0.0)),
        "synthetic fixture submission",
    )
    (out / "manifest.txt").write_text(format_manifest(manifest))
    if "phonetic" not in missing:
        for sub in ("clean", "other"):
            gen_abx(out / "phonetic" / "dev" / sub, AbxFixture(tokens=2), seed)
    for kind in ("lexical", "syntactic"):
        if kind not in missing:
            scores, _ = make_paired(20, 0.75, seed, n_paradigms=4 if kind == "syntactic" else 0)
            (out / kind).mkdir(exist_ok=True)
            write_scored_file(out / kind / "dev.txt", scores)
    if "semantic" not in missing:
        features, _ = make_semantic((5, 5), seed=seed, n_words=12)
        d = out / "semantic" / "dev" / "synth"
        d.mkdir(parents=True, exist_ok=True)
        for w, seq in features.items():
            write_feature_file(d / f"{w}.zrf", seq, "binary")
    return {"submission": out}


def gen_fixture(kind: str, out_dir, seed: int = 0, **params) -> dict[str, Path]:
    if kind == "abx":
        return gen_abx(out_dir, AbxFixture(**params), seed)
    if kind in ("lexical", "syntactic"):
        return gen_paired(out_dir, kind, seed=seed, **params)
    if kind == "semantic":
        return gen_semantic(out_dir, seed=seed, **params)
    if kind == "audio":
        return gen_audio(out_dir, seed=seed, **params)
    if kind == "submission":
        return gen_submission(out_dir, seed=seed, **params)
    raise ValueError(f"unknown fixture kind {kind!r}; expected one of {KINDS}")
