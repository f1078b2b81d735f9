"""Machine ABX discriminability over minimal triphone pairs.

A triple ``(a, b, x)`` has ``a`` and ``x`` from phone category A and ``b``
from category B, all sharing the same (prev, next) context.  It scores 0
when ``d(a, x) < d(b, x)``, 1 when ``d(a, x) > d(b, x)`` and 0.5 on a tie.
``d`` is the DTW-aligned mean frame distance.

Aggregation: triples -> cell mean; cells -> mean over speaker assignments;
-> mean over contexts; -> mean of the (A, B) and (B, A) directions; -> mean
over unordered phone pairs.
"""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _dtw
from .featio import AbxItem, FeatureSequence, slice_item

CONDITIONS = {"within": "within_speaker", "within_speaker": "within_speaker",
              "across": "across_speaker", "across_speaker": "across_speaker"}
ACROSS_MODES = ("pooled", "per_speaker")
_BATCH = 4096


@dataclass(frozen=True)
class AbxTask:
    items: tuple[AbxItem, ...]
    condition: str = "within_speaker"
    frame_distance: str = "cosine"
    # across only: pool x over every other speaker, or one cell per x speaker
    across_mode: str = "pooled"

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}")
        object.__setattr__(self, "condition", CONDITIONS[self.condition])
        if self.frame_distance not in _dtw.METRICS:
            raise ValueError(f"unknown frame distance {self.frame_distance!r}")
        if self.across_mode not in ACROSS_MODES:
            raise ValueError(f"unknown across mode {self.across_mode!r}")
        for it in self.items:
            if not (it.center_phone and it.prev_phone and it.next_phone):
                raise ValueError(f"item {it} has an empty phone label")


@dataclass(frozen=True)
class AbxCell:
    phone_a: str
    phone_b: str
    context: tuple[str, str]
    speakers: tuple[str, str]  # (speaker of a and b, speaker of x or "*" when pooled)
    triple_count: int
    error_sum: float

    @property
    def error_rate(self) -> float:
        return self.error_sum / self.triple_count


@dataclass
class AbxScore:
    error_rate: float
    by_phone_pair: dict[tuple[str, str], float]
    by_cell: dict[tuple, AbxCell]
    condition: str
    frame_distance: str
    across_mode: str
    n_triples: int
    excluded_cells: list[tuple] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "metric": "abx",
            "condition": self.condition,
            "frame_distance": self.frame_distance,
            "across_mode": self.across_mode,
            "slice_convention": "raw half-open slice, frame i starts at i*frame_shift",
            "error_rate": self.error_rate,
            "n_triples": self.n_triples,
            "n_cells": len(self.by_cell),
            "by_phone_pair": [
                {"phone_a": a, "phone_b": b, "error_rate": r}
                for (a, b), r in sorted(self.by_phone_pair.items())
            ],
            "excluded_cells": {
                "count": len(self.excluded_cells),
                "cells": [list(map(_jsonable, k)) for k in self.excluded_cells],
            },
        }


def _jsonable(v):
    return list(v) if isinstance(v, tuple) else v


def _mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


# ---------------------------------------------------------------- distances


def _as_frames(seq) -> np.ndarray:
    frames = seq.frames if isinstance(seq, FeatureSequence) else np.asarray(seq)
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if frames.ndim != 2 or frames.shape[0] == 0 or frames.shape[1] == 0:
        raise ValueError("empty sequence")
    return frames


def frame_distance(u, v, metric: str = "cosine") -> float:
    return dtw_distance(np.atleast_2d(u), np.atleast_2d(v), metric)


def dtw_distance(x, y, metric: str = "cosine") -> float:
    """Mean frame distance along the minimum-cost monotone alignment of ``x`` and ``y``.

    Steps are (1,0), (0,1), (1,1).  Among equal-cost paths the shortest wins.
    """
    fx, fy = _as_frames(x), _as_frames(y)
    if fx.shape[1] != fy.shape[1]:
        raise ValueError(f"dimension mismatch: {fx.shape[1]} vs {fy.shape[1]}")
    packed = Packed([fx, fy])
    return float(packed.distances(np.array([0]), np.array([1]), metric)[0])


def score_triple(a, b, x, metric: str = "cosine") -> float:
    dax = dtw_distance(a, x, metric)
    dbx = dtw_distance(b, x, metric)
    if dax < dbx:
        return 0.0
    if dax > dbx:
        return 1.0
    return 0.5


class Packed:
    """Sequences concatenated into one contiguous frame array."""

    def __init__(self, seqs: Sequence[np.ndarray]):
        self.lengths = np.array([len(s) for s in seqs], dtype=np.int64)
        self.offsets = np.zeros(len(seqs), dtype=np.int64)
        np.cumsum(self.lengths[:-1], out=self.offsets[1:])
        self.frames = np.ascontiguousarray(np.vstack(seqs), dtype=np.float64)
        self.norms = _dtw.squared_norms(self.frames)

    def distances(self, left, right, metric: str, threads: int = 1) -> np.ndarray:
        left = np.ascontiguousarray(left, dtype=np.int64)
        right = np.ascontiguousarray(right, dtype=np.int64)
        out = np.empty(len(left))
        code = _dtw.METRICS[metric]

        def run(start):
            stop = start + _BATCH
            _dtw.dtw_pairs(self.frames, self.norms, self.offsets, self.lengths,
                           left[start:stop], right[start:stop], code, out[start:stop])

        starts = range(0, len(left), _BATCH)
        if threads > 1 and len(left) > _BATCH:
            with ThreadPoolExecutor(threads) as pool:
                list(pool.map(run, starts))
        else:
            for s in starts:
                run(s)
        return out


# ---------------------------------------------------------------- evaluation


@dataclass
class _CellSpec:
    key: tuple  # (A, B, context, (speaker_ab, speaker_x))
    a: np.ndarray
    b: np.ndarray
    x: np.ndarray


def _cell_specs(items: Sequence[AbxItem], condition: str, across_mode: str):
    """Yield every candidate cell, including those that end up with no triple."""
    groups: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    for i, it in enumerate(items):
        groups[it.context][it.center_phone][it.speaker].append(i)
    for ctx in sorted(groups):
        by_phone = groups[ctx]
        phones = sorted(by_phone)
        for pa in phones:
            for pb in phones:
                if pa == pb:
                    continue
                a_spk, b_spk = by_phone[pa], by_phone[pb]
                for s in sorted(a_spk):
                    a = np.array(a_spk[s])
                    b = np.array(b_spk.get(s, []), dtype=np.int64)
                    if condition == "within_speaker":
                        yield _CellSpec((pa, pb, ctx, (s, s)), a, b, a)
                        continue
                    others = [t for t in sorted(a_spk) if t != s]
                    if across_mode == "pooled":
                        x = np.array([i for t in others for i in a_spk[t]], dtype=np.int64)
                        yield _CellSpec((pa, pb, ctx, (s, "*")), a, b, x)
                    else:
                        for t in others:
                            yield _CellSpec((pa, pb, ctx, (s, t)), a, b, np.array(a_spk[t]))


def _score_cell(dax, dbx, valid):
    """Error count over all (a, b, x): dax is (na, nx), dbx is (nb, nx)."""
    nb = dbx.shape[0]
    n_triples = int(valid.sum()) * nb
    if n_triples == 0:
        return 0, 0.0
    if dax.shape[0] * nb * dax.shape[1] <= 1 << 22:
        gt = (dax[:, None, :] > dbx[None, :, :]).sum(axis=1)
        eq = (dax[:, None, :] == dbx[None, :, :]).sum(axis=1)
    else:
        srt = np.sort(dbx, axis=0)
        gt = np.empty(dax.shape, dtype=np.int64)
        eq = np.empty(dax.shape, dtype=np.int64)
        for j in range(dax.shape[1]):
            lo = np.searchsorted(srt[:, j], dax[:, j], "left")
            hi = np.searchsorted(srt[:, j], dax[:, j], "right")
            gt[:, j] = lo
            eq[:, j] = hi - lo
    n_err = int(gt[valid].sum())
    n_tie = int(eq[valid].sum())
    return n_triples, n_err + 0.5 * n_tie


def _needed_pairs(specs) -> np.ndarray:
    """Unique unordered item pairs (i < j) any cell will compare."""
    codes = []
    for sp in specs:
        if len(sp.b) == 0 or len(sp.x) == 0:
            continue
        rows = np.concatenate([sp.a, sp.b])
        i = np.repeat(rows, len(sp.x))
        j = np.tile(sp.x, len(rows))
        keep = i != j
        lo, hi = np.minimum(i[keep], j[keep]), np.maximum(i[keep], j[keep])
        codes.append(np.stack([lo, hi], axis=1))
    if not codes:
        return np.empty((0, 2), dtype=np.int64)
    return np.unique(np.concatenate(codes), axis=0)


def evaluate_abx(features: Mapping[str, FeatureSequence], task: AbxTask,
                 threads: int = 1, cache: bool = True) -> AbxScore:
    items = task.items
    missing = sorted({it.file_id for it in items} - set(features))
    if missing:
        raise KeyError(f"no features for file(s): {', '.join(missing[:10])}")
    seqs = [np.asarray(slice_item(features[it.file_id], it).frames, dtype=np.float64) for it in items]
    dims = {s.shape[1] for s in seqs}
    if len(dims) > 1:
        raise ValueError(f"inconsistent feature dimensions {sorted(dims)}")
    # two items pointing at the same stretch of audio are the same stimulus
    stim_ids: dict = {}
    stim = np.array([stim_ids.setdefault((it.file_id, it.onset, it.offset), len(stim_ids)) for it in items])
    metric = task.frame_distance
    specs = list(_cell_specs(items, task.condition, task.across_mode))
    packed = Packed(seqs) if seqs else None

    if cache and specs:
        # one dense distance matrix per context, filled only where a cell needs it
        by_ctx = defaultdict(list)
        for i, it in enumerate(items):
            by_ctx[it.context].append(i)
        local = np.empty(len(items), dtype=np.int64)
        matrices = {}
        for ctx, members in by_ctx.items():
            local[members] = np.arange(len(members))
            matrices[ctx] = np.zeros((len(members), len(members)))
        pairs = _needed_pairs(specs)
        dist = packed.distances(pairs[:, 0], pairs[:, 1], metric, threads)
        for ctx, members in by_ctx.items():
            in_ctx = np.isin(pairs[:, 0], members)
            li, lj = local[pairs[in_ctx, 0]], local[pairs[in_ctx, 1]]
            m = matrices[ctx]
            m[li, lj] = dist[in_ctx]
            m[lj, li] = dist[in_ctx]

        def block(rows, cols):
            m = matrices[items[rows[0]].context]
            return m[np.ix_(local[rows], local[cols])]
    else:
        def block(rows, cols):
            left = np.repeat(np.asarray(rows, dtype=np.int64), len(cols))
            right = np.tile(np.asarray(cols, dtype=np.int64), len(rows))
            return packed.distances(left, right, metric).reshape(len(rows), len(cols))

    cells: dict[tuple, AbxCell] = {}
    excluded = []
    n_total = 0
    for sp in specs:
        valid = stim[sp.a][:, None] != stim[sp.x][None, :]
        if len(sp.b) == 0 or not valid.any():
            excluded.append(sp.key)
            continue
        n, err = _score_cell(block(sp.a, sp.x), block(sp.b, sp.x), valid)
        pa, pb, ctx, spk = sp.key
        cells[sp.key] = AbxCell(pa, pb, ctx, spk, n, err)
        n_total += n
    if not cells:
        raise ValueError("ABX task has no valid cell: no minimal pair yields a triple")
    error_rate, by_pair = aggregate_cells(cells.values())
    return AbxScore(error_rate, by_pair, cells, task.condition, metric, task.across_mode,
                    n_total, excluded)


def aggregate_cells(cells) -> tuple[float, dict[tuple[str, str], float]]:
    """Speaker assignments -> contexts -> both directions -> phone pairs."""
    by_ctx = defaultdict(list)
    for c in cells:
        by_ctx[(c.phone_a, c.phone_b, c.context)].append(c.error_rate)
    by_dir = defaultdict(list)
    for (pa, pb, _), rates in sorted(by_ctx.items()):
        by_dir[(pa, pb)].append(_mean(rates))
    by_pair = defaultdict(list)
    for (pa, pb), rates in sorted(by_dir.items()):
        by_pair[tuple(sorted((pa, pb)))].append(_mean(rates))
    by_pair = {k: _mean(v) for k, v in sorted(by_pair.items())}
    return _mean(by_pair.values()), by_pair
