"""Compiled DTW kernels.

Sequences are packed into one ``(total_frames, D)`` float64 array with
per-sequence offsets, so a batch of pairs is a single nogil call.
"""

import math

import numpy as np
from numba import njit

COSINE, ANGULAR, EUCLIDEAN = 0, 1, 2
METRICS = {"cosine": COSINE, "angular": ANGULAR, "euclidean": EUCLIDEAN}


@njit(cache=True, nogil=True)
def _frame_distance(frames, norms, i, j, metric):
    dim = frames.shape[1]
    if metric == EUCLIDEAN:
        acc = 0.0
        for k in range(dim):
            diff = frames[i, k] - frames[j, k]
            acc += diff * diff
        return math.sqrt(acc)
    ni = norms[i]
    nj = norms[j]
    if ni == 0.0 or nj == 0.0:
        # zero frames: identical to each other, maximally far from anything else
        return 0.0 if ni == nj else 1.0
    dot = 0.0
    for k in range(dim):
        dot += frames[i, k] * frames[j, k]
    # sqrt(x*x) == x exactly, so identical frames give similarity 1.0
    sim = dot / math.sqrt(ni * nj)
    if sim > 1.0:
        sim = 1.0
    elif sim < -1.0:
        sim = -1.0
    if metric == COSINE:
        return 1.0 - sim
    return math.acos(sim) / math.pi


@njit(cache=True, nogil=True)
def squared_norms(frames):
    out = np.empty(frames.shape[0])
    for i in range(frames.shape[0]):
        acc = 0.0
        for k in range(frames.shape[1]):
            acc += frames[i, k] * frames[i, k]
        out[i] = acc
    return out


# accumulated costs closer than this (relative, floor 1) count as equal, so
# rounding noise cannot decide the path length on mathematically tied paths
TIE_TOL = 1e-12


@njit(cache=True, nogil=True)
def _dtw(frames, norms, a0, na, b0, nb, metric, cost, plen):
    """Min-cost path, near-ties broken toward the shorter path; cost / path length."""
    for i in range(na):
        for j in range(nb):
            d = _frame_distance(frames, norms, a0 + i, b0 + j, metric)
            if i == 0 and j == 0:
                cost[0, 0] = d
                plen[0, 0] = 1
                continue
            low = np.inf
            if i > 0 and j > 0:
                low = min(low, cost[i - 1, j - 1])
            if i > 0:
                low = min(low, cost[i - 1, j])
            if j > 0:
                low = min(low, cost[i, j - 1])
            limit = low + TIE_TOL * max(1.0, abs(low))
            # among near-minimal predecessors: shortest, then cheapest
            best = np.inf
            blen = 1 << 62
            for di, dj in ((1, 1), (1, 0), (0, 1)):
                pi = i - di
                pj = j - dj
                if pi < 0 or pj < 0:
                    continue
                c = cost[pi, pj]
                n = plen[pi, pj]
                if c <= limit and (n < blen or (n == blen and c < best)):
                    best = c
                    blen = n
            cost[i, j] = best + d
            plen[i, j] = blen + 1
    return cost[na - 1, nb - 1] / plen[na - 1, nb - 1]


@njit(cache=True, nogil=True)
def dtw_pairs(frames, norms, offsets, lengths, left, right, metric, out):
    """``out[p] = dtw(seq[left[p]], seq[right[p]])`` for every pair ``p``."""
    maxlen = 1
    for s in range(lengths.shape[0]):
        if lengths[s] > maxlen:
            maxlen = lengths[s]
    cost = np.empty((maxlen, maxlen))
    plen = np.empty((maxlen, maxlen), dtype=np.int64)
    for p in range(left.shape[0]):
        a = left[p]
        b = right[p]
        out[p] = _dtw(frames, norms, offsets[a], lengths[a], offsets[b], lengths[b], metric, cost, plen)
