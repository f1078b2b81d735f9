"""K-means codebooks and pseudo-text emission."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .featio import FeatureSequence, read_matrix, write_feature_file

_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class Codebook:
    centroids: np.ndarray
    training_inertia: float = 0.0
    seed: int | None = None
    tol: float | None = None
    n_iter: int = 0
    inertia_history: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        c = np.asarray(self.centroids, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("centroids must be a non-empty K x D matrix")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite centroid")
        if len(np.unique(c, axis=0)) != len(c):
            raise ValueError("codebook has identical centroids")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True)
class PseudoText:
    utterance_id: str
    unit_ids: tuple[int, ...]


def _squared_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # explicit differences instead of the BLAS expansion: row results must not
    # depend on how the points are chunked across threads
    return ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _assign(x: np.ndarray, centroids: np.ndarray, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-centroid labels (lowest index on ties) and squared distances."""
    step = max(1, _CHUNK * 64 // max(1, centroids.shape[0] * x.shape[1]))
    chunks = [slice(i, i + step) for i in range(0, len(x), step)]

    def work(sl):
        d = _squared_distances(x[sl], centroids)
        lab = np.argmin(d, axis=1)
        return lab, d[np.arange(len(lab)), lab]

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(sl) for sl in chunks]
    labels = np.concatenate([p[0] for p in parts])
    dists = np.concatenate([p[1] for p in parts])
    return labels, dists


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(len(x))]]
    closest = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        idx = rng.choice(len(x), p=closest / total)
        centers.append(x[idx])
        closest = np.minimum(closest, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _stack(data) -> np.ndarray:
    if isinstance(data, Mapping):
        data = [data[key].frames for key in sorted(data)]
    if isinstance(data, (list, tuple)) and data and isinstance(data[0], FeatureSequence):
        data = [s.frames for s in data]
    if isinstance(data, (list, tuple)) and data and np.ndim(data[0]) == 2:
        return np.vstack(data).astype(np.float64)
    return np.atleast_2d(np.asarray(data, dtype=np.float64))


def _lloyd(x, k, rng, max_iter, tol, threads):
    centroids = _kmeanspp(x, k, rng)
    labels, dists = _assign(x, centroids, threads)
    inertia = float(dists.sum())
    history = [inertia]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        counts = np.bincount(labels, minlength=k)
        new = np.empty_like(centroids)
        for j in range(k):
            if counts[j]:
                new[j] = x[labels == j].mean(axis=0)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # reseed each empty cluster at the point farthest from its centroid
            far = dists.copy()
            for j in empty:
                idx = int(np.argmax(far))
                new[j] = x[idx]
                far[idx] = -1.0
        new_labels, new_dists = _assign(x, new, threads)
        new_inertia = float(new_dists.sum())
        if new_inertia > inertia:
            # rounding noise at a fixed point; keep the previous solution
            n_iter -= 1
            break
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids, labels, dists, inertia = new, new_labels, new_dists, new_inertia
        history.append(inertia)
        if shift < tol:
            break
    return centroids, inertia, n_iter, history


def kmeans_fit(data, k: int = 50, seed: int = 0, max_iter: int = 300, tol: float = 1e-4,
               n_init: int = 10, threads: int = 1) -> Codebook:
    """Lloyd's algorithm from k-means++ seeds; keeps the best of ``n_init`` runs.

    ``data`` is an ``(n, D)`` array, a list of arrays/FeatureSequences or a
    mapping of FeatureSequences (concatenated in sorted key order).
    """
    x = _stack(data)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input vector")
    if k < 1:
        raise ValueError("k must be >= 1")
    n_distinct = len(np.unique(x, axis=0))
    if n_distinct < k:
        raise ValueError(f"only {n_distinct} distinct points for k={k}")
    best = None
    for rng in (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_init)):
        run = _lloyd(x, k, rng, max_iter, tol, threads)
        if best is None or run[1] < best[1]:
            best = run
    centroids, inertia, n_iter, history = best
    return Codebook(centroids, inertia, seed, tol, n_iter, tuple(history))


def kmeans_assign(codebook: Codebook, seq: FeatureSequence, dedup: bool = False) -> PseudoText:
    frames = np.asarray(seq.frames, dtype=np.float64)
    if frames.shape[1] != codebook.dim:
        raise ValueError(f"{seq.utterance_id}: feature dim {frames.shape[1]} != codebook dim {codebook.dim}")
    labels, _ = _assign(frames, codebook.centroids)
    if dedup:
        keep = np.ones(len(labels), dtype=bool)
        keep[1:] = labels[1:] != labels[:-1]
        labels = labels[keep]
    return PseudoText(seq.utterance_id, tuple(int(u) for u in labels))


# ---------------------------------------------------------------- files


def save_codebook(path, codebook: Codebook) -> Path:
    """Write centroids in the binary feature format plus a ``.meta`` sidecar line."""
    path = Path(path)
    write_feature_file(path, codebook.centroids.astype(np.float32), "binary")
    meta = path.with_name(path.name + ".meta")
    meta.write_text(
        f"k={codebook.k} seed={codebook.seed} tol={codebook.tol!r} "
        f"iterations={codebook.n_iter} inertia={codebook.training_inertia!r}\n"
    )
    return meta


def load_codebook(path) -> Codebook:
    path = Path(path)
    centroids = read_matrix(path, "binary")
    meta = path.with_name(path.name + ".meta")
    info = {}
    if meta.exists():
        info = dict(kv.split("=", 1) for kv in meta.read_text().split())
    if "k" in info and int(info["k"]) != len(centroids):
        raise ValueError(f"{meta}: k={info['k']} but codebook has {len(centroids)} rows")
    seed = info.get("seed")
    tol = info.get("tol")
    return Codebook(
        centroids,
        float(info.get("inertia", 0.0)),
        None if seed in (None, "None") else int(seed),
        None if tol in (None, "None") else float(tol),
        int(info.get("iterations", 0)),
    )


def write_pseudo_text(path, texts) -> None:
    with open(path, "w") as f:
        for t in texts:
            f.write(" ".join([t.utterance_id, *map(str, t.unit_ids)]) + "\n")


def read_pseudo_text(path) -> list[PseudoText]:
    out = []
    with open(path) as f:
        for line in f:
            fields = line.split()
            if fields:
                out.append(PseudoText(fields[0], tuple(int(u) for u in fields[1:])))
    return out
