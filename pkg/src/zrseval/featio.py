"""Readers and writers for every on-disk input the evaluator consumes.

Formats
-------
Feature binary
    ``b"ZRF1"``, rows (u32 LE), cols (u32 LE), then ``rows * cols`` f32 LE
    values in row-major order.
Feature text
    One frame per line, whitespace-separated decimal floats.
Item file
    Header line (content ignored), then ``file onset offset center prev next
    speaker`` per line.
Scored file
    ``stimulus_id logprob`` per line.
Semantic gold file
    ``word_a word_b human_score subset_id`` per line.
Gold-pair file
    ``positive_id negative_id [paradigm category]`` per line.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

MAGIC = b"ZRF1"
_HEADER = struct.Struct("<4sII")
DEFAULT_FRAME_SHIFT = 0.01
# tolerance (in frames) used when mapping seconds onto frame indices
_FRAME_EPS = 1e-9


class FormatError(ValueError):
    """An input file does not follow its declared format."""

    def __init__(self, path, message, line=None, offset=None):
        where = str(path)
        if line is not None:
            where += f":{line}"
        if offset is not None:
            where += f" (byte {offset})"
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line
        self.offset = offset


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    frames: np.ndarray
    frame_shift: float = DEFAULT_FRAME_SHIFT
    utterance_id: str = ""

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim == 1:
            frames = frames[None, :]
        if frames.ndim != 2:
            raise ValueError(f"{self.utterance_id!r}: frames must be 2-D, got {frames.ndim}-D")
        if frames.shape[0] < 1:
            raise ValueError(f"{self.utterance_id!r}: zero frames")
        if frames.shape[1] < 1:
            raise ValueError(f"{self.utterance_id!r}: zero feature dimensions")
        if not np.issubdtype(frames.dtype, np.floating):
            frames = frames.astype(np.float64)
        if not np.all(np.isfinite(frames)):
            raise ValueError(f"{self.utterance_id!r}: non-finite value in frames")
        if not self.frame_shift > 0:
            raise ValueError(f"{self.utterance_id!r}: frame_shift must be > 0")
        frames = frames.copy()
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def __len__(self):
        return self.n_frames

    def __eq__(self, other):
        if not isinstance(other, FeatureSequence):
            return NotImplemented
        return (
            self.utterance_id == other.utterance_id
            and self.frame_shift == other.frame_shift
            and self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
        )

    __hash__ = None


@dataclass(frozen=True)
class AbxItem:
    file_id: str
    onset: float
    offset: float
    center_phone: str
    prev_phone: str
    next_phone: str
    speaker: str

    def __post_init__(self):
        if not (0 <= self.onset < self.offset):
            raise ValueError(
                f"{self.file_id}: need 0 <= onset < offset, got [{self.onset}, {self.offset})"
            )

    @property
    def context(self) -> tuple[str, str]:
        return (self.prev_phone, self.next_phone)


@dataclass(frozen=True)
class ScoredStimulus:
    stimulus_id: str
    logprob: float
    length: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.logprob):
            raise ValueError(f"{self.stimulus_id}: non-finite logprob")
        if self.length is not None and self.length < 1:
            raise ValueError(f"{self.stimulus_id}: length must be >= 1")


@dataclass(frozen=True)
class SimilarityRecord:
    word_a: str
    word_b: str
    human_score: float
    subset_id: str

    def __post_init__(self):
        if not math.isfinite(self.human_score):
            raise ValueError(f"{self.word_a}/{self.word_b}: non-finite human score")


@dataclass(frozen=True)
class GoldPair:
    positive_id: str
    negative_id: str
    paradigm: str | None = None
    category: str | None = None

    def __post_init__(self):
        if self.positive_id == self.negative_id:
            raise ValueError(f"gold pair compares {self.positive_id!r} with itself")


# ---------------------------------------------------------------- features


def write_feature_file(path, seq: FeatureSequence | np.ndarray, format: str = "binary") -> None:
    frames = seq.frames if isinstance(seq, FeatureSequence) else np.asarray(seq)
    path = Path(path)
    if format == "binary":
        rows, cols = frames.shape
        with open(path, "wb") as f:
            f.write(_HEADER.pack(MAGIC, rows, cols))
            f.write(np.ascontiguousarray(frames, dtype="<f4").tobytes())
    elif format == "text":
        with open(path, "w") as f:
            for row in frames:
                f.write(" ".join(repr(float(v)) for v in row) + "\n")
    else:
        raise ValueError(f"unknown feature format {format!r}")


def read_matrix(path, format: str = "auto") -> np.ndarray:
    """Read one feature file as a 2-D array (float32 for binary, float64 for text)."""
    path = Path(path)
    if format == "auto":
        with open(path, "rb") as f:
            format = "binary" if f.read(4) == MAGIC else "text"
    if format == "binary":
        return _read_binary(path)
    if format == "text":
        return _read_text(path)
    raise ValueError(f"unknown feature format {format!r}")


def _read_binary(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(path, "truncated header", offset=len(raw))
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(path, f"bad magic {magic!r}", offset=0)
    if rows == 0:
        raise FormatError(path, "zero frames", offset=4)
    if cols == 0:
        raise FormatError(path, "zero feature dimensions", offset=8)
    expected = _HEADER.size + 4 * rows * cols
    if len(raw) != expected:
        raise FormatError(
            path, f"payload size mismatch: expected {expected} bytes, found {len(raw)}",
            offset=min(len(raw), expected),
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(rows, cols)
    bad = np.flatnonzero(~np.isfinite(data.ravel()))
    if bad.size:
        raise FormatError(path, "non-finite value", offset=_HEADER.size + 4 * int(bad[0]))
    return data.astype(np.float32)


def _read_text(path: Path) -> np.ndarray:
    rows = []
    cols = None
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            fields = line.split()
            if not fields:
                continue
            try:
                row = [float(v) for v in fields]
            except ValueError as err:
                raise FormatError(path, f"unparseable number ({err})", line=lineno) from None
            if cols is None:
                cols = len(row)
            elif len(row) != cols:
                raise FormatError(path, f"dimension mismatch: {len(row)} values, expected {cols}", line=lineno)
            if not all(math.isfinite(v) for v in row):
                raise FormatError(path, "non-finite value", line=lineno)
            rows.append(row)
    if not rows:
        raise FormatError(path, "zero frames")
    return np.array(rows, dtype=np.float64)


def load_feature_file(path, format: str = "auto", frame_shift: float = DEFAULT_FRAME_SHIFT) -> FeatureSequence:
    path = Path(path)
    return FeatureSequence(read_matrix(path, format), frame_shift, path.stem)


def _feature_files(path: Path) -> list[Path]:
    return sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith("."))


def load_feature_dir(path, format: str = "auto", frame_shift: float = DEFAULT_FRAME_SHIFT,
                     threads: int = 1) -> dict[str, FeatureSequence]:
    """Load every file of a directory; keys are file stems, in sorted order."""
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"feature directory not found: {path}")
    files = _feature_files(path)
    stems = [p.stem for p in files]
    dupes = {s for s in stems if stems.count(s) > 1}
    if dupes:
        raise FormatError(path, f"several files share the utterance id(s) {sorted(dupes)}")

    def load(p):
        return load_feature_file(p, format, frame_shift)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            seqs = list(pool.map(load, files))
    else:
        seqs = [load(p) for p in files]
    return {s.utterance_id: s for s in seqs}


# ---------------------------------------------------------------- tables


def _rows(path) -> Iterator[tuple[int, list[str]]]:
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            fields = line.split()
            if fields and not fields[0].startswith("#"):
                yield lineno, fields


def _number(path, lineno, text) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FormatError(path, f"unparseable number {text!r}", line=lineno) from None
    if not math.isfinite(value):
        raise FormatError(path, f"non-finite value {text!r}", line=lineno)
    return value


def load_item_file(path) -> list[AbxItem]:
    path = Path(path)
    with open(path) as f:
        if not f.readline():
            raise FormatError(path, "missing header line", line=1)
    items = []
    for lineno, fields in _rows(path):
        if lineno == 1:
            continue
        if len(fields) != 7:
            raise FormatError(path, f"expected 7 columns, found {len(fields)}", line=lineno)
        file_id, onset, offset, center, prev, nxt, speaker = fields
        onset = _number(path, lineno, onset)
        offset = _number(path, lineno, offset)
        if not 0 <= onset < offset:
            raise FormatError(path, f"empty or negative interval [{onset}, {offset})", line=lineno)
        items.append(AbxItem(file_id, onset, offset, center, prev, nxt, speaker))
    return items


def write_item_file(path, items) -> None:
    with open(path, "w") as f:
        f.write("#file onset offset #phone prev-phone next-phone speaker\n")
        for it in items:
            f.write(f"{it.file_id} {it.onset!r} {it.offset!r} {it.center_phone} "
                    f"{it.prev_phone} {it.next_phone} {it.speaker}\n")


def load_scored_file(path) -> list[ScoredStimulus]:
    """Two columns, ``id logprob``; an optional third column holds the stimulus length."""
    path = Path(path)
    out = []
    seen = {}
    for lineno, fields in _rows(path):
        if len(fields) not in (2, 3):
            raise FormatError(path, f"expected 2 columns, found {len(fields)}", line=lineno)
        sid = fields[0]
        if sid in seen:
            raise FormatError(path, f"duplicate stimulus id {sid!r} (first on line {seen[sid]})", line=lineno)
        seen[sid] = lineno
        logprob = _number(path, lineno, fields[1])
        length = None
        if len(fields) == 3:
            try:
                length = int(fields[2])
            except ValueError:
                raise FormatError(path, f"unparseable length {fields[2]!r}", line=lineno) from None
            if length < 1:
                raise FormatError(path, "length must be >= 1", line=lineno)
        out.append(ScoredStimulus(sid, logprob, length))
    return out


def write_scored_file(path, scores) -> None:
    with open(path, "w") as f:
        for s in scores:
            tail = f" {s.length}" if s.length is not None else ""
            f.write(f"{s.stimulus_id} {s.logprob!r}{tail}\n")


def load_similarity_file(path) -> list[SimilarityRecord]:
    path = Path(path)
    out = []
    for lineno, fields in _rows(path):
        if len(fields) != 4:
            raise FormatError(path, f"expected 4 columns, found {len(fields)}", line=lineno)
        out.append(SimilarityRecord(fields[0], fields[1], _number(path, lineno, fields[2]), fields[3]))
    return out


def write_similarity_file(path, records) -> None:
    with open(path, "w") as f:
        for r in records:
            f.write(f"{r.word_a} {r.word_b} {r.human_score!r} {r.subset_id}\n")


def load_gold_pairs(path) -> list[GoldPair]:
    path = Path(path)
    out = []
    for lineno, fields in _rows(path):
        if len(fields) not in (2, 4):
            raise FormatError(path, f"expected 2 or 4 columns, found {len(fields)}", line=lineno)
        if fields[0] == fields[1]:
            raise FormatError(path, f"pair compares {fields[0]!r} with itself", line=lineno)
        out.append(GoldPair(*fields))
    return out


def write_gold_pairs(path, pairs) -> None:
    with open(path, "w") as f:
        for p in pairs:
            extra = f" {p.paradigm} {p.category}" if p.paradigm is not None else ""
            f.write(f"{p.positive_id} {p.negative_id}{extra}\n")


# ---------------------------------------------------------------- slicing


def frame_range(onset: float, offset: float, frame_shift: float) -> tuple[int, int]:
    """Half-open frame index range ``[start, stop)`` with ``onset <= i*shift < offset``.

    Frame ``i`` starts at ``i * frame_shift``; adjacent intervals never share a frame.
    """
    start = max(0, math.ceil(onset / frame_shift - _FRAME_EPS))
    stop = math.ceil(offset / frame_shift - _FRAME_EPS)
    return start, stop


def slice_item(seq: FeatureSequence, item: AbxItem) -> FeatureSequence:
    if item.file_id != seq.utterance_id:
        raise ValueError(f"item refers to {item.file_id!r}, features are {seq.utterance_id!r}")
    start, stop = frame_range(item.onset, item.offset, seq.frame_shift)
    stop = min(stop, seq.n_frames)
    if start >= stop:
        raise ValueError(
            f"{item.file_id} [{item.onset}, {item.offset}): empty slice "
            f"({seq.n_frames} frames at shift {seq.frame_shift})"
        )
    return FeatureSequence(seq.frames[start:stop], seq.frame_shift, seq.utterance_id)
