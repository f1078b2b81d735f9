"""Submission manifests, budget accounting, validation and score reports.

Manifest grammar (one ``key = value`` per line, ``#`` starts a comment)::

    track = low_budget            # or high_budget
    gpu_count = 3
    wall_hours = 24
    description = free text
    aic = ...                     # optional pass-through: aic, bic,
                                  # n_params, n_pretrained_params
    [train_data]                  # repeated, one stanza per corpus
    name = SpokenCOCO
    speech_hours = 742
    image_count = 118000
    video_hours = 0
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from . import __version__
from .featio import FormatError, load_scored_file, read_matrix

TRACKS = ("low_budget", "high_budget")
LOW_BUDGET_LIMIT = 100.0  # GPU-hours, soft
OPTIONAL_KEYS = ("aic", "bic", "n_params", "n_pretrained_params")
MISSING = "—"

SPLITS = ("dev", "test")
COLUMNS = (
    "phonetic.within.clean", "phonetic.within.other",
    "phonetic.across.clean", "phonetic.across.other",
    "lexical", "syntactic",
    "semantic.unweighted.synth", "semantic.unweighted.libri",
    "semantic.weighted.synth", "semantic.weighted.libri",
)


class ManifestError(ValueError):
    pass


class ReportConflict(ValueError):
    pass


@dataclass(frozen=True)
class TrainData:
    name: str
    speech_hours: float = 0.0
    image_count: int = 0
    video_hours: float = 0.0

    def __post_init__(self):
        for attr in ("speech_hours", "image_count", "video_hours"):
            v = getattr(self, attr)
            if not math.isfinite(v) or v < 0:
                raise ManifestError(f"train_data {self.name!r}: {attr} must be >= 0, got {v}")


@dataclass(frozen=True)
class SubmissionManifest:
    track: str
    gpu_count: int
    wall_hours: float
    train_data: tuple[TrainData, ...]
    description: str = ""
    extra: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "train_data", tuple(self.train_data))
        if self.track not in TRACKS:
            raise ManifestError(f"track must be one of {TRACKS}, got {self.track!r}")
        if self.gpu_count < 0:
            raise ManifestError(f"gpu_count must be >= 0, got {self.gpu_count}")
        if not math.isfinite(self.wall_hours) or self.wall_hours < 0:
            raise ManifestError(f"wall_hours must be >= 0, got {self.wall_hours}")
        if not self.train_data:
            raise ManifestError("at least one [train_data] stanza is required")


def _typed(key, value, kind):
    try:
        return kind(value)
    except ValueError:
        raise ManifestError(f"{key}: cannot parse {value!r} as {kind.__name__}") from None


def parse_manifest(text: str) -> SubmissionManifest:
    top: dict[str, str] = {}
    stanzas: list[dict[str, str]] = []
    current = top
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[train_data]":
            current = {}
            stanzas.append(current)
            continue
        if "=" not in line:
            raise ManifestError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in current:
            raise ManifestError(f"line {lineno}: duplicate key {key!r}")
        current[key] = value
    for key in ("track", "gpu_count", "wall_hours"):
        if key not in top:
            raise ManifestError(f"missing required key {key!r}")
    train = []
    for st in stanzas:
        if "name" not in st:
            raise ManifestError("[train_data] stanza without a name")
        train.append(TrainData(
            st["name"],
            _typed("speech_hours", st.get("speech_hours", "0"), float),
            _typed("image_count", st.get("image_count", "0"), int),
            _typed("video_hours", st.get("video_hours", "0"), float),
        ))
    unknown = set(top) - {"track", "gpu_count", "wall_hours", "description", *OPTIONAL_KEYS}
    if unknown:
        raise ManifestError(f"unknown key(s) {sorted(unknown)}")
    return SubmissionManifest(
        top["track"],
        _typed("gpu_count", top["gpu_count"], int),
        _typed("wall_hours", top["wall_hours"], float),
        tuple(train),
        top.get("description", ""),
        {k: top[k] for k in OPTIONAL_KEYS if k in top},
    )


def load_manifest(path) -> SubmissionManifest:
    return parse_manifest(Path(path).read_text())


def format_manifest(m: SubmissionManifest) -> str:
    lines = [f"track = {m.track}", f"gpu_count = {m.gpu_count}", f"wall_hours = {m.wall_hours!r}"]
    if m.description:
        lines.append(f"description = {m.description}")
    lines += [f"{k} = {v}" for k, v in m.extra.items()]
    for t in m.train_data:
        lines += ["", "[train_data]", f"name = {t.name}", f"speech_hours = {t.speech_hours!r}",
                  f"image_count = {t.image_count}", f"video_hours = {t.video_hours!r}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- budget


def compute_budget(manifest: SubmissionManifest) -> float:
    """GPU-hours: number of GPUs times wall-clock training hours."""
    return manifest.gpu_count * manifest.wall_hours


@dataclass(frozen=True)
class BudgetAssessment:
    gpu_hours: float
    track: str  # "A" (fits the low-budget track) or "B"
    advisory: str | None = None

    @property
    def label(self) -> str:
        return "track-A compatible" if self.track == "A" else "track-B"


def assess_budget(manifest: SubmissionManifest) -> BudgetAssessment:
    hours = compute_budget(manifest)
    track = "A" if hours <= LOW_BUDGET_LIMIT else "B"
    advisory = None
    if manifest.track == "low_budget" and track == "B":
        advisory = (f"{hours:g} GPU-hours exceeds the ~{LOW_BUDGET_LIMIT:g} GPU-hour guideline "
                    f"for low-budget submissions")
    return BudgetAssessment(hours, track, advisory)


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check]
    budget: BudgetAssessment | None = None

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        out = {"ok": self.ok, "checks": [asdict(c) for c in self.checks]}
        if self.budget is not None:
            out["budget"] = {"gpu_hours": self.budget.gpu_hours, "track": self.budget.label,
                             "advisory": self.budget.advisory}
        return out


def _check_feature_tree(root: Path) -> tuple[int, list[str]]:
    n, errors = 0, []
    for p in sorted(root.rglob("*")):
        if p.is_file() and not p.name.startswith(".") and p.suffix != ".item":
            try:
                read_matrix(p)
                n += 1
            except (FormatError, OSError, ValueError) as err:
                errors.append(str(err))
    return n, errors


def _check_tables(root: Path, loader) -> tuple[int, list[str]]:
    n, errors = 0, []
    for p in sorted(root.rglob("*.txt")):
        try:
            loader(p)
            n += 1
        except (FormatError, OSError, ValueError) as err:
            errors.append(str(err))
    return n, errors


_INPUTS = {
    "phonetic": ("features", _check_feature_tree),
    "lexical": ("scores", lambda r: _check_tables(r, load_scored_file)),
    "syntactic": ("scores", lambda r: _check_tables(r, load_scored_file)),
    "semantic": ("features", _check_feature_tree),
}


def validate_submission(directory) -> ValidationReport:
    """Check a submission directory; failures are reported, never raised.

    Layout: ``manifest.txt``, ``phonetic/`` and ``semantic/`` feature trees,
    ``lexical/`` and ``syntactic/`` scored ``*.txt`` files.
    """
    root = Path(directory)
    checks = []
    manifest = None
    budget = None
    mpath = root / "manifest.txt"
    if not mpath.is_file():
        checks.append(Check("manifest", False, "manifest.txt absent"))
    else:
        try:
            manifest = load_manifest(mpath)
            budget = assess_budget(manifest)
            checks.append(Check("manifest", True, f"{budget.gpu_hours:g} GPU-hours, {budget.label}"))
        except ManifestError as err:
            checks.append(Check("manifest", False, f"invariant violation: {err}"))

    present = {}
    for metric, (kind, check) in _INPUTS.items():
        sub = root / metric
        n, errors = check(sub) if sub.is_dir() else (0, [])
        if errors:
            checks.append(Check(metric, False, f"{len(errors)} unparseable file(s): {errors[0]}"))
        elif n == 0:
            checks.append(Check(metric, False, f"{metric} inputs absent"))
        else:
            checks.append(Check(metric, True, f"{n} {kind} file(s)"))
        present[metric] = n > 0 and not errors

    checks.append(Check("checklist.budget_stated", manifest is not None,
                        "budget stated in manifest" if manifest else "no valid budget"))
    absent = [m for m, ok in present.items() if not ok]
    checks.append(Check("checklist.all_four_conditions", not absent,
                        "all 4 evaluation conditions present" if not absent
                        else f"missing: {', '.join(absent)}"))
    described = manifest is not None and any(
        t.speech_hours > 0 or t.image_count > 0 or t.video_hours > 0 for t in manifest.train_data)
    checks.append(Check("checklist.training_data_described", described,
                        "training data quantified" if described else "no training data quantities"))
    return ValidationReport(checks, budget)


# ---------------------------------------------------------------- reports


def config_hash(config: Mapping) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class Cell:
    value: float
    version: str
    config_hash: str


@dataclass
class ScoreReport:
    cells: dict[tuple[str, str], Cell] = field(default_factory=dict)
    gpu_hours: float | None = None
    track: str | None = None

    def __eq__(self, other):
        if not isinstance(other, ScoreReport):
            return NotImplemented
        return (dict(sorted(self.cells.items())) == dict(sorted(other.cells.items()))
                and self.gpu_hours == other.gpu_hours and self.track == other.track)

    def put(self, split: str, column: str, cell: Cell) -> None:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        if column not in COLUMNS:
            raise ValueError(f"unknown column {column!r}")
        key = (split, column)
        old = self.cells.get(key)
        if old is not None and old != cell:
            raise ReportConflict(f"conflicting results for cell {split}/{column}: "
                                 f"{old.value!r} vs {cell.value!r}")
        self.cells[key] = cell

    def to_json(self) -> dict:
        return {
            "cells": [{"split": s, "column": c, "value": v.value, "version": v.version,
                       "config_hash": v.config_hash}
                      for (s, c), v in sorted(self.cells.items(), key=_grid_order)],
            "budget": {"gpu_hours": self.gpu_hours, "track": self.track},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ScoreReport":
        rep = cls()
        for c in data["cells"]:
            rep.put(c["split"], c["column"], Cell(float(c["value"]), c["version"], c["config_hash"]))
        budget = data.get("budget") or {}
        rep.gpu_hours = budget.get("gpu_hours")
        rep.track = budget.get("track")
        return rep

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.gpu_hours is not None:
            buf.write(f"# gpu_hours={self.gpu_hours!r}\n")
        if self.track is not None:
            buf.write(f"# track={self.track}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["split", "column", "value", "version", "config_hash"])
        for split in SPLITS:
            for col in COLUMNS:
                cell = self.cells.get((split, col))
                if cell is None:
                    w.writerow([split, col, MISSING, "", ""])
                else:
                    w.writerow([split, col, repr(cell.value), cell.version, cell.config_hash])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScoreReport":
        rep = cls()
        body = []
        for line in text.splitlines():
            if line.startswith("# gpu_hours="):
                rep.gpu_hours = float(line.split("=", 1)[1])
            elif line.startswith("# track="):
                rep.track = line.split("=", 1)[1]
            elif line.strip():
                body.append(line)
        for row in csv.DictReader(body):
            if row["value"] != MISSING:
                rep.put(row["split"], row["column"],
                        Cell(float(row["value"]), row["version"], row["config_hash"]))
        return rep

    def render_text(self) -> str:
        heads = ["Set", "Within", "", "Across", "", "Lexical", "Syntactic",
                 "Un-weighted", "", "Weighted", ""]
        subs = ["", "clean", "other", "clean", "other", "", "", "synth.", "libri.", "synth.", "libri."]
        rows = [heads, subs]
        for split in SPLITS:
            row = [split]
            for col in COLUMNS:
                cell = self.cells.get((split, col))
                if cell is None:
                    row.append(MISSING)
                elif col.startswith("semantic"):
                    row.append(f"{cell.value:.2f}")
                else:
                    row.append(f"{cell.value:.4f}")
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(heads))]
        lines = ["  ".join(v.rjust(w) for v, w in zip(r, widths)).rstrip() for r in rows]
        title = "Phonetic ABX error (lower is better) | lexical, syntactic accuracy | semantic rho x 100"
        if self.gpu_hours is not None:
            title += f"\nBudget: {self.gpu_hours:g} GPU-hours ({self.track})"
        return title + "\n" + "\n".join(lines) + "\n"


def _grid_order(kv):
    (split, col), _ = kv
    return SPLITS.index(split), COLUMNS.index(col)


def result_cells(result: Mapping) -> list[tuple[str, str, Cell]]:
    """Map one metric result (as written by the CLI) onto report grid cells."""
    metric = result["metric"]
    split = result.get("split", "dev")
    version = result.get("version", __version__)
    chash = result.get("config_hash") or config_hash(result.get("config", {}))
    if metric == "abx":
        side = result["condition"].split("_")[0]
        subset = result.get("subset", "clean")
        return [(split, f"phonetic.{side}.{subset}", Cell(float(result["error_rate"]), version, chash))]
    if metric in ("lexical", "syntactic"):
        return [(split, metric, Cell(float(result["accuracy"]), version, chash))]
    if metric == "semantic":
        subset = result.get("subset", "synth")
        return [(split, f"semantic.{kind}.{subset}", Cell(float(result[kind]), version, chash))
                for kind in ("unweighted", "weighted")]
    raise ValueError(f"unknown metric {metric!r}")


def assemble_report(results: Iterable[Mapping], manifest: SubmissionManifest | None = None) -> ScoreReport:
    results = list(results)
    if not results:
        raise ValueError("no metric result to report")
    rep = ScoreReport()
    for r in results:
        for split, col, cell in result_cells(r):
            rep.put(split, col, cell)
    if manifest is not None:
        budget = assess_budget(manifest)
        rep.gpu_hours = budget.gpu_hours
        rep.track = budget.label
    return rep
