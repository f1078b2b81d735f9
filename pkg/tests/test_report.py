import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from zrseval.fixtures import gen_submission
from zrseval.report import (COLUMNS, MISSING, Cell, ManifestError, ReportConflict, ScoreReport,
                            SubmissionManifest, TrainData, assemble_report, assess_budget,
                            compute_budget, config_hash, format_manifest, parse_manifest,
                            validate_submission)

MANIFEST = """\
track = low_budget
gpu_count = 3
wall_hours = 24   # three days on one node
description = visually grounded baseline
aic = 1234.5

[train_data]
name = SpokenCOCO
speech_hours = 742
image_count = 118287

[train_data]
name = LibriSpeech
speech_hours = 960
"""


def manifest(gpus, hours, track="low_budget"):
    return SubmissionManifest(track, gpus, hours, (TrainData("corpus", 10.0),))


def test_parse_manifest():
    m = parse_manifest(MANIFEST)
    assert (m.track, m.gpu_count, m.wall_hours) == ("low_budget", 3, 24.0)
    assert [t.name for t in m.train_data] == ["SpokenCOCO", "LibriSpeech"]
    assert m.train_data[0].image_count == 118287
    assert m.extra == {"aic": "1234.5"}
    assert parse_manifest(format_manifest(m)) == m


@pytest.mark.parametrize("text, msg", [
    ("track = low_budget\ngpu_count = 1\n[train_data]\nname = x\n", "wall_hours"),
    ("track = mid\ngpu_count = 1\nwall_hours = 1\n[train_data]\nname = x\n", "track"),
    ("track = low_budget\ngpu_count = 1\nwall_hours = -4\n[train_data]\nname = x\n", "wall_hours"),
    ("track = low_budget\ngpu_count = 1\nwall_hours = 4\n", "train_data"),
    ("track = low_budget\ngpu_count = two\nwall_hours = 4\n[train_data]\nname = x\n", "gpu_count"),
    ("track = low_budget\ngpu_count = 1\nwall_hours = 4\ncolour = red\n[train_data]\nname = x\n", "unknown"),
])
def test_manifest_errors(text, msg):
    with pytest.raises(ManifestError, match=msg):
        parse_manifest(text)


# ---------------------------------------------------------------- budget


def test_budget_low():
    b = assess_budget(manifest(3, 24.0))
    assert b.gpu_hours == 72.0 and b.label == "track-A compatible" and b.advisory is None


def test_budget_high():
    b = assess_budget(manifest(5, 33.0, "high_budget"))
    assert b.gpu_hours == 165.0 and b.label == "track-B"


def test_budget_zero_gpus():
    assert compute_budget(manifest(0, 50.0)) == 0.0


def test_budget_advisory_is_soft():
    b = assess_budget(manifest(5, 33.0, "low_budget"))
    assert b.track == "B" and "165" in b.advisory


@given(st.integers(0, 512), st.fractions(0, 10_000, max_denominator=64))
def test_budget_product_exact(gpus, hours):
    h = float(hours)
    assert Fraction(compute_budget(manifest(gpus, h))) == Fraction(gpus * h)
    assert compute_budget(manifest(gpus, h)) == gpus * h


# ---------------------------------------------------------------- validation


def test_validate_complete(tmp_path):
    gen_submission(tmp_path / "sub", seed=1)
    rep = validate_submission(tmp_path / "sub")
    assert rep.ok, rep.failures()
    assert rep.budget.gpu_hours == 72.0


def test_validate_missing_semantic(tmp_path):
    gen_submission(tmp_path / "sub", seed=1, missing=("semantic",))
    rep = validate_submission(tmp_path / "sub")
    failed = {c.name: c.detail for c in rep.failures()}
    assert failed["semantic"] == "semantic inputs absent"
    assert set(failed) == {"semantic", "checklist.all_four_conditions"}


def test_validate_negative_hours(tmp_path):
    gen_submission(tmp_path / "sub", seed=1)
    m = tmp_path / "sub" / "manifest.txt"
    m.write_text(m.read_text().replace("wall_hours = 24.0", "wall_hours = -3"))
    rep = validate_submission(tmp_path / "sub")
    failed = {c.name: c.detail for c in rep.failures()}
    assert "invariant violation" in failed["manifest"]
    assert "checklist.budget_stated" in failed


def test_validate_unparseable(tmp_path):
    gen_submission(tmp_path / "sub", seed=1)
    (tmp_path / "sub" / "lexical" / "dev.txt").write_text("w1 nan\n")
    rep = validate_submission(tmp_path / "sub")
    assert [c.name for c in rep.failures()] == ["lexical", "checklist.all_four_conditions"]
    json.dumps(rep.to_json())


def test_validate_empty_dir(tmp_path):
    rep = validate_submission(tmp_path)
    assert not rep.ok
    assert {c.name for c in rep.failures()} >= {"manifest", "phonetic", "lexical", "syntactic", "semantic"}


# ---------------------------------------------------------------- reports


def abx_result(cond="within", value=0.1, split="dev", subset="clean", **config):
    cfg = {"condition": cond, **config}
    return {"metric": "abx", "condition": f"{cond}_speaker", "error_rate": value, "split": split,
            "subset": subset, "version": "0.1.0", "config_hash": config_hash(cfg)}


def full_results():
    out = []
    for split in ("dev", "test"):
        for cond in ("within", "across"):
            for sub in ("clean", "other"):
                out.append(abx_result(cond, 0.05 + 0.01 * len(out), split, sub))
        out.append({"metric": "lexical", "accuracy": 0.7125, "split": split, "config": {"k": 1}})
        out.append({"metric": "syntactic", "accuracy": 0.5531, "split": split, "config": {"k": 2}})
        for sub in ("synth", "libri"):
            out.append({"metric": "semantic", "unweighted": 9.65, "weighted": 15.09, "split": split,
                        "subset": sub, "config": {"pool": "max"}})
    return out


def test_only_abx():
    rep = assemble_report([abx_result("within"), abx_result("across", 0.2)])
    assert set(rep.cells) == {("dev", "phonetic.within.clean"), ("dev", "phonetic.across.clean")}
    text = rep.render_text()
    dev_line = next(line for line in text.splitlines() if line.lstrip().startswith("dev"))
    assert dev_line.count(MISSING) == len(COLUMNS) - 2
    csv_text = rep.to_csv()
    assert csv_text.count(MISSING) == 2 * len(COLUMNS) - 2


def test_cells_carry_version_and_hash():
    rep = assemble_report(full_results())
    assert len(rep.cells) == 2 * len(COLUMNS)
    assert all(c.version and len(c.config_hash) == 12 for c in rep.cells.values())


def test_csv_round_trip():
    m = manifest(3, 24.0)
    rep = assemble_report(full_results(), m)
    assert ScoreReport.from_csv(rep.to_csv()) == rep
    partial = assemble_report(full_results()[:3])
    assert ScoreReport.from_csv(partial.to_csv()) == partial


def test_json_round_trip():
    rep = assemble_report(full_results(), manifest(5, 33.0, "high_budget"))
    again = ScoreReport.from_json(json.loads(json.dumps(rep.to_json())))
    assert again == rep
    assert again.track == "track-B"
    assert ScoreReport.from_csv(again.to_csv()) == ScoreReport.from_json(rep.to_json())


def test_conflict_names_cell():
    with pytest.raises(ReportConflict, match="dev/phonetic.within.clean"):
        assemble_report([abx_result(value=0.1), abx_result(value=0.3)])


def test_identical_duplicate_is_idempotent():
    r = abx_result()
    assert assemble_report([r, r]) == assemble_report([r])


def test_order_independent():
    results = full_results()
    assert assemble_report(results) == assemble_report(results[::-1])


def test_empty_results():
    with pytest.raises(ValueError):
        assemble_report([])


def test_put_validation():
    rep = ScoreReport()
    with pytest.raises(ValueError):
        rep.put("train", "lexical", Cell(0.5, "v", "h"))
    with pytest.raises(ValueError):
        rep.put("dev", "phonetic", Cell(0.5, "v", "h"))


def test_config_hash_is_canonical():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
