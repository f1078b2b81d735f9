"""``zrseval`` command line: one subcommand per metric plus plumbing.

Results go to stdout as JSON; diagnostics go to stderr.  Exit status is 0
on success, 1 on invalid input or a failed validation, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .featio import (FormatError, load_feature_dir, load_gold_pairs, load_item_file,
                     load_scored_file, load_similarity_file, write_feature_file)

log = logging.getLogger("zrseval")


def _emit(payload: dict, args) -> None:
    text = json.dumps(payload, indent=2, sort_keys=False)
    if getattr(args, "report", None):
        Path(args.report).write_text(text + "\n")
        log.info("wrote %s", args.report)
    print(text)


def _stamp(result: dict, args, config: dict) -> dict:
    from .report import config_hash

    config = {"version": __version__, **config}
    return {**result, "split": args.split, "version": __version__,
            "config": config, "config_hash": config_hash(config)}


# ---------------------------------------------------------------- commands


def cmd_mfcc(args) -> int:
    from .mfcc import MfccConfig, extract_mfcc, read_audio

    cfg = MfccConfig(sample_rate=args.sample_rate, window_len=args.window_ms / 1000.0,
                     hop=args.hop_ms / 1000.0, normalize=args.normalize)
    src = Path(args.input)
    files = sorted(p for p in src.iterdir() if p.is_file()) if src.is_dir() else [src]
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".zrf" if args.format == "binary" else ".txt"
    written = {}
    for f in files:
        seq = extract_mfcc(read_audio(f, args.sample_rate), cfg, f.stem)
        write_feature_file(out / (f.stem + ext), seq, args.format)
        written[f.stem] = list(seq.frames.shape)
    _emit({"command": "mfcc", "output": str(out), "files": written}, args)
    return 0


def cmd_quantize(args) -> int:
    from .quantize import kmeans_assign, kmeans_fit, load_codebook, save_codebook, write_pseudo_text

    feats = load_feature_dir(args.features, args.feature_format, threads=args.threads)
    if args.fit:
        cb = kmeans_fit(feats, args.k, args.seed, args.max_iter, args.tol, args.n_init, args.threads)
        save_codebook(args.codebook, cb)
    else:
        cb = load_codebook(args.codebook)
    texts = [kmeans_assign(cb, feats[u], args.dedup) for u in sorted(feats)]
    if args.output:
        write_pseudo_text(args.output, texts)
    _emit({"command": "quantize", "k": cb.k, "seed": cb.seed, "iterations": cb.n_iter,
           "inertia": cb.training_inertia, "codebook": str(args.codebook),
           "utterances": len(texts), "output": args.output}, args)
    return 0


def cmd_abx(args) -> int:
    from .abx import AbxTask, evaluate_abx

    feats = load_feature_dir(args.features, args.feature_format, args.frame_shift, args.threads)
    task = AbxTask(load_item_file(args.items), args.condition, args.metric, args.across_mode)
    score = evaluate_abx(feats, task, threads=args.threads)
    log.info("ABX %s: %.4f over %d triples (%d cells excluded)", task.condition,
             score.error_rate, score.n_triples, len(score.excluded_cells))
    config = {"condition": task.condition, "frame_distance": task.frame_distance,
              "across_mode": task.across_mode, "frame_shift": args.frame_shift}
    _emit(_stamp({**score.to_json(), "subset": args.subset}, args, config), args)
    return 0


def cmd_paired(args) -> int:
    from .probmetrics import bootstrap_ci, paired_accuracy

    scores = load_scored_file(args.scores)
    gold = load_gold_pairs(args.gold)
    acc = paired_accuracy(scores, gold, args.normalization)
    result = {"metric": args.command, **acc.to_json()}
    if args.ci:
        result["ci95"] = list(bootstrap_ci(scores, gold, args.ci, args.seed, normalization=args.normalization))
    config = {"normalization": args.normalization, "ci": args.ci, "seed": args.seed if args.ci else None}
    _emit(_stamp(result, args, config), args)
    return 0


def cmd_semantic(args) -> int:
    from .semantic import evaluate_semantic

    feats = load_feature_dir(args.features, args.feature_format, threads=args.threads)
    score = evaluate_semantic(feats, load_similarity_file(args.gold), args.pool)
    for sid, reason in score.excluded.items():
        log.warning("subset %s excluded: %s", sid, reason)
    config = {"pool": args.pool, "distance": "cosine"}
    _emit(_stamp({**score.to_json(), "subset": args.subset}, args, config), args)
    return 0


def cmd_validate(args) -> int:
    from .report import validate_submission

    rep = validate_submission(args.directory)
    for c in rep.checks:
        log.info("%s %s: %s", "PASS" if c.passed else "FAIL", c.name, c.detail)
    if rep.budget and rep.budget.advisory:
        log.warning(rep.budget.advisory)
    _emit(rep.to_json(), args)
    return 0 if rep.ok else 1


def cmd_report(args) -> int:
    from .report import assemble_report, load_manifest

    results = [json.loads(p.read_text()) for p in sorted(Path(args.input).glob("*.json"))]
    results = [r for r in results if r.get("metric") in ("abx", "lexical", "syntactic", "semantic")]
    manifest = load_manifest(args.manifest) if args.manifest else None
    rep = assemble_report(results, manifest)
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        prefix.with_suffix(".json").write_text(json.dumps(rep.to_json(), indent=2) + "\n")
        prefix.with_suffix(".csv").write_text(rep.to_csv())
        prefix.with_suffix(".txt").write_text(rep.render_text())
    if args.format == "text":
        print(rep.render_text(), end="")
    elif args.format == "csv":
        print(rep.to_csv(), end="")
    else:
        print(json.dumps(rep.to_json(), indent=2))
    return 0


def cmd_gen_fixture(args) -> int:
    from .fixtures import gen_fixture

    params = {}
    if args.kind == "abx":
        params = dict(separability=args.separability, n_phones=args.n_phones, n_contexts=args.n_contexts,
                      n_speakers=args.n_speakers, tokens=args.tokens, mean_frames=args.mean_frames,
                      dim=args.dim, constant=args.constant)
    elif args.kind in ("lexical", "syntactic"):
        params = dict(n_pairs=args.n_pairs, win_fraction=args.win_fraction)
    elif args.kind == "semantic":
        params = dict(subset_sizes=tuple(args.subset_sizes), noise=args.noise)
    elif args.kind == "audio":
        params = dict(n_files=args.n_files, duration=args.duration)
    paths = gen_fixture(args.kind, args.out, seed=args.seed, **params)
    _emit({"command": "gen-fixture", "kind": args.kind, "seed": args.seed,
           **{k: str(v) for k, v in paths.items()}}, args)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--format", default=None, help="output/feature format where applicable")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="zrseval", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    p = add("mfcc", cmd_mfcc, "39-dim MFCC features from WAV / raw f32 audio")
    p.add_argument("--input", required=True, help="audio file or directory")
    p.add_argument("--output", required=True, help="feature output directory")
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--window-ms", type=float, default=25.0)
    p.add_argument("--hop-ms", type=float, default=10.0)
    p.add_argument("--normalize", action="store_true", help="per-utterance mean/variance normalization")
    p.add_argument("--report")

    p = add("quantize", cmd_quantize, "k-means codebook and pseudo-text")
    p.add_argument("--features", required=True)
    p.add_argument("--codebook", required=True, help="codebook path (written with --fit, read otherwise)")
    p.add_argument("--fit", action="store_true")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--n-init", type=int, default=10, help="k-means++ restarts, best inertia kept")
    p.add_argument("--dedup", action="store_true", help="collapse repeated consecutive units")
    p.add_argument("--output", help="pseudo-text output file")
    p.add_argument("--report")

    p = add("abx", cmd_abx, "phonetic ABX error rate")
    p.add_argument("--features", required=True)
    p.add_argument("--items", required=True)
    p.add_argument("--condition", choices=["within", "across"], default="within")
    p.add_argument("--metric", choices=["cosine", "angular", "euclidean"], default="cosine")
    p.add_argument("--across-mode", choices=["pooled", "per_speaker"], default="pooled")
    p.add_argument("--frame-shift", type=float, default=0.01, help="seconds per feature frame")
    p.add_argument("--split", choices=["dev", "test"], default="dev")
    p.add_argument("--subset", choices=["clean", "other"], default="clean")
    p.add_argument("--report")

    for name in ("lexical", "syntactic"):
        p = add(name, cmd_paired, f"{name} paired accuracy from pseudo-log-probabilities")
        p.add_argument("--scores", required=True)
        p.add_argument("--gold", required=True)
        p.add_argument("--ci", type=int, default=0, metavar="N", help="bootstrap resamples (0: no interval)")
        p.add_argument("--normalization", choices=["none", "length"], default="none")
        p.add_argument("--split", choices=["dev", "test"], default="dev")
        p.add_argument("--report")

    p = add("semantic", cmd_semantic, "semantic similarity correlation")
    p.add_argument("--features", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pool", choices=["max", "mean", "last"], default="max")
    p.add_argument("--split", choices=["dev", "test"], default="dev")
    p.add_argument("--subset", choices=["synth", "libri"], default="synth")
    p.add_argument("--report")

    p = add("validate", cmd_validate, "check a submission directory")
    p.add_argument("directory")
    p.add_argument("--report")

    p = add("report", cmd_report, "assemble metric results into the score table")
    p.add_argument("--in", dest="input", required=True, help="directory of result JSON files")
    p.add_argument("--manifest")
    p.add_argument("--out", help="write PREFIX.json, PREFIX.csv and PREFIX.txt")

    p = add("gen-fixture", cmd_gen_fixture, "write a synthetic corpus with a known outcome")
    p.add_argument("--kind", required=True, choices=["abx", "lexical", "syntactic", "semantic", "audio", "submission"])
    p.add_argument("--out", required=True)
    p.add_argument("--separability", type=float, default=1.0)
    p.add_argument("--constant", action="store_true", help="abx: every frame the same vector")
    p.add_argument("--n-phones", type=int, default=2)
    p.add_argument("--n-contexts", type=int, default=2)
    p.add_argument("--n-speakers", type=int, default=2)
    p.add_argument("--tokens", type=int, default=3)
    p.add_argument("--mean-frames", type=int, default=10)
    p.add_argument("--dim", type=int, default=39)
    p.add_argument("--n-pairs", type=int, default=400)
    p.add_argument("--win-fraction", type=float, default=0.75)
    p.add_argument("--subset-sizes", type=int, nargs="+", default=[10, 20, 40])
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--n-files", type=int, default=3)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--report")
    return parser


_FORMAT_DEFAULTS = {"mfcc": "binary", "report": "json"}
_FORMAT_CHOICES = {"mfcc": ("binary", "text"), "report": ("json", "text", "csv")}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    choices = _FORMAT_CHOICES.get(args.command, ("binary", "text", "auto"))
    if args.format is None:
        args.format = _FORMAT_DEFAULTS.get(args.command, "auto")
    if args.format not in choices:
        print(f"zrseval {args.command}: --format must be one of {', '.join(choices)}", file=sys.stderr)
        return 2
    args.feature_format = args.format
    try:
        return args.func(args)
    except (FormatError, ValueError, KeyError, FileNotFoundError) as err:
        print(f"zrseval {args.command}: error: {err}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
