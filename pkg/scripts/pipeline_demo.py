"""End-to-end run on synthetic data: fixtures, all four metrics, report table.

    python3 scripts/pipeline_demo.py --out /tmp/zrs_demo

Drives the installed ``zrseval`` CLI in-process, so the files it leaves
behind are exactly what the command line would produce.
"""

import argparse
import contextlib
import io
import sys
from pathlib import Path

from zrseval.cli import run


def step(*argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = run([str(a) for a in argv])
    if code != 0:
        raise SystemExit(f"step failed ({code}): zrseval {' '.join(map(str, argv))}")
    return buf.getvalue()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="zrs_demo")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--separability", type=float, default=0.3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    root = Path(args.out)
    res = root / "results"
    res.mkdir(parents=True, exist_ok=True)
    seed = ["--seed", args.seed]

    # phonetic: MFCC-free synthetic features, both conditions, both subsets
    for sub, sep in (("clean", args.separability), ("other", args.separability / 2)):
        fx = root / f"abx_{sub}"
        step("gen-fixture", "--kind", "abx", "--separability", sep, "--n-phones", 4, "--n-contexts", 6,
             "--tokens", 3, "--out", fx, *seed)
        for cond in ("within", "across"):
            step("abx", "--features", fx / "features", "--items", fx / "items.item", "--condition", cond,
                 "--subset", sub, "--threads", args.threads, "--report", res / f"abx_{cond}_{sub}.json")

    for kind, wf in (("lexical", 0.7), ("syntactic", 0.6)):
        step("gen-fixture", "--kind", kind, "--win-fraction", wf, "--out", root / kind, *seed)
        step(kind, "--scores", root / kind / "scores.txt", "--gold", root / kind / "gold.txt",
             "--ci", 1000, "--report", res / f"{kind}.json", *seed)

    for sub, noise in (("synth", 0.3), ("libri", 0.6)):
        step("gen-fixture", "--kind", "semantic", "--noise", noise, "--out", root / f"sem_{sub}", *seed)
        step("semantic", "--features", root / f"sem_{sub}" / "features", "--gold", root / f"sem_{sub}" / "gold.txt",
             "--subset", sub, "--report", res / f"semantic_{sub}.json")

    # audio front end and quantization, not part of the score table
    step("gen-fixture", "--kind", "audio", "--n-files", 3, "--out", root / "wav", *seed)
    step("mfcc", "--input", root / "wav", "--output", root / "mfcc")
    step("quantize", "--features", root / "mfcc", "--codebook", root / "codebook.zrf", "--fit", "--k", 8,
         "--output", root / "units.txt", *seed)

    step("gen-fixture", "--kind", "submission", "--out", root / "submission", *seed)
    step("validate", root / "submission", "--report", root / "validation.json")
    table = step("report", "--in", res, "--manifest", root / "submission" / "manifest.txt",
                 "--out", root / "table", "--format", "text")
    sys.stdout.write(table)
    print(f"\nartifacts under {root.resolve()}")


if __name__ == "__main__":
    main()
