"""Time ABX on a synthetic 5,000-item corpus at several thread counts.

    python3 scripts/abx_perf.py --threads 1 2 4 8

Prints one JSON line per (condition, threads) run and checks that every
thread count reproduces the single-thread result exactly.
"""

import argparse
import json
import os
import time
from dataclasses import asdict

from zrseval.abx import AbxTask, evaluate_abx
from zrseval.fixtures import AbxFixture, make_abx


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--threads", type=int, nargs="+", default=[1, 8])
    ap.add_argument("--contexts", type=int, default=50)
    ap.add_argument("--speakers", type=int, default=5)
    ap.add_argument("--separability", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-cache", action="store_true", help="recompute distances per cell")
    args = ap.parse_args()

    params = AbxFixture(separability=args.separability, n_phones=4, n_contexts=args.contexts,
                        n_speakers=args.speakers, tokens=5, mean_frames=10, dim=39)
    t0 = time.perf_counter()
    features, items = make_abx(params, args.seed)
    print(json.dumps({"fixture": asdict(params), "items": len(items), "cpus": os.cpu_count(),
                      "generate_s": round(time.perf_counter() - t0, 3)}))

    for cond in ("within", "across"):
        reference = None
        for n in args.threads:
            t0 = time.perf_counter()
            score = evaluate_abx(features, AbxTask(items, cond), threads=n, cache=not args.no_cache)
            elapsed = time.perf_counter() - t0
            if reference is None:
                reference = score
            same = score.by_cell == reference.by_cell and score.error_rate == reference.error_rate
            print(json.dumps({"condition": cond, "threads": n, "seconds": round(elapsed, 3),
                              "triples": score.n_triples, "error_rate": score.error_rate,
                              "identical_to_first": same}))
            if not same:
                raise SystemExit(f"{cond}: result at {n} threads differs from {args.threads[0]} threads")


if __name__ == "__main__":
    main()
