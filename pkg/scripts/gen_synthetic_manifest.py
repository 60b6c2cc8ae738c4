#!/usr/bin/env python3
"""Generate a synthetic input manifest with known expected outcomes.

Writes two files: the manifest itself, and a truth file with one JSON
object per record giving its failure mode, the flags the pipeline is
expected to raise, and whether it should be dropped. Useful for
exercising a deployment end to end and diffing its sidecar against the
plan.

    python3 scripts/gen_synthetic_manifest.py --count 5000 --seed 3 \\
        --output /tmp/synth.jsonl --truth /tmp/synth.truth.jsonl
"""

import argparse
import dataclasses
import json
import sys

from granary.manifest import write_manifest_path
from granary.synthetic import SyntheticConfig, generate, plan_truth_obj


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--output", required=True, help="manifest path (JSONL)")
    parser.add_argument("--truth", help="truth path (default: <output>.truth.jsonl)")
    parser.add_argument("--count", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--failure-rate", type=float, default=0.35)
    parser.add_argument("--languages", help="comma separated subset, e.g. de,fr,ru")
    args = parser.parse_args(argv)

    cfg = SyntheticConfig(count=args.count, seed=args.seed, failure_rate=args.failure_rate)
    if args.languages:
        langs = tuple(l.strip() for l in args.languages.split(",") if l.strip())
        cfg = dataclasses.replace(cfg, languages=langs)

    plans = generate(cfg)
    write_manifest_path((plan.record for plan in plans), args.output)
    truth_path = args.truth or f"{args.output}.truth.jsonl"
    with open(truth_path, "w", encoding="utf-8") as fh:
        for plan in plans:
            fh.write(json.dumps(plan_truth_obj(plan), ensure_ascii=False))
            fh.write("\n")

    dropped = sum(plan.expect_drop for plan in plans)
    print(json.dumps({
        "records": len(plans),
        "expected_drops": dropped,
        "manifest": str(args.output),
        "truth": str(truth_path),
    }))
    return 0


if __name__ == "__main__":
    sys.exit(main())
