#!/usr/bin/env python3
"""Benchmark the service-free filter path.

Thin wrapper over ``python3 -m granary.bench`` so the measurement
harness sits next to the other experiment scripts. Examples:

    python3 scripts/bench_filters.py throughput --workers 2 --records 200000
    python3 scripts/bench_filters.py gen-manifest --output /tmp/bench.jsonl --count 1000000
    python3 scripts/bench_filters.py filter-path --input /tmp/bench.jsonl \\
        --output /tmp/kept.jsonl --sidecar /tmp/dropped.jsonl
"""

import sys

from granary.bench import main

if __name__ == "__main__":
    sys.exit(main())
