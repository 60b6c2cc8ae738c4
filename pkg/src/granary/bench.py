"""Throughput and memory harnesses for the non-service filter path.

The service-free path (LID verification plus transcription text
filters) is the part of the pipeline whose speed is entirely this
package's concern, so it is what the performance targets are stated
against: records/second/worker, scaling when workers double, and peak
RSS while streaming a large manifest.

Runnable directly: ``python -m granary.bench throughput --workers 2``.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import resource
import sys
import time
from dataclasses import dataclass

from .asr_filters import AsrFilterConfig, AsrFilterResources, filter_record
from .manifest import read_manifest, record_to_line
from .records import UtteranceRecord

_WORDS = (
    "river", "stone", "morning", "garden", "window", "travel", "signal", "harbor",
    "meadow", "willow", "amber", "copper", "violet", "ember", "cedar", "falcon",
)

_TEXT_POOL_SIZE = 64


def _bench_texts() -> tuple[str, ...]:
    texts = []
    for i in range(_TEXT_POOL_SIZE):
        words = [_WORDS[(i + j * 3) % len(_WORDS)] for j in range(8)]
        if i % 17 == 16:
            # A few records must take the drop path too.
            words.append("x" * 44)
        texts.append(" ".join(words))
    return tuple(texts)


def build_bench_records(count: int, seed: int = 0) -> list[UtteranceRecord]:
    """Short, cheap records exercising every ASR-side filter."""
    texts = _bench_texts()
    lids = ("en",)
    records = []
    for i in range(count):
        text = texts[(seed + i) % _TEXT_POOL_SIZE]
        records.append(
            UtteranceRecord(
                id=f"bench-{i:07d}",
                audio_ref=f"bench://{i:07d}.wav",
                offset_s=0.0,
                duration_s=round(len(text) / 15.0, 2),
                text=text,
                lang_target="en",
                lid_pred="en",
                lid_prob=0.95,
                segment_lids=lids,
                corpus="bench",
            )
        )
    return records


def write_bench_manifest(path, count: int, seed: int = 0) -> int:
    """Stream ``count`` benchmark records to a manifest file."""
    texts = _bench_texts()
    written = 0
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(count):
            text = texts[(seed + i) % _TEXT_POOL_SIZE]
            record = UtteranceRecord(
                id=f"bench-{i:07d}",
                audio_ref=f"bench://{i:07d}.wav",
                offset_s=0.0,
                duration_s=round(len(text) / 15.0, 2),
                text=text,
                lang_target="en",
                lid_pred="en",
                lid_prob=0.95,
                segment_lids=("en",),
                corpus="bench",
            )
            fh.write(record_to_line(record))
            fh.write("\n")
            written += 1
    return written


@dataclass
class ThroughputResult:
    workers: int
    total_records: int
    elapsed_s: float

    @property
    def records_per_s(self) -> float:
        return self.total_records / self.elapsed_s if self.elapsed_s > 0 else float("inf")

    @property
    def records_per_s_per_worker(self) -> float:
        return self.records_per_s / self.workers


def _filter_batch(records: list[UtteranceRecord], resources: AsrFilterResources) -> int:
    dropped = 0
    for record in records:
        if filter_record(record, resources).dropped:
            dropped += 1
    return dropped


_WORKER_STATE: dict = {}


def _init_worker(count: int, seed: int, barrier) -> None:
    # Generation happens before the barrier so the timed section is filters only.
    _WORKER_STATE["records"] = build_bench_records(count, seed)
    _WORKER_STATE["resources"] = AsrFilterResources.from_config(AsrFilterConfig())
    _WORKER_STATE["barrier"] = barrier


def _run_worker(worker_id: int) -> tuple[int, float]:
    records = _WORKER_STATE["records"]
    resources = _WORKER_STATE["resources"]
    _WORKER_STATE["barrier"].wait()
    started = time.perf_counter()
    _filter_batch(records, resources)
    return len(records), time.perf_counter() - started


def measure_throughput(workers: int, records_per_worker: int, seed: int = 0) -> ThroughputResult:
    """Filter-path throughput with ``workers`` processes filtering in parallel.

    Workers pre-build their batches, synchronize on a barrier, then
    filter; the reported time is the slowest worker's filter phase, so
    process startup does not pollute the scaling measurement.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1:
        records = build_bench_records(records_per_worker, seed)
        resources = AsrFilterResources.from_config(AsrFilterConfig())
        started = time.perf_counter()
        _filter_batch(records, resources)
        elapsed = time.perf_counter() - started
        return ThroughputResult(workers=1, total_records=len(records), elapsed_s=elapsed)

    ctx = multiprocessing.get_context("fork")
    barrier = ctx.Barrier(workers)
    with ctx.Pool(workers, initializer=_init_worker, initargs=(records_per_worker, seed, barrier)) as pool:
        outcomes = pool.map(_run_worker, range(workers), chunksize=1)
    total = sum(count for count, _ in outcomes)
    slowest = max(duration for _, duration in outcomes)
    return ThroughputResult(workers=workers, total_records=total, elapsed_s=slowest)


def run_filter_path(input_path, output_path, sidecar_path) -> tuple[int, int]:
    """Stream a manifest through the ASR-side filters; constant memory."""
    resources = AsrFilterResources.from_config(AsrFilterConfig())
    kept = dropped = 0
    with open(input_path, "r", encoding="utf-8") as src, open(
        output_path, "w", encoding="utf-8"
    ) as out, open(sidecar_path, "w", encoding="utf-8") as side:
        for record in read_manifest(src):
            decision = filter_record(record, resources)
            if decision.dropped:
                dropped += 1
                side.write(record_to_line(record.with_flags(*decision.flags)))
                side.write("\n")
            else:
                kept += 1
                out.write(record_to_line(record))
                out.write("\n")
    return kept, dropped


def peak_rss_bytes() -> int:
    # ru_maxrss is KiB on Linux.
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="granary-bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    tp = sub.add_parser("throughput", help="filter-path records/second")
    tp.add_argument("--workers", type=int, default=1)
    tp.add_argument("--records", type=int, default=200_000, help="records per worker")
    tp.add_argument("--seed", type=int, default=0)

    fp = sub.add_parser("filter-path", help="stream a manifest through the filters")
    fp.add_argument("--input", required=True)
    fp.add_argument("--output", required=True)
    fp.add_argument("--sidecar", required=True)

    gen = sub.add_parser("gen-manifest", help="write a benchmark manifest")
    gen.add_argument("--output", required=True)
    gen.add_argument("--count", type=int, default=1_000_000)
    gen.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    if args.command == "throughput":
        result = measure_throughput(args.workers, args.records, args.seed)
        print(
            json.dumps(
                {
                    "workers": result.workers,
                    "total_records": result.total_records,
                    "elapsed_s": result.elapsed_s,
                    "records_per_s": result.records_per_s,
                    "records_per_s_per_worker": result.records_per_s_per_worker,
                }
            )
        )
    elif args.command == "filter-path":
        started = time.perf_counter()
        kept, dropped = run_filter_path(args.input, args.output, args.sidecar)
        print(
            json.dumps(
                {
                    "kept": kept,
                    "dropped": dropped,
                    "total": kept + dropped,
                    "elapsed_s": time.perf_counter() - started,
                    "peak_rss_bytes": peak_rss_bytes(),
                }
            )
        )
    elif args.command == "gen-manifest":
        written = write_bench_manifest(args.output, args.count, args.seed)
        print(json.dumps({"written": written}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
