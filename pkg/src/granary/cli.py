"""Command line interface.

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 service
error rate above the configured cap.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .manifest import ManifestWriteError
from .mocks import MockServer
from .pipeline import (
    PipelineConfig,
    PipelineConfigError,
    load_config,
    run_pipeline,
    validate_config,
)
from .stats import compute_stats_from_paths, render_report

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_SERVICE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="granary",
        description="Curation pipeline for pseudo-labeled speech manifests.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the stage chain over a manifest")
    run_p.add_argument("--config", help="YAML pipeline config (defaults apply when omitted)")
    run_p.add_argument("--input", required=True, help="input manifest (JSONL)")
    run_p.add_argument("--output", required=True, help="kept-records manifest")
    run_p.add_argument("--sidecar", help="dropped-records manifest (default: <output>.sidecar)")
    run_p.add_argument("--report", help="write a retention report here (.json for JSON)")
    run_p.add_argument("--seed", type=int, help="override config seed")
    run_p.add_argument("--shard-count", type=int, help="override config shard_count")
    run_p.add_argument("--worker-count", type=int, help="override config worker_count")
    run_p.add_argument("--stages", help="override stage chain, comma separated")
    run_p.set_defaults(func=_cmd_run)

    stats_p = sub.add_parser("stats", help="retention report from existing manifests")
    stats_p.add_argument("--input", required=True, help="unfiltered manifest")
    stats_p.add_argument("--output", required=True, help="filtered manifest")
    stats_p.add_argument("--sidecar", help="dropped-records manifest (for flag counts)")
    stats_p.add_argument("--format", choices=("text", "json"), default="text")
    stats_p.set_defaults(func=_cmd_stats)

    validate_p = sub.add_parser("validate-config", help="check a pipeline config")
    validate_p.add_argument("--config", required=True)
    validate_p.set_defaults(func=_cmd_validate_config)

    mock_p = sub.add_parser("mock-server", help="serve the seeded mock model services")
    mock_p.add_argument("--seed", type=int, default=0)
    mock_p.add_argument("--port", type=int, default=0, help="0 picks an ephemeral port")
    mock_p.add_argument("--host", default="127.0.0.1")
    mock_p.set_defaults(func=_cmd_mock_server)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.shard_count is not None:
        overrides["shard_count"] = args.shard_count
    if args.worker_count is not None:
        overrides["worker_count"] = args.worker_count
    if args.stages:
        overrides["stages"] = tuple(s.strip() for s in args.stages.split(",") if s.strip())
    if overrides:
        config = dataclasses.replace(config, **overrides)
    config.ensure_valid()

    sidecar = args.sidecar if args.sidecar else f"{args.output}.sidecar"
    result = run_pipeline(config, args.input, args.output, sidecar)

    if args.report:
        fmt = "json" if str(args.report).endswith(".json") else "text"
        Path(args.report).write_text(render_report(result.stats, fmt) + "\n", encoding="utf-8")

    print(
        f"processed {result.total} records: kept {result.kept}, dropped {result.dropped}, "
        f"parse errors {result.parse_errors} ({result.elapsed_s:.1f}s)"
    )
    if result.exceeded_error_cap:
        print(
            f"service error rate above cap: {result.service_errors}/{result.total} records failed",
            file=sys.stderr,
        )
        return EXIT_SERVICE
    return EXIT_OK


def _cmd_stats(args: argparse.Namespace) -> int:
    stats = compute_stats_from_paths(args.input, args.output, args.sidecar)
    print(render_report(stats, args.format))
    return EXIT_OK


def _cmd_validate_config(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    problems = validate_config(config)
    if problems:
        for problem in problems:
            print(f"problem: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    print("ok")
    return EXIT_OK


def _cmd_mock_server(args: argparse.Namespace) -> int:
    server = MockServer(seed=args.seed, port=args.port, host=args.host)
    print(json.dumps({"url": server.base_url, "seed": args.seed}), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except PipelineConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except ManifestWriteError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
