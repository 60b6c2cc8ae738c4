"""Streaming curation pipeline: stage chain, sharded execution, accounting.

Records flow one at a time through a configurable stage chain. Every
input line leaves the run as exactly one line: kept records go to the
output manifest, dropped records (and unparseable lines) to the sidecar.
Emission follows input order regardless of shard or worker count, so a
run is reproducible byte for byte given the same seed and inputs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, IO, Iterator, Mapping, Sequence

import yaml

from .asr_filters import (
    AsrFilterConfig,
    AsrFilterResources,
    FilterInputError,
    lid_filter,
    text_filter,
)
from .ast_filters import AstFilterConfig, AstFilterResources, filter_pair
from .clients import (
    SERVICE_ROLES,
    HttpServiceClient,
    ServiceConfig,
    ServiceError,
    resolve_service_urls,
)
from .manifest import (
    ManifestLineError,
    read_manifest_items,
    record_to_line,
    validate_record,
)
from .mocks import MockBackend, MockServiceClient
from .pnc import PncConfig, accept_restoration
from .records import DROP_FLAGS, TranslationPair, UtteranceRecord, freeze_extra
from .segmentation import (
    SegmentationConfig,
    SegmentSpan,
    SpanError,
    plan_segments,
    segments_to_objs,
    spans_from_objs,
)
from .stats import CorpusStats
from .text_lid import LexiconLidClassifier, TextLidClassifier

logger = logging.getLogger(__name__)

DEFAULT_STAGES = (
    "validate",
    "segment",
    "transcribe",
    "lid_filter",
    "asr_filter",
    "pnc_restore",
    "translate",
    "ast_filter",
    "stats",
)
KNOWN_STAGES = frozenset(DEFAULT_STAGES)

# (earlier, later): when both stages are present, earlier must precede later.
_ORDERING = (
    ("validate", "segment"),
    ("segment", "transcribe"),
    ("transcribe", "lid_filter"),
    ("transcribe", "asr_filter"),
    ("transcribe", "pnc_restore"),
    ("transcribe", "translate"),
    ("lid_filter", "asr_filter"),
    ("pnc_restore", "translate"),
    ("translate", "ast_filter"),
)

# (stage, prerequisite): stage cannot run in a chain missing its prerequisite.
_REQUIRES = (("ast_filter", "translate"),)


class PipelineConfigError(ValueError):
    """Invalid pipeline configuration; carries every detected problem."""

    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass
class PipelineConfig:
    stages: tuple[str, ...] = DEFAULT_STAGES
    shard_count: int = 1
    worker_count: int = 1
    seed: int = 0
    # Role -> base URL, or the literal "mock" for the seeded in-process backend.
    services: dict[str, str] = field(default_factory=lambda: {role: "mock" for role in SERVICE_ROLES})
    translate_target: str = "en"
    # A run whose service_error fraction exceeds this cap signals failure
    # (exit code 3) so silent half-empty outputs cannot pass unnoticed.
    error_rate_cap: float = 0.05
    # Records in flight before emission blocks the reader; bounds memory.
    max_pending: int = 1024
    service: dict[str, Any] = field(default_factory=dict)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    asr_filter: AsrFilterConfig = field(default_factory=AsrFilterConfig)
    ast_filter: AstFilterConfig = field(default_factory=AstFilterConfig)
    pnc: PncConfig = field(default_factory=PncConfig)

    def problems(self) -> list[str]:
        return validate_config(self)

    def ensure_valid(self) -> None:
        found = self.problems()
        if found:
            raise PipelineConfigError(found)


_SERVICE_TUNING_KEYS = frozenset({"timeout_s", "max_retries", "backoff_base_s", "max_inflight", "decode_params"})


def validate_config(config: PipelineConfig) -> list[str]:
    """Every configuration problem found, empty when the config is runnable."""
    problems: list[str] = []

    stages = list(config.stages)
    if not stages:
        problems.append("stages must not be empty")
    unknown = [s for s in stages if s not in KNOWN_STAGES]
    if unknown:
        problems.append(f"unknown stages: {unknown} (known: {sorted(KNOWN_STAGES)})")
    dupes = sorted({s for s in stages if stages.count(s) > 1})
    if dupes:
        problems.append(f"duplicate stages: {dupes}")
    if "validate" in stages and stages[0] != "validate":
        problems.append("validate must be the first stage when present")
    if "stats" in stages and stages[-1] != "stats":
        problems.append("stats must be the last stage when present")
    for earlier, later in _ORDERING:
        if earlier in stages and later in stages and stages.index(earlier) > stages.index(later):
            problems.append(f"stage {earlier!r} must precede {later!r}")
    for stage, prerequisite in _REQUIRES:
        if stage in stages and prerequisite not in stages:
            problems.append(f"stage {stage!r} requires stage {prerequisite!r} in the chain")

    if config.shard_count < 1:
        problems.append(f"shard_count must be >= 1, got {config.shard_count}")
    if config.worker_count < 1:
        problems.append(f"worker_count must be >= 1, got {config.worker_count}")
    if config.max_pending < 1:
        problems.append(f"max_pending must be >= 1, got {config.max_pending}")
    if not (0.0 <= config.error_rate_cap <= 1.0):
        problems.append(f"error_rate_cap must be in [0,1], got {config.error_rate_cap}")
    if not config.translate_target:
        problems.append("translate_target must not be empty")

    # pnc may be omitted: resolution falls back to the translate URL.
    missing_roles = [
        role
        for role in SERVICE_ROLES
        if role not in config.services and not (role == "pnc" and "translate" in config.services)
    ]
    if missing_roles:
        problems.append(f"services missing roles: {missing_roles}")
    unknown_roles = [role for role in config.services if role not in SERVICE_ROLES]
    if unknown_roles:
        problems.append(f"unknown service roles: {unknown_roles} (known: {list(SERVICE_ROLES)})")
    for role, url in config.services.items():
        if url != "mock" and not str(url).startswith(("http://", "https://")):
            problems.append(f"service {role!r} must be 'mock' or an http(s) URL, got {url!r}")
    bad_tuning = sorted(set(config.service) - _SERVICE_TUNING_KEYS)
    if bad_tuning:
        problems.append(f"unknown service tuning keys: {bad_tuning}")

    for name, cfg in (
        ("segmentation", config.segmentation),
        ("asr_filter", config.asr_filter),
        ("ast_filter", config.ast_filter),
        ("pnc", config.pnc),
    ):
        try:
            cfg.validate()
        except ValueError as exc:
            problems.append(f"{name}: {exc}")
    return problems


def _section(obj: Mapping[str, Any], key: str, problems: list[str]) -> dict[str, Any]:
    value = obj.get(key)
    if value is None:
        return {}
    if not isinstance(value, Mapping):
        problems.append(f"{key} must be a mapping, got {type(value).__name__}")
        return {}
    return dict(value)


def _build_dataclass(cls, section: dict[str, Any], name: str, problems: list[str], tuple_fields: Sequence[str] = ()):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(section) - known)
    if unknown:
        problems.append(f"{name}: unknown keys {unknown}")
    kwargs = {k: v for k, v in section.items() if k in known}
    for key in tuple_fields:
        if key in kwargs and isinstance(kwargs[key], list):
            kwargs[key] = tuple(kwargs[key])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append(f"{name}: {exc}")
        return cls()


def config_from_obj(obj: Mapping[str, Any]) -> PipelineConfig:
    """Build a config from parsed YAML/JSON; raises on structural problems."""
    problems: list[str] = []
    if not isinstance(obj, Mapping):
        raise PipelineConfigError([f"config root must be a mapping, got {type(obj).__name__}"])

    top_known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = sorted(set(obj) - top_known)
    if unknown:
        problems.append(f"unknown config keys: {unknown}")

    asr_section = _section(obj, "asr_filter", problems)
    if isinstance(asr_section.get("char_rate_bounds"), Mapping):
        asr_section["char_rate_bounds"] = {
            lang: tuple(bounds) for lang, bounds in asr_section["char_rate_bounds"].items()
        }

    config = PipelineConfig(
        stages=tuple(obj.get("stages", DEFAULT_STAGES)),
        shard_count=int(obj.get("shard_count", 1)),
        worker_count=int(obj.get("worker_count", 1)),
        seed=int(obj.get("seed", 0)),
        services={**{role: "mock" for role in SERVICE_ROLES}, **_section(obj, "services", problems)},
        translate_target=str(obj.get("translate_target", "en")),
        error_rate_cap=float(obj.get("error_rate_cap", 0.05)),
        max_pending=int(obj.get("max_pending", 1024)),
        service=_section(obj, "service", problems),
        segmentation=_build_dataclass(
            SegmentationConfig, _section(obj, "segmentation", problems), "segmentation", problems
        ),
        asr_filter=_build_dataclass(
            AsrFilterConfig, asr_section, "asr_filter", problems,
            tuple_fields=("ngram_n_range", "default_char_rate_bounds"),
        ),
        ast_filter=_build_dataclass(AstFilterConfig, _section(obj, "ast_filter", problems), "ast_filter", problems),
        pnc=_build_dataclass(PncConfig, _section(obj, "pnc", problems), "pnc", problems),
    )
    if problems:
        raise PipelineConfigError(problems)
    return config


def load_config(path: str | Path) -> PipelineConfig:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PipelineConfigError([f"cannot read config {path}: {exc}"]) from exc
    try:
        obj = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise PipelineConfigError([f"config {path} is not valid YAML: {exc}"]) from exc
    if obj is None:
        obj = {}
    return config_from_obj(obj)


# -- Execution context -------------------------------------------------------


@dataclass
class PipelineContext:
    config: PipelineConfig
    stage_fns: tuple[tuple[str, Callable], ...]
    clients_by_shard: tuple[dict[str, Any], ...]
    asr_resources: AsrFilterResources | None = None
    ast_resources: AstFilterResources | None = None
    classifier: TextLidClassifier | None = None


def build_clients(config: PipelineConfig, urls: Mapping[str, str]) -> dict[str, Any]:
    clients: dict[str, Any] = {}
    for role in SERVICE_ROLES:
        url = urls[role]
        if url == "mock":
            clients[role] = MockServiceClient(MockBackend(seed=config.seed))
        else:
            clients[role] = HttpServiceClient(ServiceConfig(base_url=url, **config.service))
    return clients


def build_context(config: PipelineConfig, environ: Mapping[str, str] | None = None) -> PipelineContext:
    config.ensure_valid()
    environ = os.environ if environ is None else environ
    urls = resolve_service_urls(config.services, environ)

    stages = config.stages
    needs_asr_resources = bool({"asr_filter", "pnc_restore"} & set(stages))
    asr_resources = AsrFilterResources.from_config(config.asr_filter) if needs_asr_resources else None
    ast_resources = AstFilterResources.from_config(config.ast_filter) if "ast_filter" in stages else None
    classifier = LexiconLidClassifier.from_dir() if "ast_filter" in stages else None

    needs_services = bool({"transcribe", "pnc_restore", "translate"} & set(stages))
    clients_by_shard = tuple(
        build_clients(config, urls) if needs_services else {} for _ in range(config.shard_count)
    )
    stage_fns = tuple((name, _STAGE_FUNCS[name]) for name in stages)
    return PipelineContext(
        config=config,
        stage_fns=stage_fns,
        clients_by_shard=clients_by_shard,
        asr_resources=asr_resources,
        ast_resources=ast_resources,
        classifier=classifier,
    )


# -- Stage implementations ---------------------------------------------------


@dataclass
class _WorkItem:
    index: int
    record: UtteranceRecord | None
    parse_error: ManifestLineError | None = None
    pair: TranslationPair | None = None
    dropped: bool = False
    service_error: bool = False
    cause: str | None = None


def _stage_validate(ctx: PipelineContext, clients: dict, item: _WorkItem) -> None:
    decision = validate_record(item.record)
    if decision.flags:
        item.record = item.record.with_flags(*decision.flags)
        item.cause = decision.cause


def _stage_segment(ctx: PipelineContext, clients: dict, item: _WorkItem) -> None:
    record = item.record
    raw = record.extra.get("spans") if record.extra else None
    if raw:
        spans = spans_from_objs(raw)
    elif record.duration_s > 0:
        spans = [SegmentSpan(start_s=0.0, end_s=record.duration_s, text=None)]
    else:
        raise SpanError(0, f"record {record.id} has no spans and non-positive duration")
    segments = plan_segments(spans, ctx.config.segmentation, record.duration_s)
    flags = record.flags
    if any("oversize_span" in seg.flags for seg in segments):
        flags = flags | {"oversize_span"}
    extra = dict(record.extra)
    extra["spans"] = segments_to_objs(segments)
    item.record = dataclasses.replace(record, extra=freeze_extra(extra), flags=flags)


def _stage_transcribe(ctx: PipelineContext, clients: dict, item: _WorkItem) -> None:
    record = item.record
    asr = clients["asr"]
    # First pass identifies the language; the second decodes with that hint.
    lid_lang, lid_prob = asr.detect_language(record.audio_ref)
    result = asr.transcribe(record.audio_ref, lid_lang, (0.0, record.duration_s))
    item.record = dataclasses.replace(
        record,
        text=" ".join(seg.text for seg in result.segments if seg.text),
        lid_pred=lid_lang,
        lid_prob=lid_prob,
        segment_lids=tuple(seg.lid for seg in result.segments),
    )


def _stage_lid_filter(ctx: PipelineContext, clients: dict, item: _WorkItem) -> None:
    decision = lid_filter(item.record, ctx.config.asr_filter)
    if decision.flags:
        item.record = item.record.with_flags(*decision.flags)


def _stage_asr_filter(ctx: PipelineContext, clients: dict, item: _WorkItem) -> None:
    decision = text_filter(item.record, ctx.asr_resources)
    if decision.flags:
        item.record = item.record.with_flags(*decision.flags)


def _stage_pnc_restore(ctx: PipelineContext, clients: dict, item: _WorkItem) -> None:
    record = item.record
    if not record.text:
        return
    restored = clients["pnc"].restore_pnc(record.text, record.lang_target)
    outcome = accept_restoration(record.text, restored, ctx.config.pnc, ctx.asr_resources.charset)
    flags = record.flags | {"pnc_reverted"} if outcome.source == "original" else record.flags
    item.record = dataclasses.replace(record, text_restored=outcome.chosen_text, flags=flags)


def _stage_translate(ctx: PipelineContext, clients: dict, item: _WorkItem) -> None:
    record = item.record
    target = ctx.config.translate_target
    if record.lang_target == target:
        return
    src = record.text_restored if record.text_restored is not None else record.text
    if not src:
        return
    tgt_text = clients["translate"].translate(src, record.lang_target, target)
    qe = clients["qe"].qe_score(src, tgt_text, record.lang_target, target)
    item.pair = TranslationPair(
        id=record.id,
        src_text=src,
        tgt_text=tgt_text,
        src_lang=record.lang_target,
        tgt_lang=target,
        qe_score=qe,
    )
    extra = dict(record.extra)
    extra["translation"] = {"text": tgt_text, "lang": target, "qe_score": qe}
    item.record = dataclasses.replace(record, extra=freeze_extra(extra))


def _stage_ast_filter(ctx: PipelineContext, clients: dict, item: _WorkItem) -> None:
    if item.pair is None:
        return
    decision = filter_pair(item.pair, ctx.ast_resources, ctx.classifier)
    if decision.flags:
        item.record = item.record.with_flags(*decision.flags)


def _stage_stats(ctx: PipelineContext, clients: dict, item: _WorkItem) -> None:
    # Accounting happens at emission so it also covers dropped records.
    return


_STAGE_FUNCS: dict[str, Callable] = {
    "validate": _stage_validate,
    "segment": _stage_segment,
    "transcribe": _stage_transcribe,
    "lid_filter": _stage_lid_filter,
    "asr_filter": _stage_asr_filter,
    "pnc_restore": _stage_pnc_restore,
    "translate": _stage_translate,
    "ast_filter": _stage_ast_filter,
    "stats": _stage_stats,
}


def _run_stages(ctx: PipelineContext, clients: dict, item: _WorkItem) -> _WorkItem:
    for name, fn in ctx.stage_fns:
        try:
            fn(ctx, clients, item)
        except ServiceError as exc:
            item.record = item.record.with_flags("service_error")
            item.cause = f"{name}: {exc}"
            item.service_error = True
        except (FilterInputError, SpanError, ValueError) as exc:
            item.record = item.record.with_flags("invalid_record")
            item.cause = f"{name}: {exc}"
        if item.record.flags & DROP_FLAGS:
            item.dropped = True
            if item.cause:
                extra = dict(item.record.extra)
                extra["drop_cause"] = item.cause
                item.record = dataclasses.replace(item.record, extra=freeze_extra(extra))
            return item
    return item


def shard_of(record_id: str, shard_count: int) -> int:
    """Stable cross-process shard assignment by record id."""
    if shard_count <= 1:
        return 0
    digest = int.from_bytes(hashlib.sha1(record_id.encode("utf-8")).digest()[:4], "big")
    return digest % shard_count


@dataclass
class RunResult:
    total: int = 0
    kept: int = 0
    dropped: int = 0
    parse_errors: int = 0
    service_errors: int = 0
    stats: CorpusStats = field(default_factory=CorpusStats)
    exceeded_error_cap: bool = False
    elapsed_s: float = 0.0


def _read_items(source) -> Iterator[_WorkItem]:
    index = 0
    for entry in read_manifest_items(source):
        if isinstance(entry, ManifestLineError):
            yield _WorkItem(index=index, record=None, parse_error=entry)
        else:
            yield _WorkItem(index=index, record=entry)
        index += 1


def run_pipeline(
    config: PipelineConfig,
    input_path: str | Path,
    output_path: str | Path,
    sidecar_path: str | Path | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunResult:
    """Run the configured stage chain over one manifest.

    Emission order equals input order for any shard or worker count.
    """
    started = time.monotonic()
    ctx = build_context(config, environ=environ)
    result = RunResult()
    stats = result.stats

    def emit(item: _WorkItem, out: IO[str], side: IO[str] | None) -> None:
        result.total += 1
        if item.parse_error is not None:
            result.parse_errors += 1
            stats.parse_errors += 1
            if side is not None:
                side.write(json.dumps(item.parse_error.to_json_obj(), ensure_ascii=False))
                side.write("\n")
            return
        if item.service_error:
            result.service_errors += 1
        stats.add_input(item.record)
        if item.dropped:
            result.dropped += 1
            stats.add_dropped(item.record)
            if side is not None:
                side.write(record_to_line(item.record))
                side.write("\n")
        else:
            result.kept += 1
            stats.add_output(item.record)
            out.write(record_to_line(item.record))
            out.write("\n")

    def process_inline(item: _WorkItem) -> _WorkItem:
        if item.record is not None:
            shard = shard_of(item.record.id, config.shard_count)
            _run_stages(ctx, ctx.clients_by_shard[shard], item)
        return item

    input_path = Path(input_path)
    output_path = Path(output_path)
    with open(input_path, "r", encoding="utf-8") as source, open(
        output_path, "w", encoding="utf-8"
    ) as out:
        side_cm = open(sidecar_path, "w", encoding="utf-8") if sidecar_path is not None else None
        try:
            if config.worker_count <= 1:
                for item in _read_items(source):
                    emit(process_inline(item), out, side_cm)
            else:
                pending: deque[tuple[_WorkItem, Future | None]] = deque()
                with ThreadPoolExecutor(max_workers=config.worker_count) as pool:
                    for item in _read_items(source):
                        while len(pending) >= config.max_pending:
                            done_item, future = pending.popleft()
                            if future is not None:
                                future.result()
                            emit(done_item, out, side_cm)
                        if item.record is not None:
                            shard = shard_of(item.record.id, config.shard_count)
                            clients = ctx.clients_by_shard[shard]
                            pending.append((item, pool.submit(_run_stages, ctx, clients, item)))
                        else:
                            pending.append((item, None))
                    while pending:
                        done_item, future = pending.popleft()
                        if future is not None:
                            future.result()
                        emit(done_item, out, side_cm)
        finally:
            if side_cm is not None:
                side_cm.close()

    if result.total > 0 and result.service_errors / result.total > config.error_rate_cap:
        result.exceeded_error_cap = True
        logger.error(
            "service error rate %.3f exceeds cap %.3f (%d of %d records)",
            result.service_errors / result.total,
            config.error_rate_cap,
            result.service_errors,
            result.total,
        )
    result.elapsed_s = time.monotonic() - started
    return result
