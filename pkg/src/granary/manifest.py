"""Line-delimited manifest I/O with bounded memory.

Wire format: UTF-8, one JSON object per line with field names
``id, audio_filepath, offset, duration, text, lang_target, lid_pred,
lid_prob, segment_lids, text_restored, flags, corpus``. Optional fields
are omitted when absent, never null. Fields the pipeline does not know
are preserved verbatim on write.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Callable, IO, Iterable, Iterator

from .languages import LANGUAGE_SET
from .records import FilterDecision, UtteranceRecord, freeze_extra

# Wire names in canonical output order.
_CORE_FIELDS = (
    "id",
    "audio_filepath",
    "offset",
    "duration",
    "text",
    "lang_target",
    "lid_pred",
    "lid_prob",
    "segment_lids",
    "text_restored",
    "flags",
    "corpus",
)
_CORE_FIELD_SET = frozenset(_CORE_FIELDS)


class ManifestWriteError(Exception):
    """Sink failure during write; carries the count written so far."""

    def __init__(self, message: str, written: int):
        super().__init__(message)
        self.written = written


@dataclass(frozen=True, slots=True)
class ManifestLineError:
    """Diagnostic for one malformed manifest line."""

    line_no: int
    cause: str
    raw: str

    def to_json_obj(self) -> dict[str, Any]:
        return {"line": self.line_no, "error": self.cause, "raw": self.raw, "flags": ["parse_error"]}


def synthesize_id(audio_ref: str, offset_s: float, duration_s: float) -> str:
    """Stable id for records that arrive without one."""
    key = f"{audio_ref}\x00{offset_s!r}\x00{duration_s!r}"
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]


def record_to_obj(record: UtteranceRecord) -> dict[str, Any]:
    """Record as a JSON-ready dict, core fields first, extras after."""
    obj: dict[str, Any] = {
        "id": record.id,
        "audio_filepath": record.audio_ref,
        "offset": record.offset_s,
        "duration": record.duration_s,
        "text": record.text,
        "lang_target": record.lang_target,
    }
    if record.lid_pred is not None:
        obj["lid_pred"] = record.lid_pred
    if record.lid_prob is not None:
        obj["lid_prob"] = record.lid_prob
    if record.segment_lids is not None:
        obj["segment_lids"] = list(record.segment_lids)
    if record.text_restored is not None:
        obj["text_restored"] = record.text_restored
    if record.flags:
        obj["flags"] = sorted(record.flags)
    obj["corpus"] = record.corpus
    for key in record.extra:
        obj[key] = record.extra[key]
    return obj


def record_from_obj(obj: dict[str, Any]) -> UtteranceRecord:
    """Parse one manifest object; raises ValueError on malformed structure."""
    if not isinstance(obj, dict):
        raise ValueError(f"expected a JSON object, got {type(obj).__name__}")
    try:
        audio_ref = str(obj["audio_filepath"])
        offset_s = float(obj["offset"])
        duration_s = float(obj["duration"])
    except KeyError as exc:
        raise ValueError(f"missing required field {exc.args[0]!r}") from None
    except (TypeError, ValueError):
        raise ValueError("offset/duration must be numbers") from None

    rec_id = obj.get("id")
    if rec_id is None:
        rec_id = synthesize_id(audio_ref, offset_s, duration_s)

    segment_lids = obj.get("segment_lids")
    if segment_lids is not None:
        if not isinstance(segment_lids, list):
            raise ValueError("segment_lids must be a list")
        segment_lids = tuple(str(x) for x in segment_lids)

    flags = obj.get("flags")
    if flags is not None and not isinstance(flags, list):
        raise ValueError("flags must be a list")

    lid_prob = obj.get("lid_prob")
    if lid_prob is not None:
        lid_prob = float(lid_prob)

    extra = {k: v for k, v in obj.items() if k not in _CORE_FIELD_SET}

    return UtteranceRecord(
        id=str(rec_id),
        audio_ref=audio_ref,
        offset_s=offset_s,
        duration_s=duration_s,
        text=str(obj.get("text", "")),
        lang_target=str(obj.get("lang_target", "")),
        lid_pred=None if obj.get("lid_pred") is None else str(obj["lid_pred"]),
        lid_prob=lid_prob,
        segment_lids=segment_lids,
        text_restored=None if obj.get("text_restored") is None else str(obj["text_restored"]),
        flags=frozenset(str(f) for f in flags) if flags else frozenset(),
        corpus=str(obj.get("corpus", "")),
        extra=freeze_extra(extra),
    )


def read_manifest(
    source: IO[str] | Iterable[str],
    on_error: Callable[[ManifestLineError], None] | None = None,
) -> Iterator[UtteranceRecord]:
    """Stream records from a line-delimited manifest.

    Malformed lines never abort the stream: each produces a
    ``ManifestLineError`` handed to ``on_error`` (dropped if no handler),
    and reading continues. Memory use is bounded by the largest single
    line, not the manifest length.
    """
    for line_no, line in enumerate(source, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            obj = json.loads(stripped)
            record = record_from_obj(obj)
        except (json.JSONDecodeError, ValueError) as exc:
            if on_error is not None:
                on_error(ManifestLineError(line_no=line_no, cause=str(exc), raw=stripped))
            continue
        yield record


def read_manifest_path(
    path,
    on_error: Callable[[ManifestLineError], None] | None = None,
) -> Iterator[UtteranceRecord]:
    """Like :func:`read_manifest`, opening ``path`` lazily."""
    with open(path, "r", encoding="utf-8") as fh:
        yield from read_manifest(fh, on_error=on_error)


def read_manifest_items(
    source: IO[str] | Iterable[str],
) -> Iterator[UtteranceRecord | ManifestLineError]:
    """Stream records with malformed lines yielded inline.

    Unlike :func:`read_manifest`, parse failures keep their stream
    position: callers that must conserve line counts (pipeline sidecar
    routing) see every input line as exactly one item.
    """
    for line_no, line in enumerate(source, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            obj = json.loads(stripped)
            yield record_from_obj(obj)
        except (json.JSONDecodeError, ValueError) as exc:
            yield ManifestLineError(line_no=line_no, cause=str(exc), raw=stripped)


def record_to_line(record: UtteranceRecord) -> str:
    return json.dumps(record_to_obj(record), ensure_ascii=False)


def write_manifest(records: Iterable[UtteranceRecord], sink: IO[str]) -> int:
    """Write records one JSON object per line; returns the count written.

    Floats round-trip exactly: serialization uses Python's shortest
    round-trip float representation.
    """
    written = 0
    for record in records:
        try:
            sink.write(record_to_line(record))
            sink.write("\n")
        except OSError as exc:
            raise ManifestWriteError(f"write failed after {written} records: {exc}", written) from exc
        written += 1
    return written


def write_manifest_path(records: Iterable[UtteranceRecord], path) -> int:
    with open(path, "w", encoding="utf-8") as fh:
        return write_manifest(records, fh)


def validate_record(record: UtteranceRecord, language_set: frozenset[str] = LANGUAGE_SET) -> FilterDecision:
    """Check record invariants; rejections are decisions, never exceptions."""
    causes = []
    if not record.id:
        causes.append("empty id")
    if record.duration_s <= 0:
        causes.append(f"duration_s must be > 0, got {record.duration_s}")
    if record.offset_s < 0:
        causes.append(f"offset_s must be >= 0, got {record.offset_s}")
    if record.lid_prob is not None and not (0.0 <= record.lid_prob <= 1.0):
        causes.append(f"lid_prob must be in [0,1], got {record.lid_prob}")
    if record.lang_target not in language_set:
        causes.append(f"lang_target {record.lang_target!r} not in the configured language set")
    if causes:
        return FilterDecision(
            record_id=record.id,
            verdict="drop",
            flags=frozenset({"invalid_record"}),
            cause="; ".join(causes),
        )
    return FilterDecision(record_id=record.id, verdict="pass")
