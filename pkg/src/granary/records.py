"""Core record types shared across pipeline stages."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

# Flags that cause a record to be dropped when attached by a filter.
DROP_FLAGS = frozenset({
    "lid_mismatch",
    "lid_low_conf",
    "lid_multi",
    "halluc_ngram",
    "halluc_longword",
    "halluc_phrase",
    "char_rate_low",
    "char_rate_high",
    "charset",
    "invalid_record",
    "ast_len_ratio",
    "ast_histogram",
    "ast_lid",
    "ast_qe",
    "service_error",
})

# Informational flags: recorded on the record but never a drop cause on their own.
INFO_FLAGS = frozenset({"pnc_reverted", "oversize_span"})

KNOWN_FLAGS = DROP_FLAGS | INFO_FLAGS

_EMPTY_MAP: Mapping[str, Any] = MappingProxyType({})


@dataclass(frozen=True, slots=True)
class UtteranceRecord:
    """One audio segment with its transcription and filter state.

    ``extra`` carries any manifest fields the pipeline does not interpret;
    they are preserved verbatim on write.
    """

    id: str
    audio_ref: str
    offset_s: float
    duration_s: float
    text: str = ""
    lang_target: str = ""
    lid_pred: str | None = None
    lid_prob: float | None = None
    segment_lids: tuple[str, ...] | None = None
    text_restored: str | None = None
    flags: frozenset[str] = frozenset()
    corpus: str = ""
    extra: Mapping[str, Any] = _EMPTY_MAP

    def with_flags(self, *new_flags: str) -> "UtteranceRecord":
        """Return a copy with ``new_flags`` added to the flag set."""
        if not new_flags:
            return self
        import dataclasses

        return dataclasses.replace(self, flags=self.flags | frozenset(new_flags))

    def hours(self) -> float:
        return self.duration_s / 3600.0


@dataclass(frozen=True, slots=True)
class FilterDecision:
    """Verdict for one record at one stage.

    ``drop`` requires at least one drop-class flag; informational flags
    alone never drop a record.
    """

    record_id: str
    verdict: str  # "pass" | "drop"
    flags: frozenset[str] = frozenset()
    cause: str | None = None

    def __post_init__(self) -> None:
        if self.verdict not in ("pass", "drop"):
            raise ValueError(f"verdict must be 'pass' or 'drop', got {self.verdict!r}")
        if self.verdict == "drop" and not (self.flags & DROP_FLAGS):
            raise ValueError("drop verdict requires at least one drop-class flag")

    @property
    def dropped(self) -> bool:
        return self.verdict == "drop"


def decision_from_flags(record_id: str, flags: frozenset[str], cause: str | None = None) -> FilterDecision:
    """Build a decision from a flag set: drop iff any drop-class flag fired."""
    verdict = "drop" if flags & DROP_FLAGS else "pass"
    return FilterDecision(record_id=record_id, verdict=verdict, flags=flags, cause=cause)


@dataclass(frozen=True, slots=True)
class TranslationPair:
    """A source/target bitext pair with optional quality-estimation score."""

    id: str
    src_text: str
    tgt_text: str
    src_lang: str
    tgt_lang: str
    qe_score: float | None = None
    flags: frozenset[str] = frozenset()


def freeze_extra(extra: Mapping[str, Any] | None) -> Mapping[str, Any]:
    """Wrap pass-through fields in a read-only view (empty map when None)."""
    if not extra:
        return _EMPTY_MAP
    return MappingProxyType(dict(extra))
