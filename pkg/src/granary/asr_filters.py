"""Language-ID verification and transcription quality filters.

Covers the drop reasons applied to pseudo-labeled transcriptions:
LID mismatch / low confidence / multiple languages, the three
hallucination flags (repeated n-grams, long words, blocklisted
phrases), character-rate bounds, and character-set membership.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ._data import CHARSET_FILE, PHRASES_DIR
from .languages import LANGUAGES
from .matching import PhraseMatcher, load_phrase_file
from .records import FilterDecision, UtteranceRecord, decision_from_flags


class FilterInputError(ValueError):
    """A filter was invoked on a record missing stage prerequisites."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True, slots=True)
class AsrFilterConfig:
    min_lid_prob: float = 0.8
    ngram_n_range: tuple[int, int] = (2, 5)
    ngram_min_consecutive_repeats: int = 4
    unigram_min_consecutive_repeats: int = 5
    max_word_chars: int = 40
    # Per-language overrides; any language not listed uses the default bounds.
    char_rate_bounds: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    default_char_rate_bounds: tuple[float, float] = (1.0, 30.0)
    phrase_lists: Mapping[str, str] = field(default_factory=dict)
    charset_file: str = str(CHARSET_FILE)
    phrase_lists_optional: bool = False

    def validate(self) -> None:
        if not (0.0 <= self.min_lid_prob <= 1.0):
            raise ValueError(f"min_lid_prob must be in [0,1], got {self.min_lid_prob}")
        lo, hi = self.ngram_n_range
        if not (1 <= lo <= hi <= 10):
            raise ValueError(f"ngram_n_range must lie within 1..10, got {self.ngram_n_range}")
        if self.ngram_min_consecutive_repeats < 2 or self.unigram_min_consecutive_repeats < 2:
            raise ValueError("repeat thresholds must be at least 2")
        if self.max_word_chars < 1:
            raise ValueError("max_word_chars must be positive")
        for lang, (bmin, bmax) in {**dict(self.char_rate_bounds), "default": self.default_char_rate_bounds}.items():
            if not (0 <= bmin < bmax):
                raise ValueError(f"char rate bounds for {lang} must satisfy 0 <= min < max")

    def bounds_for(self, lang: str) -> tuple[float, float]:
        return self.char_rate_bounds.get(lang, self.default_char_rate_bounds)


def load_charset(path) -> frozenset[str]:
    """Charset file: one allowed character or \\uXXXX escape per line."""
    chars = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            entry = line.rstrip("\n\r")
            if not entry:
                continue
            if entry.startswith("\\u"):
                try:
                    chars.add(chr(int(entry[2:], 16)))
                except ValueError:
                    raise ValueError(f"{path}:{line_no}: bad escape {entry!r}") from None
            elif len(entry) == 1:
                chars.add(entry)
            else:
                raise ValueError(f"{path}:{line_no}: expected a single character or \\uXXXX escape, got {entry!r}")
    return frozenset(chars)


def default_phrase_lists() -> dict[str, str]:
    """The shipped per-language phrase blocklists (<lang>.txt)."""
    lists = {}
    for lang in LANGUAGES:
        path = PHRASES_DIR / f"{lang}.txt"
        if path.exists():
            lists[lang] = str(path)
    return lists


class AsrFilterResources:
    """Config plus the loaded immutable state the filters need.

    The charset and phrase automatons are built once and are safe to
    share read-only across workers.
    """

    def __init__(self, cfg: AsrFilterConfig, charset: frozenset[str], matchers: Mapping[str, PhraseMatcher]):
        cfg.validate()
        self.cfg = cfg
        self.charset = charset
        self.matchers = dict(matchers)

    @classmethod
    def from_config(cls, cfg: AsrFilterConfig) -> "AsrFilterResources":
        charset = load_charset(cfg.charset_file)
        phrase_lists = dict(cfg.phrase_lists) or default_phrase_lists()
        matchers = {lang: PhraseMatcher(load_phrase_file(path)) for lang, path in phrase_lists.items()}
        return cls(cfg, charset, matchers)

    def matcher_for(self, lang: str) -> PhraseMatcher | None:
        matcher = self.matchers.get(lang)
        if matcher is None and not self.cfg.phrase_lists_optional:
            raise FilterInputError("no_phrase_list", f"no phrase list configured for language {lang!r}")
        return matcher


def lid_filter(record: UtteranceRecord, cfg: AsrFilterConfig) -> FilterDecision:
    """Drop on predicted-language mismatch, low confidence, or multiple
    per-segment languages. All firing reasons are reported together."""
    if record.lid_pred is None or record.lid_prob is None:
        raise FilterInputError("lid_missing", f"record {record.id}: lid_pred/lid_prob not populated")
    flags = set()
    if record.lid_pred != record.lang_target:
        flags.add("lid_mismatch")
    if record.lid_prob < cfg.min_lid_prob:
        flags.add("lid_low_conf")
    if record.segment_lids is not None and len(set(record.segment_lids)) > 1:
        flags.add("lid_multi")
    return decision_from_flags(record.id, frozenset(flags))


def detect_repeated_ngrams(text: str, cfg: AsrFilterConfig) -> bool:
    """True iff some word n-gram repeats back-to-back often enough.

    A block of k consecutive identical n-grams starting at token i is
    equivalent to tokens[j] == tokens[j+n] holding for n*(k-1)
    consecutive positions j, so each n needs only one linear scan.
    """
    tokens = text.split()
    num = len(tokens)
    if num == 0:
        return False

    run = 1
    for i in range(1, num):
        if tokens[i] == tokens[i - 1]:
            run += 1
            if run >= cfg.unigram_min_consecutive_repeats:
                return True
        else:
            run = 1

    n_lo, n_hi = cfg.ngram_n_range
    repeats = cfg.ngram_min_consecutive_repeats
    for n in range(n_lo, n_hi + 1):
        if num < n * repeats:
            break
        need = n * (repeats - 1)
        streak = 0
        for i in range(num - n):
            if tokens[i] == tokens[i + n]:
                streak += 1
                if streak >= need:
                    return True
            else:
                streak = 0
    return False


def detect_long_words(text: str, cfg: AsrFilterConfig) -> bool:
    """True iff any whitespace token exceeds ``max_word_chars`` scalars."""
    limit = cfg.max_word_chars
    for token in text.split():
        if len(token) > limit:
            return True
    return False


def detect_hallucinated_phrases(text: str, lang: str, phrase_index: PhraseMatcher | None) -> bool:
    """True iff any blocklisted phrase for ``lang`` occurs in the text."""
    if phrase_index is None:
        return False
    return phrase_index.contains_any(text)


def char_rate(text: str, duration_s: float) -> float:
    """Unicode scalars per second of audio."""
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    return len(text) / duration_s


def charset_check(text: str, allowed: frozenset[str]) -> tuple[int, str] | None:
    """None when every scalar of ``text`` is allowed, else (index, char)
    of the first offender."""
    for i, ch in enumerate(text):
        if ch not in allowed:
            return (i, ch)
    return None


def text_filter(record: UtteranceRecord, resources: AsrFilterResources) -> FilterDecision:
    """Run the transcription text filters: hallucination detectors,
    character-rate bounds, and character-set membership.

    All filters are evaluated (no short-circuit) so the retention report
    can attribute every drop cause; the verdict is drop iff any
    drop-class flag fired.
    """
    cfg = resources.cfg
    flags = set()

    text = record.text
    if detect_repeated_ngrams(text, cfg):
        flags.add("halluc_ngram")
    if detect_long_words(text, cfg):
        flags.add("halluc_longword")
    if detect_hallucinated_phrases(text, record.lang_target, resources.matcher_for(record.lang_target)):
        flags.add("halluc_phrase")

    rate = char_rate(text, record.duration_s)
    lo, hi = cfg.bounds_for(record.lang_target)
    if rate < lo:
        flags.add("char_rate_low")
    elif rate > hi:
        flags.add("char_rate_high")

    if charset_check(text, resources.charset) is not None:
        flags.add("charset")

    return decision_from_flags(record.id, frozenset(flags))


def filter_record(record: UtteranceRecord, resources: AsrFilterResources) -> FilterDecision:
    """Language-ID and text filters combined into one verdict."""
    flags = lid_filter(record, resources.cfg).flags | text_filter(record, resources).flags
    return decision_from_flags(record.id, frozenset(flags))
