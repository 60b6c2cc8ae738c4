"""Punctuation-and-capitalization restoration gating.

The LLM restoration step is only trusted when its output stays close to
the original transcription: character error rate over normalized text
(case- and punctuation-insensitive by default) must not exceed the
configured threshold, and the restored text must stay inside the
allowed character set. Otherwise the original pseudo-label is kept.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from ._data import PNC_EXEMPLARS_DIR
from .asr_filters import charset_check
from .languages import LANGUAGE_NAMES


@dataclass(frozen=True, slots=True)
class PncConfig:
    cer_threshold: float = 0.05
    normalize: bool = True

    def validate(self) -> None:
        if self.cer_threshold < 0:
            raise ValueError("cer_threshold must be non-negative")


@dataclass(frozen=True, slots=True)
class RestorationOutcome:
    chosen_text: str
    source: str  # "original" | "restored"
    cer_value: float


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over Unicode scalar values.

    Two-row dynamic program: O(len(a) * len(b)) time, O(min) memory, so
    arbitrarily long transcripts never blow up the gate.
    """
    if a == b:
        return 0
    # Keep the inner row short.
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        append = cur.append
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                append(prev[j - 1])
            else:
                append(1 + min(prev[j - 1], prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def cer(hypothesis: str, reference: str) -> float:
    """Character error rate: edit distance / reference length.

    cer("", "") is 0.0; a non-empty hypothesis against an empty
    reference has no meaningful normalization and returns +inf, which
    any finite threshold rejects.
    """
    if not reference:
        return 0.0 if not hypothesis else math.inf
    return levenshtein(hypothesis, reference) / len(reference)


def punctuation_subset(charset: frozenset[str]) -> frozenset[str]:
    """Characters of the allowed set whose Unicode category is punctuation."""
    return frozenset(c for c in charset if unicodedata.category(c).startswith("P"))


def normalize_for_gate(text: str, punctuation: frozenset[str]) -> str:
    """Lowercase, strip punctuation, and collapse whitespace runs.

    This is the form the gate compares, so that the edits restoration is
    supposed to make (case and punctuation) do not count as drift.
    """
    kept = "".join(c for c in text if c not in punctuation)
    return " ".join(kept.lower().split())


def load_exemplars(lang: str, exemplars_dir: str | Path = PNC_EXEMPLARS_DIR) -> tuple[tuple[str, str], ...]:
    """Per-language correction exemplars: tab-separated before/after pairs."""
    path = Path(exemplars_dir) / f"{lang}.tsv"
    if not path.exists():
        raise FileNotFoundError(f"no restoration exemplar file for language {lang!r} at {path}")
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n")
            if not stripped:
                continue
            parts = stripped.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected 'before<TAB>after'")
            pairs.append((parts[0], parts[1]))
    if len(pairs) < 2:
        raise ValueError(f"{path}: need at least two exemplar pairs, found {len(pairs)}")
    return tuple(pairs)


_PROMPT_HEADER = (
    "You restore punctuation and capitalization in {language} text. "
    "Correct only punctuation, capitalization, and obvious typos. "
    "Do not translate, reorder, add, or remove words. "
    "Answer with the corrected text between <output> and </output> and nothing else.\n"
)


def build_restoration_prompt(lang: str, text: str, exemplars: tuple[tuple[str, str], ...]) -> str:
    """Deterministic prompt: instruction, in-language exemplars, then the
    input delimited so the response can be extracted unambiguously."""
    language = LANGUAGE_NAMES.get(lang, lang)
    parts = [_PROMPT_HEADER.format(language=language), "Examples:\n"]
    for before, after in exemplars:
        parts.append(f"<input>{before}</input>\n<output>{after}</output>\n")
    parts.append(f"Now correct this text:\n<input>{text}</input>\n")
    return "".join(parts)


def extract_restoration_reply(reply: str) -> str | None:
    """Pull the corrected text out of a model reply; None if missing."""
    start = reply.find("<output>")
    end = reply.rfind("</output>")
    if start == -1 or end == -1 or end < start:
        return None
    return reply[start + len("<output>"):end]


def accept_restoration(
    original: str,
    restored: str,
    cfg: PncConfig,
    charset: frozenset[str],
) -> RestorationOutcome:
    """Choose the restored text iff it stays within the CER gate and the
    allowed character set; otherwise keep the original."""
    cfg.validate()
    if cfg.normalize:
        punct = punctuation_subset(charset)
        value = cer(normalize_for_gate(restored, punct), normalize_for_gate(original, punct))
    else:
        value = cer(restored, original)
    if value <= cfg.cer_threshold and charset_check(restored, charset) is None:
        return RestorationOutcome(chosen_text=restored, source="restored", cer_value=value)
    return RestorationOutcome(chosen_text=original, source="original", cer_value=value)
