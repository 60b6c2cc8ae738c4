"""Bitext filtration for synthetic translation pairs.

Four checks over each source/target pair: word-count and length-ratio
sanity, character-histogram script consistency, text language ID, and a
quality-estimation threshold. As on the ASR side, every check runs so
drop statistics attribute all causes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ._data import HISTOGRAMS_DIR
from .records import FilterDecision, TranslationPair, decision_from_flags
from .text_lid import TextLidClassifier


@dataclass(frozen=True, slots=True)
class AstFilterConfig:
    max_len_ratio: float = 9.0
    min_words: int = 1
    max_words: int = 250
    histogram_threshold: float = 0.8
    lid_min_prob: float = 0.5
    qe_threshold: float = 0.5
    histograms_dir: str = str(HISTOGRAMS_DIR)

    def validate(self) -> None:
        if self.max_len_ratio <= 0:
            raise ValueError("max_len_ratio must be positive")
        if not (0 < self.min_words <= self.max_words):
            raise ValueError("need 0 < min_words <= max_words")
        for name in ("histogram_threshold", "lid_min_prob", "qe_threshold"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must be in [0,1], got {value}")


def load_histograms(histograms_dir: str | Path) -> dict[str, frozenset[str]]:
    """Per-language frequent-character sets (<lang>.hist, one char per line)."""
    histograms = {}
    for path in sorted(Path(histograms_dir).glob("*.hist")):
        chars = set()
        for line in path.read_text(encoding="utf-8").splitlines():
            entry = line.rstrip("\n\r")
            if not entry:
                continue
            if entry.startswith("\\u"):
                chars.add(chr(int(entry[2:], 16)))
            elif len(entry) == 1:
                chars.add(entry)
            else:
                raise ValueError(f"{path}: expected single characters, got {entry!r}")
        histograms[path.stem] = frozenset(chars)
    return histograms


@dataclass(frozen=True)
class AstFilterResources:
    cfg: AstFilterConfig
    histograms: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @classmethod
    def from_config(cls, cfg: AstFilterConfig) -> "AstFilterResources":
        cfg.validate()
        return cls(cfg=cfg, histograms=load_histograms(cfg.histograms_dir))


def word_count(text: str) -> int:
    return len(text.split())


def length_ratio_ok(pair: TranslationPair, cfg: AstFilterConfig) -> bool:
    """Both sides within word-count caps and their ratio within bounds."""
    n_src = word_count(pair.src_text)
    n_tgt = word_count(pair.tgt_text)
    if n_src < cfg.min_words or n_tgt < cfg.min_words:
        return False
    if n_src > cfg.max_words or n_tgt > cfg.max_words:
        return False
    return max(n_src, n_tgt) / min(n_src, n_tgt) <= cfg.max_len_ratio


def char_histogram_score(text: str, lang: str, resources: AstFilterResources) -> float:
    """Fraction of non-whitespace scalars that are frequent for ``lang``.

    Empty (or all-whitespace) text scores 1.0: emptiness is the length
    filter's business, and double-punishing skews flag statistics.
    """
    histogram = resources.histograms.get(lang)
    if histogram is None:
        raise KeyError(f"no character histogram for language {lang!r}")
    total = 0
    hits = 0
    for ch in text:
        if ch.isspace():
            continue
        total += 1
        if ch in histogram:
            hits += 1
    if total == 0:
        return 1.0
    return hits / total


def histogram_ok(pair: TranslationPair, resources: AstFilterResources) -> bool:
    threshold = resources.cfg.histogram_threshold
    return (
        char_histogram_score(pair.src_text, pair.src_lang, resources) >= threshold
        and char_histogram_score(pair.tgt_text, pair.tgt_lang, resources) >= threshold
    )


def lid_text_check(text: str, expected_lang: str, classifier: TextLidClassifier, cfg: AstFilterConfig) -> bool:
    """True iff the classifier's top label matches with enough confidence."""
    label, prob = classifier.classify(text)
    return label == expected_lang and prob >= cfg.lid_min_prob


def qe_filter(pair: TranslationPair, cfg: AstFilterConfig) -> bool:
    """True iff the quality-estimation score clears the threshold (inclusive)."""
    if pair.qe_score is None:
        raise ValueError(f"qe_missing: pair {pair.id} has no quality-estimation score")
    return pair.qe_score >= cfg.qe_threshold


def filter_pair(pair: TranslationPair, resources: AstFilterResources, classifier: TextLidClassifier) -> FilterDecision:
    """Run all bitext filters in order; no short-circuit, union of flags."""
    cfg = resources.cfg
    flags = set()
    if not length_ratio_ok(pair, cfg):
        flags.add("ast_len_ratio")
    if not histogram_ok(pair, resources):
        flags.add("ast_histogram")
    if not (
        lid_text_check(pair.src_text, pair.src_lang, classifier, cfg)
        and lid_text_check(pair.tgt_text, pair.tgt_lang, classifier, cfg)
    ):
        flags.add("ast_lid")
    if not qe_filter(pair, cfg):
        flags.add("ast_qe")
    return decision_from_flags(pair.id, frozenset(flags))
