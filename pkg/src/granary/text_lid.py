"""Pluggable text language-ID for bitext filtering.

The production deployment would put a real classifier model behind this
interface; the shipped backends are a hermetic function-word classifier
(good enough to verify pipeline wiring at desk scale) and a directive
mock for tests.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Protocol

from ._data import LEXICONS_DIR


class TextLidClassifier(Protocol):
    def classify(self, text: str) -> tuple[str, float]:
        """Top language label and its probability for ``text``."""
        ...


class LexiconLidClassifier:
    """Scores languages by their share of matched function words.

    The probability is the winning language's share of all lexicon hits,
    so a text drawing from a single language's function words scores
    near 1.0 and mixed or out-of-coverage text scores low.
    """

    def __init__(self, lexicons: Mapping[str, frozenset[str]]):
        if not lexicons:
            raise ValueError("need at least one language lexicon")
        self._lexicons = dict(lexicons)

    @classmethod
    def from_dir(cls, lexicons_dir: str | Path = LEXICONS_DIR) -> "LexiconLidClassifier":
        lexicons = {}
        for path in sorted(Path(lexicons_dir).glob("*.txt")):
            words = frozenset(
                line.strip().casefold()
                for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip() and not line.startswith("#")
            )
            if words:
                lexicons[path.stem] = words
        return cls(lexicons)

    def classify(self, text: str) -> tuple[str, float]:
        tokens = [t.strip(".,!?;:\"'«»") for t in text.casefold().split()]
        tokens = [t for t in tokens if t]
        if not tokens:
            return ("und", 0.0)
        hits = {}
        for lang, lexicon in self._lexicons.items():
            count = sum(1 for t in tokens if t in lexicon)
            if count:
                hits[lang] = count
        if not hits:
            return ("und", 0.0)
        total = sum(hits.values())
        # Deterministic tie-break: highest count, then language code.
        best = min(hits, key=lambda lang: (-hits[lang], lang))
        return (best, hits[best] / total)


class MockLidClassifier:
    """Returns labels from an explicit table; unknown text falls back to
    a fixed default. For tests."""

    def __init__(self, table: Mapping[str, tuple[str, float]] | None = None, default: tuple[str, float] = ("en", 0.99)):
        self.table = dict(table or {})
        self.default = default

    def classify(self, text: str) -> tuple[str, float]:
        return self.table.get(text, self.default)
