"""Simultaneous multi-pattern substring matching (Aho-Corasick).

One pass over the text regardless of how many phrases are listed, which
is what makes per-language blocklists of hallucinated phrases cheap to
apply at corpus scale.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable


class PhraseMatcher:
    """Case-insensitive multi-pattern matcher over Unicode text.

    Patterns and queries are case-folded, so "THANK YOU" matches a
    pattern listed as "Thank you". Matching is plain substring
    containment; no word-boundary logic.
    """

    def __init__(self, phrases: Iterable[str]):
        # Node storage: transition dict, failure link, terminal marker.
        self._next: list[dict[str, int]] = [{}]
        self._fail: list[int] = [0]
        self._terminal: list[bool] = [False]
        self._phrases: list[str] = []
        for phrase in phrases:
            self._insert(phrase)
        self._build_links()

    def _insert(self, phrase: str) -> None:
        folded = phrase.casefold()
        if not folded:
            return
        self._phrases.append(phrase)
        node = 0
        for ch in folded:
            nxt = self._next[node].get(ch)
            if nxt is None:
                nxt = len(self._next)
                self._next.append({})
                self._fail.append(0)
                self._terminal.append(False)
                self._next[node][ch] = nxt
            node = nxt
        self._terminal[node] = True

    def _build_links(self) -> None:
        queue: deque[int] = deque()
        for child in self._next[0].values():
            self._fail[child] = 0
            queue.append(child)
        while queue:
            node = queue.popleft()
            for ch, child in self._next[node].items():
                fall = self._fail[node]
                while fall and ch not in self._next[fall]:
                    fall = self._fail[fall]
                target = self._next[fall].get(ch, 0)
                self._fail[child] = target
                # A state is terminal if any suffix reachable via failure
                # links completes a pattern.
                self._terminal[child] = self._terminal[child] or self._terminal[target]
                queue.append(child)

    def __len__(self) -> int:
        return len(self._phrases)

    @property
    def phrases(self) -> tuple[str, ...]:
        return tuple(self._phrases)

    def contains_any(self, text: str) -> bool:
        """True iff any listed phrase occurs in ``text`` (case-folded)."""
        nxt = self._next
        fail = self._fail
        terminal = self._terminal
        node = 0
        for ch in text.casefold():
            while node and ch not in nxt[node]:
                node = fail[node]
            node = nxt[node].get(ch, 0)
            if terminal[node]:
                return True
        return False


def load_phrase_file(path) -> list[str]:
    """Phrase list file: one phrase per line, '#' lines are comments."""
    phrases = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            phrases.append(stripped)
    return phrases
