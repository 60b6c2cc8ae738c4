import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from granary.pnc import (
    PncConfig,
    accept_restoration,
    build_restoration_prompt,
    cer,
    extract_restoration_reply,
    levenshtein,
    load_exemplars,
    normalize_for_gate,
    punctuation_subset,
)
from granary.languages import LANGUAGES


def oracle_levenshtein(a: str, b: str) -> int:
    """Full-matrix Wagner-Fischer, the textbook formulation."""
    m, n = len(a), len(b)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[m][n]


class TestLevenshtein:
    @pytest.mark.parametrize("a, b, want", [
        ("", "", 0),
        ("abc", "", 3),
        ("", "abc", 3),
        ("abc", "abc", 0),
        ("kitten", "sitting", 3),
        ("flaw", "lawn", 2),
        ("ça", "ca", 1),
    ])
    def test_known_distances(self, a, b, want):
        assert levenshtein(a, b) == want

    @given(st.text(max_size=24), st.text(max_size=24))
    def test_agrees_with_full_matrix(self, a, b):
        assert levenshtein(a, b) == oracle_levenshtein(a, b)

    @given(st.text(max_size=24), st.text(max_size=24))
    def test_symmetry(self, a, b):
        assert levenshtein(a, b) == levenshtein(b, a)

    @given(st.text(max_size=16), st.text(max_size=16), st.text(max_size=16))
    def test_triangle_inequality(self, a, b, c):
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


class TestCer:
    def test_empty_pair_is_zero(self):
        assert cer("", "") == 0.0

    def test_nonempty_against_empty_reference_is_inf(self):
        assert cer("x", "") == math.inf

    def test_empty_hypothesis(self):
        assert cer("", "abcd") == 1.0

    def test_normalized_by_reference_length(self):
        assert cer("abcx", "abcd") == pytest.approx(0.25)

    def test_can_exceed_one(self):
        assert cer("aaaaaaaa", "b") == 8.0


class TestNormalizeForGate:
    PUNCT = frozenset(".,!?'")

    def test_strips_case_punctuation_whitespace(self):
        assert normalize_for_gate("  Hello,   World!  ", self.PUNCT) == "hello world"

    def test_only_configured_punctuation_stripped(self):
        assert normalize_for_gate("a;b", self.PUNCT) == "a;b"

    def test_punctuation_subset_selects_p_category(self, charset):
        punct = punctuation_subset(charset)
        assert "." in punct and "," in punct and "«" in punct
        assert "a" not in punct and "5" not in punct


class TestAcceptRestoration:
    CFG = PncConfig()

    def test_case_and_punctuation_changes_accepted(self, charset):
        outcome = accept_restoration("hello how are you", "Hello, how are you?", self.CFG, charset)
        assert outcome.source == "restored"
        assert outcome.chosen_text == "Hello, how are you?"
        assert outcome.cer_value == 0.0

    def test_word_drift_reverted(self, charset):
        original = "one two three four five six seven eight nine ten"
        restored = "One two tree for five sax seven eight nine ten."
        outcome = accept_restoration(original, restored, self.CFG, charset)
        assert outcome.source == "original"
        assert outcome.chosen_text == original
        assert outcome.cer_value > self.CFG.cer_threshold

    def test_small_typo_fix_within_gate_accepted(self, charset):
        original = "the quick brown fox jumps over the lazy dog again and again"
        restored = "The quick brown fox jumps over the lazy dogs again and again."
        outcome = accept_restoration(original, restored, self.CFG, charset)
        assert outcome.source == "restored"
        assert 0.0 < outcome.cer_value <= self.CFG.cer_threshold

    def test_restored_with_forbidden_characters_reverted(self, charset):
        outcome = accept_restoration("hello there friend", "Hello there friend 中.", self.CFG, charset)
        assert outcome.source == "original"

    def test_unnormalized_mode_counts_case_edits(self, charset):
        cfg = PncConfig(normalize=False)
        outcome = accept_restoration("hello how are you today", "Hello, how are you today?", cfg, charset)
        assert outcome.source == "original"
        assert outcome.cer_value > 0.0

    def test_empty_original_nonempty_restoration_reverted(self, charset):
        outcome = accept_restoration("", "Hello.", self.CFG, charset)
        assert outcome.source == "original"
        assert outcome.cer_value == math.inf

    def test_bad_threshold_rejected(self, charset):
        with pytest.raises(ValueError):
            accept_restoration("a", "a", PncConfig(cer_threshold=-0.1), charset)


class TestPrompts:
    def test_prompt_contains_exemplars_and_input(self):
        prompt = build_restoration_prompt("fr", "bonjour à tous", (("avant", "Avant."), ("deux", "Deux?")))
        assert "French" in prompt
        assert "<input>avant</input>" in prompt
        assert "<output>Avant.</output>" in prompt
        assert prompt.rstrip().endswith("<input>bonjour à tous</input>")

    def test_reply_extraction(self):
        assert extract_restoration_reply("noise <output>Fixed.</output> tail") == "Fixed."
        assert extract_restoration_reply("no tags here") is None
        assert extract_restoration_reply("</output> backwards <output>") is None

    def test_exemplars_exist_for_every_language(self):
        for lang in LANGUAGES:
            pairs = load_exemplars(lang)
            assert len(pairs) >= 2
            for before, after in pairs:
                assert before and after

    def test_missing_language_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_exemplars("en", exemplars_dir=tmp_path)

    def test_single_pair_file_rejected(self, tmp_path):
        (tmp_path / "en.tsv").write_text("a\tA.\n", encoding="utf-8")
        with pytest.raises(ValueError, match="two exemplar"):
            load_exemplars("en", exemplars_dir=tmp_path)

    def test_malformed_line_rejected(self, tmp_path):
        (tmp_path / "en.tsv").write_text("a\tA.\nbad line\n", encoding="utf-8")
        with pytest.raises(ValueError, match="before"):
            load_exemplars("en", exemplars_dir=tmp_path)
