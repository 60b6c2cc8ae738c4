import pytest
from hypothesis import given
from hypothesis import strategies as st

from granary.asr_filters import (
    AsrFilterConfig,
    AsrFilterResources,
    FilterInputError,
    char_rate,
    charset_check,
    detect_hallucinated_phrases,
    detect_long_words,
    detect_repeated_ngrams,
    filter_record,
    lid_filter,
    load_charset,
    text_filter,
)
from granary.matching import PhraseMatcher
from granary.records import UtteranceRecord

CFG = AsrFilterConfig()


def oracle_repeated_ngrams(tokens, cfg=CFG):
    """Direct definition: a block of enough consecutive identical n-grams."""
    num = len(tokens)
    k = cfg.unigram_min_consecutive_repeats
    for i in range(num - k + 1):
        if all(tokens[j] == tokens[i] for j in range(i, i + k)):
            return True
    n_lo, n_hi = cfg.ngram_n_range
    repeats = cfg.ngram_min_consecutive_repeats
    for n in range(n_lo, n_hi + 1):
        for i in range(num - n * repeats + 1):
            first = tokens[i:i + n]
            if all(tokens[i + a * n:i + (a + 1) * n] == first for a in range(1, repeats)):
                return True
    return False


def make_record(text, lang="en", duration=None, **kw):
    if duration is None:
        duration = max(1.0, len(text) / 15.0)
    base = dict(id="r", audio_ref="a.wav", offset_s=0.0, duration_s=duration,
                text=text, lang_target=lang, lid_pred=lang, lid_prob=0.95)
    base.update(kw)
    return UtteranceRecord(**base)


class TestLidFilter:
    def test_match_passes(self):
        assert not lid_filter(make_record("hello", lang="en"), CFG).dropped

    def test_mismatch_flagged(self):
        decision = lid_filter(make_record("hello", lang="en", lid_pred="de"), CFG)
        assert decision.flags == frozenset({"lid_mismatch"})

    def test_low_confidence_flagged(self):
        decision = lid_filter(make_record("hello", lid_prob=0.79), CFG)
        assert decision.flags == frozenset({"lid_low_conf"})

    def test_probability_at_threshold_passes(self):
        assert not lid_filter(make_record("hello", lid_prob=0.8), CFG).dropped

    def test_multiple_segment_languages_flagged(self):
        decision = lid_filter(make_record("hello", segment_lids=("en", "de")), CFG)
        assert decision.flags == frozenset({"lid_multi"})

    def test_uniform_segment_languages_pass(self):
        assert not lid_filter(make_record("hello", segment_lids=("en", "en", "en")), CFG).dropped

    def test_all_reasons_reported_together(self):
        record = make_record("hello", lid_pred="de", lid_prob=0.2, segment_lids=("de", "fr"))
        assert lid_filter(record, CFG).flags == frozenset({"lid_mismatch", "lid_low_conf", "lid_multi"})

    def test_missing_lid_raises(self):
        record = make_record("hello", lid_pred=None, lid_prob=None)
        with pytest.raises(FilterInputError, match="lid"):
            lid_filter(record, CFG)


class TestRepeatedNgrams:
    def test_unigram_run_at_threshold(self):
        assert detect_repeated_ngrams("a b b b b b c", CFG)
        assert not detect_repeated_ngrams("a b b b b c", CFG)

    def test_bigram_repeats(self):
        assert detect_repeated_ngrams("x y x y x y x y", CFG)
        assert not detect_repeated_ngrams("x y x y x y", CFG)

    def test_trigram_repeats(self):
        phrase = "one two three"
        assert detect_repeated_ngrams(" ".join([phrase] * 4), CFG)
        assert not detect_repeated_ngrams(" ".join([phrase] * 3), CFG)

    def test_interrupted_run_resets(self):
        assert not detect_repeated_ngrams("a a a stop a a a stop a a a", CFG)

    def test_empty_and_short_texts(self):
        assert not detect_repeated_ngrams("", CFG)
        assert not detect_repeated_ngrams("one", CFG)

    @given(st.lists(st.sampled_from(["a", "b", "c"]), max_size=30))
    def test_agrees_with_direct_definition(self, tokens):
        text = " ".join(tokens)
        assert detect_repeated_ngrams(text, CFG) == oracle_repeated_ngrams(tokens)

    @given(st.lists(st.sampled_from(["a", "b"]), max_size=24),
           st.integers(min_value=2, max_value=3),
           st.integers(min_value=2, max_value=4))
    def test_agrees_under_other_thresholds(self, tokens, repeats, uni_extra):
        cfg = AsrFilterConfig(
            ngram_min_consecutive_repeats=repeats,
            unigram_min_consecutive_repeats=repeats + uni_extra,
        )
        assert detect_repeated_ngrams(" ".join(tokens), cfg) == oracle_repeated_ngrams(tokens, cfg)


class TestLongWords:
    def test_at_limit_passes(self):
        assert not detect_long_words("x" * 40, CFG)

    def test_over_limit_fires(self):
        assert detect_long_words("ok " + "x" * 41, CFG)

    def test_unicode_counts_scalars(self):
        assert not detect_long_words("ü" * 40, CFG)
        assert detect_long_words("ü" * 41, CFG)


class TestPhrases:
    def test_match_via_index(self):
        matcher = PhraseMatcher(["thanks for watching"])
        assert detect_hallucinated_phrases("well thanks for watching bye", "en", matcher)

    def test_none_index_never_fires(self):
        assert not detect_hallucinated_phrases("anything", "en", None)


class TestCharRate:
    def test_rate_value(self):
        assert char_rate("abcd", 2.0) == pytest.approx(2.0)

    def test_zero_duration_rejected(self):
        with pytest.raises(ValueError):
            char_rate("abc", 0.0)

    def test_bounds_are_strict(self, asr_resources):
        # Exactly at either bound passes; outside fails.
        assert not text_filter(make_record("x" * 30, duration=1.0), asr_resources).dropped
        assert text_filter(make_record("x" * 31, duration=1.0), asr_resources).flags >= {"char_rate_high"}
        assert not text_filter(make_record("x", duration=1.0), asr_resources).dropped
        assert text_filter(make_record("x", duration=2.0), asr_resources).flags >= {"char_rate_low"}

    def test_per_language_override(self):
        cfg = AsrFilterConfig(char_rate_bounds={"de": (5.0, 10.0)})
        assert cfg.bounds_for("de") == (5.0, 10.0)
        assert cfg.bounds_for("en") == cfg.default_char_rate_bounds


class TestCharset:
    def test_first_offender_reported(self):
        allowed = frozenset("abc ")
        assert charset_check("abcabc", allowed) is None
        assert charset_check("abXcY", allowed) == (2, "X")

    def test_loaded_charset_covers_all_lexicons(self, charset):
        from granary._data import LEXICONS_DIR

        for path in sorted(LEXICONS_DIR.glob("*.txt")):
            for word in path.read_text(encoding="utf-8").split():
                assert charset_check(word, charset) is None, (path.stem, word)

    def test_charset_file_escapes(self, tmp_path):
        path = tmp_path / "cs.txt"
        path.write_text("a\n\\u0020\nb\n", encoding="utf-8")
        assert load_charset(path) == frozenset("ab ")

    def test_charset_file_rejects_multichar_lines(self, tmp_path):
        path = tmp_path / "cs.txt"
        path.write_text("ab\n", encoding="utf-8")
        with pytest.raises(ValueError, match="single character"):
            load_charset(path)


class TestTextFilter:
    def test_clean_text_passes(self, asr_resources):
        record = make_record("the meeting starts now and everyone is here")
        assert not text_filter(record, asr_resources).dropped

    def test_all_flags_reported_no_short_circuit(self, asr_resources):
        text = " ".join(["spam"] * 6) + " " + "y" * 50 + " 中"
        record = make_record(text, duration=1.0)
        decision = text_filter(record, asr_resources)
        assert decision.flags >= {"halluc_ngram", "halluc_longword", "charset", "char_rate_high"}

    def test_blocklisted_phrase_flagged(self, asr_resources):
        record = make_record("and then thanks for watching bye")
        assert text_filter(record, asr_resources).flags == frozenset({"halluc_phrase"})

    def test_unknown_language_requires_phrase_list(self, asr_resources):
        with pytest.raises(FilterInputError, match="phrase list"):
            text_filter(make_record("hello", lang="xx"), asr_resources)

    def test_phrase_lists_optional_skips_missing(self):
        cfg = AsrFilterConfig(phrase_lists_optional=True)
        resources = AsrFilterResources(cfg, frozenset("helo "), {})
        assert not text_filter(make_record("hello", lang="xx", duration=1.0), resources).dropped


class TestFilterRecord:
    def test_union_of_lid_and_text_flags(self, asr_resources):
        record = make_record("and then thanks for watching bye", lid_pred="de")
        decision = filter_record(record, asr_resources)
        assert decision.flags == frozenset({"lid_mismatch", "halluc_phrase"})
        assert decision.dropped


class TestConfigValidation:
    @pytest.mark.parametrize("kw", [
        {"min_lid_prob": 1.5},
        {"ngram_n_range": (0, 5)},
        {"ngram_n_range": (5, 2)},
        {"ngram_min_consecutive_repeats": 1},
        {"max_word_chars": 0},
        {"default_char_rate_bounds": (5.0, 2.0)},
        {"char_rate_bounds": {"de": (-1.0, 2.0)}},
    ])
    def test_bad_values_rejected(self, kw):
        with pytest.raises(ValueError):
            AsrFilterConfig(**kw).validate()
