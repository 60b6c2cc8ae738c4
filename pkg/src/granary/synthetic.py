"""Deterministic synthetic manifests with per-record ground truth.

Generated records embed directives for the seeded mock services in their
audio_ref query string, so the transcription, language id, translation,
and restoration behavior of a run is fixed at generation time. Every
record is replayed through the real filter stack while generating:
clean records are re-rolled until they pass everything, and records
with an injected defect must reproduce exactly the expected flag set.
The returned plan is therefore a trustworthy oracle for end-to-end
pipeline tests: it states, per record, whether the pipeline must keep
or drop it and with which flags.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence
from urllib.parse import urlencode

from ._data import LEXICONS_DIR
from .asr_filters import (
    AsrFilterConfig,
    AsrFilterResources,
    default_phrase_lists,
    lid_filter,
    text_filter,
)
from .ast_filters import AstFilterConfig, AstFilterResources, filter_pair
from .languages import LANGUAGES
from .matching import load_phrase_file
from .mocks import MockBackend, MockServiceFailure
from .pnc import PncConfig, accept_restoration
from .records import TranslationPair, UtteranceRecord, freeze_extra
from .text_lid import LexiconLidClassifier, TextLidClassifier

TGT_LANG = "en"

FAILURE_MODES = (
    "lid_mismatch",
    "lid_low_conf",
    "lid_multi",
    "halluc_ngram",
    "halluc_longword",
    "halluc_phrase",
    "char_rate_low",
    "char_rate_high",
    "charset",
    "ast_len_ratio",
    "ast_histogram",
    "ast_lid",
    "ast_qe",
    "service_error_asr",
    "service_error_mt",
    "service_error_pnc",
    "pnc_drift",
    "pnc_badchar",
)

# Modes whose defect lives in the translation leg; they need a source
# language other than the translation target.
_NEEDS_MT = frozenset({"ast_len_ratio", "ast_histogram", "ast_lid", "ast_qe", "service_error_mt"})

# Ground truth per mode. ast_histogram co-trips the text LID check: a
# wrong-script translation cannot classify as the target language either.
_EXPECTED: dict[str, tuple[frozenset[str], bool]] = {
    "clean": (frozenset(), False),
    "lid_mismatch": (frozenset({"lid_mismatch"}), True),
    "lid_low_conf": (frozenset({"lid_low_conf"}), True),
    "lid_multi": (frozenset({"lid_multi"}), True),
    "halluc_ngram": (frozenset({"halluc_ngram"}), True),
    "halluc_longword": (frozenset({"halluc_longword"}), True),
    "halluc_phrase": (frozenset({"halluc_phrase"}), True),
    "char_rate_low": (frozenset({"char_rate_low"}), True),
    "char_rate_high": (frozenset({"char_rate_high"}), True),
    "charset": (frozenset({"charset"}), True),
    "ast_len_ratio": (frozenset({"ast_len_ratio"}), True),
    "ast_histogram": (frozenset({"ast_histogram", "ast_lid"}), True),
    "ast_lid": (frozenset({"ast_lid"}), True),
    "ast_qe": (frozenset({"ast_qe"}), True),
    "service_error_asr": (frozenset({"service_error"}), True),
    "service_error_mt": (frozenset({"service_error"}), True),
    "service_error_pnc": (frozenset({"service_error"}), True),
    "pnc_drift": (frozenset({"pnc_reverted"}), False),
    "pnc_badchar": (frozenset({"pnc_reverted"}), False),
}

_ASCII_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass
class SyntheticConfig:
    count: int = 1000
    seed: int = 0
    failure_rate: float = 0.35
    languages: Sequence[str] = LANGUAGES
    corpora: Sequence[str] = ("yodas", "ytc", "mosel")
    modes: Sequence[str] = FAILURE_MODES
    with_spans: bool = True
    max_attempts: int = 50

    def validate(self) -> None:
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if not (0.0 <= self.failure_rate <= 1.0):
            raise ValueError(f"failure_rate must be in [0,1], got {self.failure_rate}")
        unknown = set(self.modes) - set(FAILURE_MODES)
        if unknown:
            raise ValueError(f"unknown failure modes: {sorted(unknown)}")
        if not self.languages or not self.corpora:
            raise ValueError("need at least one language and one corpus")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class PlannedRecord:
    record: UtteranceRecord
    mode: str
    expected_flags: frozenset[str]
    expect_drop: bool


@dataclass
class _GenContext:
    cfg: SyntheticConfig
    backend: MockBackend
    asr: AsrFilterResources
    ast: AstFilterResources
    classifier: TextLidClassifier
    pnc_cfg: PncConfig
    word_lists: Mapping[str, tuple[str, ...]]
    phrases: Mapping[str, tuple[str, ...]]


def load_word_lists(lexicons_dir: str | Path = LEXICONS_DIR) -> dict[str, tuple[str, ...]]:
    lists: dict[str, tuple[str, ...]] = {}
    for path in sorted(Path(lexicons_dir).glob("*.txt")):
        words = tuple(
            line.strip()
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.startswith("#")
        )
        if words:
            lists[path.stem] = words
    return lists


def _sub_rng(seed: int, index: int, label: str, attempt: int = 0) -> random.Random:
    material = f"{seed}:{index}:{label}:{attempt}".encode("utf-8")
    value = int.from_bytes(hashlib.sha256(material).digest()[:8], "big")
    return random.Random(value)


def _other_lang(lang: str, languages: Sequence[str], rng: random.Random) -> str:
    options = [code for code in languages if code != lang]
    if not options:
        raise ValueError("cross-language modes need at least two languages")
    return rng.choice(options)


def _sample_words(rng: random.Random, pool: Sequence[str], count: int) -> list[str]:
    if len(pool) < 2:
        raise ValueError("word pool must hold at least two distinct words")
    words: list[str] = []
    while len(words) < count:
        word = pool[rng.randrange(len(pool))]
        # No immediate repeats: keeps clean text clear of unigram runs.
        if words and words[-1] == word:
            continue
        words.append(word)
    return words


def _raw_spans(rng: random.Random, duration_s: float) -> list[dict[str, float]]:
    """Plausible sub-span annotations inside [0, duration], non-overlapping."""
    max_spans = max(1, min(4, int(duration_s // 1.5)))
    count = rng.randint(1, max_spans)
    bounds = sorted(rng.uniform(0.0, duration_s) for _ in range(2 * count))
    spans = []
    for i in range(count):
        start = round(bounds[2 * i], 3)
        end = round(bounds[2 * i + 1], 3)
        if end - start < 0.05:
            continue
        spans.append({"start": start, "end": end})
    if not spans:
        spans = [{"start": 0.0, "end": round(duration_s, 3)}]
    return spans


def _insert_at(words: list[str], token: str, rng: random.Random) -> None:
    # Never position 0: restoration capitalizes the first word, which would
    # break case-sensitive marker detection in downstream services.
    words.insert(rng.randrange(1, len(words) + 1), token)


def _draft(ctx: _GenContext, index: int, mode: str, rng: random.Random) -> UtteranceRecord:
    cfg = ctx.cfg
    if mode in _NEEDS_MT:
        langs = [code for code in cfg.languages if code != TGT_LANG]
        if not langs:
            raise ValueError(f"mode {mode!r} needs a source language other than {TGT_LANG!r}")
    else:
        langs = list(cfg.languages)
    lang = rng.choice(langs)
    corpus = rng.choice(list(cfg.corpora))
    words = _sample_words(rng, ctx.word_lists[lang], rng.randint(6, 14))
    rate = rng.uniform(8.0, 24.0)
    lid_lang = lang
    lid_prob = round(0.85 + 0.14 * rng.random(), 3)
    params: list[tuple[str, str]] = []

    if mode == "lid_mismatch":
        lid_lang = _other_lang(lang, cfg.languages, rng)
    elif mode == "lid_low_conf":
        lid_prob = round(0.3 + 0.4 * rng.random(), 3)
    elif mode == "lid_multi":
        other = _other_lang(lang, cfg.languages, rng)
        params.append(("seg_lids", f"{lang},{other}"))
        params.append(("nseg", "2"))
    elif mode == "halluc_ngram":
        first, second = rng.sample(list(ctx.word_lists[lang]), 2)
        words.extend([first, second] * 4)
    elif mode == "halluc_longword":
        words.append("".join(rng.choice(_ASCII_LETTERS) for _ in range(45)))
    elif mode == "halluc_phrase":
        phrases = ctx.phrases.get(lang)
        if not phrases:
            raise ValueError(f"no phrase list for language {lang!r}")
        words.extend(rng.choice(phrases).split())
    elif mode == "char_rate_low":
        rate = 0.5
    elif mode == "char_rate_high":
        rate = 45.0
    elif mode == "charset":
        _insert_at(words, "中文", rng)
    elif mode == "ast_len_ratio":
        _insert_at(words, "xxratio", rng)
    elif mode == "ast_histogram":
        _insert_at(words, "xxbadscript", rng)
    elif mode == "ast_lid":
        _insert_at(words, "xxlidoff", rng)
    elif mode == "ast_qe":
        _insert_at(words, "xxqelow", rng)
    elif mode == "service_error_asr":
        params.append(("fail", "1"))
    elif mode == "service_error_mt":
        _insert_at(words, "xxsvcfail", rng)
    elif mode == "service_error_pnc":
        _insert_at(words, "pncfail", rng)
    elif mode == "pnc_drift":
        _insert_at(words, "pncdrift", rng)
    elif mode == "pnc_badchar":
        _insert_at(words, "pncbadchar", rng)
    elif mode != "clean":
        raise ValueError(f"unknown failure mode {mode!r}")

    text = " ".join(words)
    duration = round(len(text) / rate, 2)
    params = [("lid", lid_lang), ("lid_prob", str(lid_prob)), ("text", text)] + params
    audio_ref = f"syn://{corpus}/{index:06d}.wav?" + urlencode(params)
    extra = {"spans": _raw_spans(rng, duration)} if cfg.with_spans else None
    return UtteranceRecord(
        id=f"syn-{index:06d}",
        audio_ref=audio_ref,
        offset_s=round(rng.uniform(0.0, 900.0), 2),
        duration_s=duration,
        text=text,
        lang_target=lang,
        corpus=corpus,
        extra=freeze_extra(extra),
    )


def simulate_record(ctx: _GenContext, record: UtteranceRecord) -> tuple[frozenset[str], bool]:
    """Replay the per-record stage chain against the mock backend.

    Returns (final flags, dropped). Mirrors pipeline semantics: a stage
    whose drop-class flag fires routes the record out immediately.
    """
    backend = ctx.backend
    flags: set[str] = set()
    try:
        lid_lang, lid_prob = backend.detect_language(record.audio_ref)
        result = backend.transcribe(record.audio_ref, lid_lang, (0.0, record.duration_s))
    except MockServiceFailure:
        return frozenset({"service_error"}), True
    working = replace(
        record,
        text=" ".join(seg.text for seg in result.segments if seg.text),
        lid_pred=lid_lang,
        lid_prob=lid_prob,
        segment_lids=tuple(seg.lid for seg in result.segments),
    )

    decision = lid_filter(working, ctx.asr.cfg)
    flags |= decision.flags
    if decision.dropped:
        return frozenset(flags), True
    decision = text_filter(working, ctx.asr)
    flags |= decision.flags
    if decision.dropped:
        return frozenset(flags), True

    try:
        restored = backend.restore_pnc(working.text, working.lang_target)
    except MockServiceFailure:
        flags.add("service_error")
        return frozenset(flags), True
    outcome = accept_restoration(working.text, restored, ctx.pnc_cfg, ctx.asr.charset)
    if outcome.source == "original":
        flags.add("pnc_reverted")
    chosen = outcome.chosen_text

    if working.lang_target != TGT_LANG:
        try:
            translated = backend.translate(chosen, working.lang_target, TGT_LANG)
            qe = min(1.0, max(0.0, backend.qe_score(chosen, translated, working.lang_target, TGT_LANG)))
        except MockServiceFailure:
            flags.add("service_error")
            return frozenset(flags), True
        pair = TranslationPair(
            id=working.id,
            src_text=chosen,
            tgt_text=translated,
            src_lang=working.lang_target,
            tgt_lang=TGT_LANG,
            qe_score=qe,
        )
        decision = filter_pair(pair, ctx.ast, ctx.classifier)
        flags |= decision.flags
        if decision.dropped:
            return frozenset(flags), True
    return frozenset(flags), False


def _build_record(ctx: _GenContext, index: int, mode: str) -> PlannedRecord:
    expected_flags, expect_drop = _EXPECTED[mode]
    last: tuple[frozenset[str], bool] | None = None
    for attempt in range(ctx.cfg.max_attempts):
        rng = _sub_rng(ctx.cfg.seed, index, "draft", attempt)
        record = _draft(ctx, index, mode, rng)
        outcome = simulate_record(ctx, record)
        if outcome == (expected_flags, expect_drop):
            return PlannedRecord(record, mode, expected_flags, expect_drop)
        last = outcome
    raise RuntimeError(
        f"record {index} mode {mode!r}: expected {(sorted(expected_flags), expect_drop)} "
        f"but drafts kept producing {last} after {ctx.cfg.max_attempts} attempts"
    )


def build_context(cfg: SyntheticConfig) -> _GenContext:
    ctx = _GenContext(
        cfg=cfg,
        backend=MockBackend(seed=cfg.seed),
        asr=AsrFilterResources.from_config(AsrFilterConfig()),
        ast=AstFilterResources.from_config(AstFilterConfig()),
        classifier=LexiconLidClassifier.from_dir(),
        pnc_cfg=PncConfig(),
        word_lists=load_word_lists(),
        phrases={lang: tuple(load_phrase_file(path)) for lang, path in default_phrase_lists().items()},
    )
    missing = [lang for lang in cfg.languages if lang not in ctx.word_lists]
    if missing:
        raise ValueError(f"no word lists for languages: {missing}")
    return ctx


def generate(cfg: SyntheticConfig | None = None) -> list[PlannedRecord]:
    cfg = cfg if cfg is not None else SyntheticConfig()
    cfg.validate()
    ctx = build_context(cfg)
    plans: list[PlannedRecord] = []
    n_failures = 0
    for index in range(cfg.count):
        picker = _sub_rng(cfg.seed, index, "mode")
        if cfg.modes and picker.random() < cfg.failure_rate:
            # Round-robin over modes so small corpora still cover all of them.
            mode = cfg.modes[n_failures % len(cfg.modes)]
            n_failures += 1
        else:
            mode = "clean"
        plans.append(_build_record(ctx, index, mode))
    return plans


def plan_truth_obj(plan: PlannedRecord) -> dict:
    return {
        "id": plan.record.id,
        "mode": plan.mode,
        "expected_flags": sorted(plan.expected_flags),
        "expect_drop": plan.expect_drop,
    }
