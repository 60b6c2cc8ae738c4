"""Deterministic in-process mocks for the model services.

Every response is a pure function of (request, seed), so two pipeline
runs with the same seed produce bit-identical manifests. Fixtures steer
outcomes explicitly:

* query parameters on the audio locator control the ASR side, e.g.
  ``synth://rec1?lid=fr&lid_prob=0.95&text=bonjour+le+monde``
  (``seg_lids=fr,de`` forces per-segment languages, ``fail=1`` makes
  the backend fail persistently);
* marker tokens inside the text control the translation side:
  ``xxratio`` (oversized translation), ``xxlidoff`` (wrong-language
  translation in Latin script), ``xxbadscript`` (Cyrillic translation),
  ``xxqelow`` (low quality score), ``xxsvcfail`` (persistent translate
  failure), ``pncfail`` (persistent restoration failure), and
  ``pncdrift``/``pncbadchar`` (restoration that trips the gate).

The same backend powers the standalone mock HTTP server used for
integration tests (``granary mock-server``).
"""

from __future__ import annotations

import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .clients import (
    ServiceError,
    TranscriptionResult,
    TranscriptionSegment,
    transcription_result_from_obj,
)
from .languages import LANGUAGES

# Overlaps the shipped English lexicon so mock translations classify as "en".
_EN_WORDS = (
    "the", "and", "of", "to", "in", "that", "it", "is", "was", "for",
    "on", "with", "as", "at", "by", "from", "this", "have", "not", "are",
)

_FR_WORDS = ("le", "la", "les", "des", "une", "dans", "pour", "avec", "sur", "est")
_RU_WORDS = ("что", "это", "было", "как", "мы", "они", "его", "так", "уже", "вот")

_FILLER_WORDS = (
    "ana", "bel", "cor", "dun", "eri", "fal", "gor", "hin", "ith", "jol",
    "kem", "lor", "mun", "nel", "oru", "pel", "qin", "rul", "sen", "tor",
)


class MockServiceFailure(Exception):
    """Simulated persistent backend failure."""


def _ref_params(audio_ref: str) -> dict[str, str]:
    query = urlsplit(audio_ref).query
    return {k: v[0] for k, v in parse_qs(query).items()}


class MockBackend:
    """Seeded deterministic stand-in for all four model services."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _unit(self, *key: object) -> float:
        """Stable pseudo-random float in [0, 1) derived from seed and key."""
        material = "\x1f".join([str(self.seed), *map(str, key)])
        digest = hashlib.sha256(material.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") / 2**64

    def _pick(self, options, *key: object):
        return options[int(self._unit(*key) * len(options)) % len(options)]

    # -- ASR ----------------------------------------------------------------

    def detect_language(self, audio_ref: str) -> tuple[str, float]:
        params = _ref_params(audio_ref)
        if params.get("fail"):
            raise MockServiceFailure(f"configured failure for {audio_ref}")
        lang = params.get("lid") or self._pick(LANGUAGES, "lid", audio_ref)
        if "lid_prob" in params:
            prob = float(params["lid_prob"])
        else:
            prob = round(0.85 + 0.14 * self._unit("lid_prob", audio_ref), 4)
        return lang, prob

    def transcribe(self, audio_ref: str, lang_hint: str, window: tuple[float, float]) -> TranscriptionResult:
        params = _ref_params(audio_ref)
        if params.get("fail"):
            raise MockServiceFailure(f"configured failure for {audio_ref}")
        start, end = window
        if end <= start:
            raise MockServiceFailure(f"empty window ({start}, {end})")

        text = params.get("text")
        if text is None:
            n_words = max(1, int((end - start) * 2))
            text = " ".join(
                self._pick(_FILLER_WORDS, "word", audio_ref, start, i) for i in range(n_words)
            )
        words = text.split()

        seg_lids = params["seg_lids"].split(",") if "seg_lids" in params else None
        n_segments = int(params.get("nseg", "0")) or min(len(words), 1 + int(self._unit("nseg", audio_ref) * 2))
        n_segments = max(1, n_segments)

        # Even time split, words kept in order in contiguous chunks.
        seg_duration = (end - start) / n_segments
        chunk = (len(words) + n_segments - 1) // n_segments
        per_seg = [words[i * chunk:(i + 1) * chunk] for i in range(n_segments)]

        segments = []
        for i in range(n_segments):
            lid = seg_lids[i % len(seg_lids)] if seg_lids else lang_hint
            prob = round(0.9 + 0.09 * self._unit("seg_prob", audio_ref, i), 4)
            segments.append(
                TranscriptionSegment(
                    start_s=start + i * seg_duration,
                    end_s=start + (i + 1) * seg_duration,
                    text=" ".join(per_seg[i]),
                    lid=lid,
                    lid_prob=prob,
                )
            )
        lang, lang_prob = self.detect_language(audio_ref)
        result = TranscriptionResult(
            segments=tuple(segments), detected_lang=lang, detected_lang_prob=lang_prob
        )
        result.validate()
        return result

    # -- Translation / QE / restoration -------------------------------------

    def translate(self, text: str, src_lang: str, tgt_lang: str) -> str:
        if "xxsvcfail" in text:
            raise MockServiceFailure("configured translate failure")
        words = text.split()
        if "xxratio" in text:
            out = [self._pick(_EN_WORDS, "ratio", text, i) for i in range(max(60, 12 * len(words)))]
        elif "xxbadscript" in text:
            out = [self._pick(_RU_WORDS, "bad", text, i) for i in range(len(words))]
        elif "xxlidoff" in text:
            out = [self._pick(_FR_WORDS, "lidoff", text, i) for i in range(len(words))]
        else:
            out = [_EN_WORDS[int(self._unit("tr", w, i) * len(_EN_WORDS)) % len(_EN_WORDS)] for i, w in enumerate(words)]
        rendered = " ".join(out)
        if not rendered:
            return ""
        return rendered[0].upper() + rendered[1:] + "."

    def qe_score(self, src_text: str, tgt_text: str, src_lang: str, tgt_lang: str) -> float:
        if "xxsvcfail" in src_text:
            raise MockServiceFailure("configured qe failure")
        if "xxqelow" in src_text or "xxqelow" in tgt_text:
            return 0.1
        if src_text == tgt_text:
            return 0.9
        return round(0.8 + 0.19 * self._unit("qe", src_text, tgt_text), 4)

    def restore_pnc(self, text: str, lang: str) -> str:
        if "pncfail" in text:
            raise MockServiceFailure("configured restoration failure")
        if "pncbadchar" in text:
            return text + " 中"
        words = text.split()
        if "pncdrift" in text:
            # Rewrite every third word: drifts far past any sane CER gate.
            words = [
                self._pick(_FILLER_WORDS, "drift", text, i) if i % 3 == 0 else w
                for i, w in enumerate(words)
            ]
        rendered = " ".join(words)
        if not rendered:
            return rendered
        rendered = rendered[0].upper() + rendered[1:]
        if rendered[-1] not in ".!?":
            rendered += "."
        return rendered


class MockServiceClient:
    """In-process client with the same surface as HttpServiceClient."""

    def __init__(self, backend: MockBackend):
        self.backend = backend

    def _wrap(self, fn, *args):
        try:
            return fn(*args)
        except MockServiceFailure as exc:
            raise ServiceError(str(exc), attempts=1) from exc

    def detect_language(self, audio_ref: str) -> tuple[str, float]:
        return self._wrap(self.backend.detect_language, audio_ref)

    def transcribe(self, audio_ref: str, lang_hint: str, window: tuple[float, float]) -> TranscriptionResult:
        return self._wrap(self.backend.transcribe, audio_ref, lang_hint, window)

    def translate(self, text: str, src_lang: str, tgt_lang: str) -> str:
        if not text:
            raise ValueError("translate requires non-empty input text")
        if src_lang == tgt_lang:
            raise ValueError(f"translate requires src != tgt, got {src_lang!r} twice")
        translated = self._wrap(self.backend.translate, text, src_lang, tgt_lang)
        if not translated:
            raise ServiceError("empty_translation", code="empty_translation")
        return translated

    def qe_score(self, src_text: str, tgt_text: str, src_lang: str, tgt_lang: str) -> float:
        if not src_text or not tgt_text:
            raise ValueError("qe_score requires non-empty source and target texts")
        score = self._wrap(self.backend.qe_score, src_text, tgt_text, src_lang, tgt_lang)
        return min(1.0, max(0.0, float(score)))

    def restore_pnc(self, text: str, lang: str) -> str:
        if not text:
            raise ValueError("restore_pnc requires non-empty input text")
        return self._wrap(self.backend.restore_pnc, text, lang)


def _result_to_obj(result: TranscriptionResult) -> dict:
    return {
        "segments": [
            {"start": s.start_s, "end": s.end_s, "text": s.text, "lid": s.lid, "lid_prob": s.lid_prob}
            for s in result.segments
        ],
        "detected_lang": result.detected_lang,
        "detected_lang_prob": result.detected_lang_prob,
    }


class _MockHandler(BaseHTTPRequestHandler):
    backend: MockBackend  # set on the server class

    def log_message(self, fmt, *args):  # noqa: A003 - silence default stderr spam
        pass

    def _reply(self, status: int, obj: dict) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):  # noqa: N802 - http.server naming
        backend = self.server.backend  # type: ignore[attr-defined]
        length = int(self.headers.get("Content-Length", "0"))
        try:
            payload = json.loads(self.rfile.read(length).decode("utf-8")) if length else {}
        except (ValueError, UnicodeDecodeError):
            self._reply(400, {"error": "malformed JSON body"})
            return
        try:
            if self.path == "/v1/detect_language":
                lang, prob = backend.detect_language(payload["audio_ref"])
                self._reply(200, {"lang": lang, "prob": prob})
            elif self.path == "/v1/transcribe":
                result = backend.transcribe(
                    payload["audio_ref"],
                    payload.get("lang_hint", ""),
                    (float(payload["start"]), float(payload["end"])),
                )
                self._reply(200, _result_to_obj(result))
            elif self.path == "/v1/translate":
                text = backend.translate(payload["text"], payload.get("src", ""), payload.get("tgt", ""))
                self._reply(200, {"text": text})
            elif self.path == "/v1/qe_score":
                score = backend.qe_score(
                    payload["src_text"], payload["tgt_text"], payload.get("src", ""), payload.get("tgt", "")
                )
                self._reply(200, {"score": score})
            elif self.path == "/v1/restore_pnc":
                text = backend.restore_pnc(payload["text"], payload.get("lang", ""))
                self._reply(200, {"text": text})
            else:
                self._reply(404, {"error": f"unknown endpoint {self.path}"})
        except MockServiceFailure as exc:
            self._reply(503, {"error": str(exc)})
        except KeyError as exc:
            self._reply(400, {"error": f"missing field {exc.args[0]!r}"})


class MockServer:
    """Seeded mock model server on a background thread."""

    def __init__(self, seed: int = 0, port: int = 0, host: str = "127.0.0.1"):
        self._httpd = ThreadingHTTPServer((host, port), _MockHandler)
        self._httpd.backend = MockBackend(seed)  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def __enter__(self) -> "MockServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()
