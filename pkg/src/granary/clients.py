"""HTTP clients for the external model services.

The pipeline needs only the I/O contract of the transcription+LID,
translation, restoration, and quality-estimation backends: plain HTTP
with JSON bodies, so any model server (or the bundled deterministic
mock) can sit behind the same endpoints:

    POST /v1/detect_language  {audio_ref}                          -> {lang, prob}
    POST /v1/transcribe       {audio_ref, lang_hint, start, end,
                               decode_params}                      -> TranscriptionResult
    POST /v1/translate        {text, src, tgt, decode_params}      -> {text}
    POST /v1/qe_score         {src_text, tgt_text, src, tgt}       -> {score}
    POST /v1/restore_pnc      {text, lang}                         -> {text}

The env var GRANARY_SERVICES ("asr=URL,translate=URL,qe=URL,pnc=URL")
overrides configured base URLs per service.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping

import requests

logger = logging.getLogger("granary.clients")

SERVICE_ROLES = ("asr", "translate", "qe", "pnc")

DEFAULT_DECODE_PARAMS: Mapping[str, Any] = MappingProxyType({"beam_size": 5, "batch_size": 16})
GREEDY_DECODE_PARAMS: Mapping[str, Any] = MappingProxyType({"mode": "greedy"})

_BODY_EXCERPT_CHARS = 200


class ServiceError(Exception):
    """Transport or protocol failure talking to a model service."""

    def __init__(self, message: str, *, code: str = "service_error", attempts: int = 1, status: int | None = None):
        super().__init__(message)
        self.code = code
        self.attempts = attempts
        self.status = status


@dataclass(frozen=True, slots=True)
class ServiceConfig:
    base_url: str
    timeout_s: float = 120.0
    max_retries: int = 2
    backoff_base_s: float = 1.0
    # Forwarded opaquely to the backend; beam/batch sizing is its concern.
    decode_params: Mapping[str, Any] = field(default_factory=lambda: DEFAULT_DECODE_PARAMS)
    max_inflight: int = 16

    def validate(self) -> None:
        if not self.base_url:
            raise ValueError("base_url must be non-empty")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.backoff_base_s < 0:
            raise ValueError("backoff_base_s must be >= 0")
        if self.max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")


@dataclass(frozen=True, slots=True)
class TranscriptionSegment:
    start_s: float
    end_s: float
    text: str
    lid: str
    lid_prob: float


@dataclass(frozen=True, slots=True)
class TranscriptionResult:
    segments: tuple[TranscriptionSegment, ...]
    detected_lang: str
    detected_lang_prob: float

    def validate(self) -> None:
        prev_end = None
        for seg in self.segments:
            if seg.end_s <= seg.start_s:
                raise ServiceError(
                    f"segment ({seg.start_s}, {seg.end_s}) is not a positive interval", code="invalid_segments"
                )
            if prev_end is not None and seg.start_s < prev_end:
                raise ServiceError(
                    f"segment starting at {seg.start_s} overlaps previous end {prev_end}", code="invalid_segments"
                )
            if not (0.0 <= seg.lid_prob <= 1.0):
                raise ServiceError(f"segment lid_prob {seg.lid_prob} outside [0,1]", code="invalid_segments")
            prev_end = seg.end_s
        if not (0.0 <= self.detected_lang_prob <= 1.0):
            raise ServiceError(f"detected_lang_prob {self.detected_lang_prob} outside [0,1]", code="invalid_segments")


def transcription_result_from_obj(obj: Mapping[str, Any]) -> TranscriptionResult:
    segments = tuple(
        TranscriptionSegment(
            start_s=float(s["start"]),
            end_s=float(s["end"]),
            text=str(s.get("text", "")),
            lid=str(s.get("lid", "")),
            lid_prob=float(s.get("lid_prob", 0.0)),
        )
        for s in obj.get("segments", [])
    )
    result = TranscriptionResult(
        segments=segments,
        detected_lang=str(obj.get("detected_lang", "")),
        detected_lang_prob=float(obj.get("detected_lang_prob", 0.0)),
    )
    result.validate()
    return result


# transport(url, payload, timeout_s) -> (status_code, parsed_body_or_text)
Transport = Callable[[str, Mapping[str, Any], float], tuple[int, Any]]


def _requests_transport(session: requests.Session) -> Transport:
    def post(url: str, payload: Mapping[str, Any], timeout_s: float) -> tuple[int, Any]:
        resp = session.post(url, json=payload, timeout=timeout_s)
        try:
            body = resp.json()
        except ValueError:
            body = resp.text
        return resp.status_code, body

    return post


class HttpServiceClient:
    """Thin JSON-over-HTTP client with bounded retries and backoff.

    Persistent failures surface after exactly ``1 + max_retries``
    attempts, with exponential delays ``backoff_base_s * 2**k``. Retries
    cover transport errors and 5xx responses; other non-200 statuses
    fail immediately with a body excerpt.
    """

    def __init__(
        self,
        config: ServiceConfig,
        transport: Transport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        config.validate()
        self.config = config
        if transport is None:
            session = requests.Session()
            adapter = requests.adapters.HTTPAdapter(
                pool_connections=config.max_inflight, pool_maxsize=config.max_inflight
            )
            session.mount("http://", adapter)
            session.mount("https://", adapter)
            transport = _requests_transport(session)
        self._transport = transport
        self._sleep = sleep

    def _post(self, path: str, payload: Mapping[str, Any]) -> Any:
        url = self.config.base_url.rstrip("/") + path
        attempts = 1 + self.config.max_retries
        last_error: str = "unknown"
        last_status: int | None = None
        for attempt in range(attempts):
            try:
                status, body = self._transport(url, payload, self.config.timeout_s)
            except requests.RequestException as exc:
                last_error = f"transport failure: {exc}"
                last_status = None
            else:
                if status == 200:
                    return body
                excerpt = str(body)[:_BODY_EXCERPT_CHARS]
                last_error = f"HTTP {status}: {excerpt}"
                last_status = status
                if status < 500:
                    raise ServiceError(
                        f"{url} failed: {last_error}", attempts=attempt + 1, status=status
                    )
            if attempt < attempts - 1:
                self._sleep(self.config.backoff_base_s * (2**attempt))
        raise ServiceError(
            f"{url} failed after {attempts} attempts: {last_error}", attempts=attempts, status=last_status
        )

    def detect_language(self, audio_ref: str) -> tuple[str, float]:
        body = self._post("/v1/detect_language", {"audio_ref": audio_ref})
        return str(body["lang"]), float(body["prob"])

    def transcribe(self, audio_ref: str, lang_hint: str, window: tuple[float, float]) -> TranscriptionResult:
        start, end = window
        body = self._post(
            "/v1/transcribe",
            {
                "audio_ref": audio_ref,
                "lang_hint": lang_hint,
                "start": start,
                "end": end,
                "decode_params": dict(self.config.decode_params),
            },
        )
        return transcription_result_from_obj(body)

    def translate(self, text: str, src_lang: str, tgt_lang: str) -> str:
        if not text:
            raise ValueError("translate requires non-empty input text")
        if src_lang == tgt_lang:
            raise ValueError(f"translate requires src != tgt, got {src_lang!r} twice")
        body = self._post(
            "/v1/translate",
            {
                "text": text,
                "src": src_lang,
                "tgt": tgt_lang,
                # Greedy decoding: beam search buys nothing at this model
                # size and costs throughput.
                "decode_params": dict(GREEDY_DECODE_PARAMS),
            },
        )
        translated = str(body.get("text", ""))
        if not translated:
            raise ServiceError("empty_translation", code="empty_translation")
        return translated

    def qe_score(self, src_text: str, tgt_text: str, src_lang: str, tgt_lang: str) -> float:
        if not src_text or not tgt_text:
            raise ValueError("qe_score requires non-empty source and target texts")
        body = self._post(
            "/v1/qe_score",
            {"src_text": src_text, "tgt_text": tgt_text, "src": src_lang, "tgt": tgt_lang},
        )
        score = float(body["score"])
        if score < 0.0 or score > 1.0:
            logger.warning("qe_score %.4f outside [0,1]; clamping", score)
            score = min(1.0, max(0.0, score))
        return score

    def restore_pnc(self, text: str, lang: str) -> str:
        if not text:
            raise ValueError("restore_pnc requires non-empty input text")
        body = self._post("/v1/restore_pnc", {"text": text, "lang": lang})
        return str(body.get("text", ""))


def parse_service_overrides(value: str) -> dict[str, str]:
    """Parse a GRANARY_SERVICES value: comma-separated ``role=url`` pairs."""
    overrides = {}
    for part in value.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad GRANARY_SERVICES entry {part!r}; expected role=url")
        role, url = part.split("=", 1)
        role = role.strip()
        if role not in SERVICE_ROLES:
            raise ValueError(f"unknown service role {role!r}; expected one of {SERVICE_ROLES}")
        overrides[role] = url.strip()
    return overrides


def resolve_service_urls(configured: Mapping[str, str], environ: Mapping[str, str]) -> dict[str, str]:
    """Apply env overrides; the pnc role falls back to the translate URL."""
    urls = dict(configured)
    raw = environ.get("GRANARY_SERVICES")
    if raw:
        urls.update(parse_service_overrides(raw))
    if "pnc" not in urls and "translate" in urls:
        urls["pnc"] = urls["translate"]
    return urls
