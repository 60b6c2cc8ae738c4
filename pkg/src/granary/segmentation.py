"""Turning timestamped speech spans into final audio segments.

Spans (from VAD or decoder timestamps) are padded to avoid truncating
speech at the edges, then greedily merged under a hard duration cap so
every final segment fits the downstream transcription window.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class SegmentSpan:
    """A speech region in seconds, optionally carrying its transcription."""

    start_s: float
    end_s: float
    text: str | None = None

    def duration(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True, slots=True)
class Segment:
    """A planned output segment; ``flags`` marks oversize inputs."""

    start_s: float
    end_s: float
    text: str | None = None
    flags: tuple[str, ...] = ()

    def duration(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True, slots=True)
class SegmentationConfig:
    max_segment_s: float = 40.0
    pad_s: float = 0.4
    merge_gap_s: float = 2.0

    def validate(self) -> None:
        if self.max_segment_s <= 0 or self.pad_s <= 0 or self.merge_gap_s <= 0:
            raise ValueError("segmentation parameters must be strictly positive")
        if self.pad_s >= self.max_segment_s:
            raise ValueError("pad_s must be smaller than max_segment_s")


class SpanError(ValueError):
    """Raised when an input span violates preconditions; names the span index."""

    def __init__(self, index: int, message: str):
        super().__init__(f"span {index}: {message}")
        self.index = index


def _check_spans(spans: list[SegmentSpan], audio_duration_s: float | None = None) -> None:
    prev_end = None
    for i, span in enumerate(spans):
        if span.end_s <= span.start_s:
            raise SpanError(i, f"end {span.end_s} not after start {span.start_s}")
        if span.start_s < 0:
            raise SpanError(i, f"negative start {span.start_s}")
        if audio_duration_s is not None and span.end_s > audio_duration_s:
            raise SpanError(i, f"end {span.end_s} beyond audio duration {audio_duration_s}")
        if prev_end is not None and span.start_s < prev_end:
            raise SpanError(i, f"start {span.start_s} overlaps previous end {prev_end}")
        prev_end = span.end_s


def pad_spans(spans: list[SegmentSpan], pad_s: float, audio_duration_s: float) -> list[SegmentSpan]:
    """Extend each span by ``pad_s`` on both sides, clamped to the audio.

    Where padded neighbors would overlap, the boundary is placed at the
    midpoint of the original gap, so no audio is lost to either side.
    Output stays sorted and non-overlapping.
    """
    _check_spans(spans, audio_duration_s)
    if not spans:
        return []

    n = len(spans)
    starts = [0.0] * n
    ends = [0.0] * n
    for i, span in enumerate(spans):
        starts[i] = max(0.0, span.start_s - pad_s)
        ends[i] = min(audio_duration_s, span.end_s + pad_s)

    for i in range(n - 1):
        if ends[i] > starts[i + 1]:
            midpoint = (spans[i].end_s + spans[i + 1].start_s) / 2.0
            ends[i] = midpoint
            starts[i + 1] = midpoint

    return [SegmentSpan(start_s=starts[i], end_s=ends[i], text=spans[i].text) for i in range(n)]


def merge_spans(spans: list[SegmentSpan], cfg: SegmentationConfig) -> list[Segment]:
    """Greedy left-to-right merge under the duration cap.

    A span joins the current segment iff the merged extent stays within
    ``max_segment_s`` and the silence gap to the previous span is at most
    ``merge_gap_s``. A span individually longer than the cap is emitted
    unmerged with the ``oversize_span`` flag (it gets re-transcribed
    downstream rather than blindly split mid-word).
    """
    cfg.validate()
    _check_spans(spans)

    segments: list[Segment] = []
    cur_start: float | None = None
    cur_end = 0.0
    cur_texts: list[str] = []

    def flush() -> None:
        nonlocal cur_start, cur_texts
        if cur_start is not None:
            text = " ".join(cur_texts) if cur_texts else None
            segments.append(Segment(start_s=cur_start, end_s=cur_end, text=text))
        cur_start = None
        cur_texts = []

    for span in spans:
        if span.duration() > cfg.max_segment_s:
            flush()
            segments.append(
                Segment(start_s=span.start_s, end_s=span.end_s, text=span.text, flags=("oversize_span",))
            )
            continue
        if cur_start is None:
            cur_start = span.start_s
            cur_end = span.end_s
            cur_texts = [span.text] if span.text is not None else []
            continue
        gap = span.start_s - cur_end
        extent = span.end_s - cur_start
        if gap <= cfg.merge_gap_s and extent <= cfg.max_segment_s:
            cur_end = span.end_s
            if span.text is not None:
                cur_texts.append(span.text)
        else:
            flush()
            cur_start = span.start_s
            cur_end = span.end_s
            cur_texts = [span.text] if span.text is not None else []
    flush()
    return segments


def plan_segments(
    spans: list[SegmentSpan], cfg: SegmentationConfig, audio_duration_s: float
) -> list[Segment]:
    """Pad then merge: the full segmentation plan for one audio file."""
    return merge_spans(pad_spans(spans, cfg.pad_s, audio_duration_s), cfg)


def spans_from_objs(objs) -> list[SegmentSpan]:
    """Parse ``[{start, end, text?}, ...]`` manifest payloads into spans."""
    spans = []
    for i, obj in enumerate(objs):
        try:
            spans.append(
                SegmentSpan(
                    start_s=float(obj["start"]),
                    end_s=float(obj["end"]),
                    text=None if obj.get("text") is None else str(obj["text"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SpanError(i, f"malformed span object: {exc}") from None
    return spans


def segments_to_objs(segments: list[Segment]) -> list[dict]:
    out = []
    for seg in segments:
        obj: dict = {"start": seg.start_s, "end": seg.end_s}
        if seg.text is not None:
            obj["text"] = seg.text
        if seg.flags:
            obj["flags"] = list(seg.flags)
        out.append(obj)
    return out
