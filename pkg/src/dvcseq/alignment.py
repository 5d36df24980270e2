"""Mappings between timestamps, token indices, and frame indices.

Token membership in a segment is decided by the token's temporal midpoint, so
tokens straddling a boundary are treated symmetrically. All operations are
pure; none mutate their inputs.
"""

import logging
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .errors import EmptyTranscriptError, SpanOutOfBoundsError, ZeroBucketError
from .types import AsrToken, AsrTranscript, FrameTimeline, IndexSpan, Segment, TimeMs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Marker:
    """A timestamp marker: anchor token plus whole-second timestamp token."""

    anchor: str
    seconds: int


@dataclass(frozen=True)
class MarkedTranscript:
    """A transcript interleaved with one timestamp marker per visual frame."""

    items: tuple[Union[AsrToken, Marker], ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Union[AsrToken, Marker]]:
        return iter(self.items)

    def tokens(self) -> list[AsrToken]:
        """The original token sequence, markers removed."""
        return [it for it in self.items if isinstance(it, AsrToken)]

    def markers(self) -> list[Marker]:
        return [it for it in self.items if isinstance(it, Marker)]


@dataclass(frozen=True)
class ConcatLayout:
    """Shape descriptor for a text+visual concatenated input sequence."""

    text_len: int
    visual_len: int
    text_first: bool = True

    @property
    def total_len(self) -> int:
        return self.text_len + self.visual_len


def concat_layout(text: Union[AsrTranscript, MarkedTranscript], frames: FrameTimeline,
                  text_first: bool = True) -> ConcatLayout:
    """Layout for concatenating text positions (after any marker insertion)
    with one position per visual frame."""
    return ConcatLayout(text_len=len(text), visual_len=frames.count, text_first=text_first)


def token_index_of_time(t: TimeMs, transcript: AsrTranscript,
                        rounding: str = "floor") -> int:
    """Map a timestamp to a token index.

    ``floor``: index of the last token whose start <= t (0 if none start that
    early). ``nearest``: index of the token whose midpoint is closest to t,
    earliest index on ties.
    """
    if len(transcript) == 0:
        raise EmptyTranscriptError("cannot index into an empty transcript")
    if rounding == "floor":
        idx = bisect_right(transcript.starts(), t) - 1
        return max(idx, 0)
    if rounding == "nearest":
        best, best_dist = 0, None
        for i, mid in enumerate(transcript.midpoints()):
            d = abs(mid - t)
            if best_dist is None or d < best_dist:
                best, best_dist = i, d
        return best
    raise ValueError(f"rounding must be 'floor' or 'nearest', got {rounding!r}")


def assign_tokens_to_segments(transcript: AsrTranscript,
                              segments: list[Segment]) -> list[Optional[int]]:
    """For each token, the index of the segment containing its midpoint, or None.

    Membership uses half-open intervals: start <= midpoint < end. Segments must
    be sorted and pairwise non-overlapping so ownership is well defined.
    """
    seg_starts = [s.start for s in segments]
    owners: list[Optional[int]] = []
    for tok in transcript:
        mid = tok.midpoint
        i = bisect_right(seg_starts, mid) - 1
        if i >= 0 and mid < segments[i].end:
            owners.append(i)
        else:
            owners.append(None)
    return owners


def segments_to_index_spans(segments: list[Segment], transcript: AsrTranscript
                            ) -> tuple[list[IndexSpan], list[Segment]]:
    """Convert timestamp segments to token-index spans via the midpoint rule.

    Returns ``(spans, dropped)``: spans carry their segments' captions, and
    segments that capture zero tokens are dropped and reported in ``dropped``.
    Whenever the input segments are sorted and non-overlapping, the output
    spans are sorted and pairwise disjoint.
    """
    owners = assign_tokens_to_segments(transcript, list(segments))
    first: dict[int, int] = {}
    last: dict[int, int] = {}
    for tok_idx, seg_idx in enumerate(owners):
        if seg_idx is None:
            continue
        first.setdefault(seg_idx, tok_idx)
        last[seg_idx] = tok_idx
    spans: list[IndexSpan] = []
    dropped: list[Segment] = []
    for i, seg in enumerate(segments):
        if i in first:
            spans.append(IndexSpan(first[i], last[i] + 1, caption=seg.caption))
        else:
            dropped.append(seg)
    if dropped:
        logger.warning("%d segment(s) captured zero tokens and were dropped", len(dropped))
    return spans, dropped


def index_spans_to_segments(spans: list[IndexSpan],
                            transcript: AsrTranscript) -> list[Segment]:
    """Map spans back to timestamp segments: [a, b) becomes
    [token_a.start, token_{b-1}.end]. Captions are carried through."""
    n = len(transcript)
    out = []
    for span in spans:
        if not (0 <= span.start_idx < span.end_idx <= n):
            raise SpanOutOfBoundsError(
                f"span [{span.start_idx}, {span.end_idx}) outside transcript of {n} tokens"
            )
        out.append(Segment(transcript[span.start_idx].start,
                           transcript[span.end_idx - 1].end,
                           caption=span.caption))
    return out


def insert_timestamp_markers(transcript: AsrTranscript, frames: FrameTimeline,
                             anchor: str) -> MarkedTranscript:
    """Interleave one timestamp marker per visual frame into the transcript.

    The marker for frame k (timestamp k / fps seconds, emitted as whole
    seconds) goes immediately after the last token whose start is strictly
    before that timestamp; markers for frames preceding all speech go at the
    front. Markers landing after the same token keep increasing frame order.
    """
    texts = {tok.text for tok in transcript}
    if anchor in texts:
        raise ValueError(f"anchor token {anchor!r} collides with a transcript token")
    starts = transcript.starts()
    n = len(transcript)
    by_pos: dict[int, list[Marker]] = {}
    for k in range(frames.count):
        t_ms = frames.timestamp_ms(k)
        pos = bisect_left(starts, t_ms)  # tokens with start < t_ms precede the marker
        by_pos.setdefault(pos, []).append(Marker(anchor, math.floor(k / frames.fps)))
    items: list[Union[AsrToken, Marker]] = []
    for pos in range(n + 1):
        items.extend(by_pos.get(pos, ()))
        if pos < n:
            items.append(transcript[pos])
    return MarkedTranscript(tuple(items))


def temporal_bucket(t: TimeMs, bucket_ms: int) -> int:
    """Bucket index of a timestamp: floor(t / bucket_ms)."""
    if bucket_ms <= 0:
        raise ZeroBucketError(f"bucket_ms must be positive, got {bucket_ms}")
    return math.floor(t / bucket_ms)
