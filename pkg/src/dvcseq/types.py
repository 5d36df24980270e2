"""Core value types: timestamped transcripts, event segments, and codec configuration.

All timestamps are milliseconds stored as floats (annotation sources carry
fractional milliseconds). Token-index intervals are half-open [start, end) so
lengths compose additively and adjacency is unambiguous.

Every type here is an immutable value object; validation is centralized in
:func:`validate_annotation`, which reports violations instead of raising so
that dirty corpora can be inspected. Config objects are the exception: they
validate at construction time.
"""

from dataclasses import dataclass, field
from math import isfinite
from typing import Any, Iterator, Optional

TimeMs = float  # non-negative, finite, milliseconds

FORMULATIONS = ("tagging", "length")
SETTINGS = ("partition", "original")
MODES = ("seg_only", "seg_cap")


@dataclass(frozen=True)
class AsrToken:
    """A single recognized word with its speech interval."""

    text: str
    start: TimeMs
    end: TimeMs

    @property
    def midpoint(self) -> TimeMs:
        return 0.5 * (self.start + self.end)


@dataclass(frozen=True)
class AsrTranscript:
    """Ordered timestamped ASR tokens; the coordinate system for segment encoding."""

    tokens: tuple[AsrToken, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[AsrToken]:
        return iter(self.tokens)

    def __getitem__(self, idx):
        return self.tokens[idx]

    def starts(self) -> list[TimeMs]:
        return [t.start for t in self.tokens]

    def midpoints(self) -> list[TimeMs]:
        return [t.midpoint for t in self.tokens]


@dataclass(frozen=True)
class Segment:
    """An event as a timestamp interval, optionally carrying a caption."""

    start: TimeMs
    end: TimeMs
    caption: Optional[str] = None

    @property
    def duration(self) -> TimeMs:
        return self.end - self.start


@dataclass(frozen=True)
class IndexSpan:
    """An event as a half-open token-index interval [start_idx, end_idx)."""

    start_idx: int
    end_idx: int
    caption: Optional[str] = None

    @property
    def length(self) -> int:
        return self.end_idx - self.start_idx


@dataclass(frozen=True)
class FrameTimeline:
    """Visual frame grid: frame k sits at k / fps seconds, for 0 <= k < count."""

    fps: float
    count: int

    def timestamp_ms(self, k: int) -> TimeMs:
        return k / self.fps * 1000.0


@dataclass(frozen=True)
class VideoAnnotation:
    """One video's transcript, frame timeline, and gold segments.

    ``extra`` holds unknown top-level fields from the annotation file so they
    survive a load/save round-trip.
    """

    video_id: str
    duration: TimeMs
    transcript: AsrTranscript
    frames: FrameTimeline
    segments: tuple[Segment, ...]
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))


@dataclass(frozen=True)
class CodecConfig:
    """Grammar selector for target strings.

    ``formulation`` picks position-aligned tags vs. explicit token counts,
    ``setting`` picks gap-free vs. gapped segment layout, and ``mode`` picks
    whether captions ride along with the segmentation.
    """

    formulation: str
    setting: str
    mode: str
    sep_token: str = "<sep>"
    pad_token: str = "<pad>"
    end_token: str = "<end>"

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(
                f"formulation must be one of {FORMULATIONS}, got {self.formulation!r}"
            )
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be one of {SETTINGS}, got {self.setting!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        specials = (self.sep_token, self.pad_token, self.end_token)
        for name, tok in zip(("sep_token", "pad_token", "end_token"), specials):
            if not tok or any(c.isspace() for c in tok):
                raise ValueError(f"{name} must be a non-empty whitespace-free token")
        if len(set(specials)) != 3:
            raise ValueError("sep_token, pad_token, end_token must be pairwise distinct")

    @property
    def special_tokens(self) -> frozenset:
        return frozenset((self.sep_token, self.pad_token, self.end_token))


@dataclass(frozen=True)
class Violation:
    """One broken invariant: which field and which rule."""

    field: str
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        base = f"{self.field}: {self.rule}"
        return f"{base} ({self.detail})" if self.detail else base


def _valid_time(t) -> bool:
    return isinstance(t, (int, float)) and isfinite(t) and t >= 0


def validate_annotation(ann: VideoAnnotation) -> list[Violation]:
    """Check every annotation invariant; return an empty list iff all hold.

    Pure and deterministic. An annotation that validates cleanly is accepted
    by the preconditions of every downstream operation in this package.
    """
    out: list[Violation] = []

    if not _valid_time(ann.duration):
        out.append(Violation("duration", "TimeMs >= 0 and finite", f"duration={ann.duration}"))

    prev_start = None
    for i, tok in enumerate(ann.transcript):
        where = f"transcript.tokens[{i}]"
        if not tok.text or any(c.isspace() for c in tok.text):
            out.append(Violation(f"{where}.text", "non-empty, no internal whitespace",
                                 f"text={tok.text!r}"))
        if not _valid_time(tok.start) or not _valid_time(tok.end):
            out.append(Violation(where, "TimeMs >= 0 and finite",
                                 f"start={tok.start}, end={tok.end}"))
        elif tok.start > tok.end:
            out.append(Violation(where, "AsrToken.start <= AsrToken.end",
                                 f"start={tok.start}, end={tok.end}"))
        if prev_start is not None and tok.start < prev_start:
            out.append(Violation("transcript", "token start times non-decreasing",
                                 f"tokens[{i}].start={tok.start} < tokens[{i - 1}].start={prev_start}"))
        prev_start = tok.start

    if not (isinstance(ann.frames.fps, (int, float)) and isfinite(ann.frames.fps)
            and ann.frames.fps > 0):
        out.append(Violation("frames.fps", "fps > 0", f"fps={ann.frames.fps}"))
    if ann.frames.count < 0:
        out.append(Violation("frames.count", "count >= 0", f"count={ann.frames.count}"))

    for i, seg in enumerate(ann.segments):
        where = f"segments[{i}]"
        if not _valid_time(seg.start) or not _valid_time(seg.end):
            out.append(Violation(where, "TimeMs >= 0 and finite",
                                 f"start={seg.start}, end={seg.end}"))
            continue
        if not seg.start < seg.end:
            out.append(Violation(where, "Segment.start < Segment.end",
                                 f"start={seg.start}, end={seg.end}"))
        if _valid_time(ann.duration) and (seg.start < 0 or seg.end > ann.duration):
            out.append(Violation(where, "segment within [0, duration]",
                                 f"end={seg.end}, duration={ann.duration}"))

    starts = [s.start for s in ann.segments]
    if starts != sorted(starts):
        out.append(Violation("segments", "segments sorted by start"))

    # Touching segments (end_i == start_{i+1}) count as non-overlapping.
    n = len(ann.segments)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = ann.segments[i], ann.segments[j]
            if max(a.start, b.start) < min(a.end, b.end):
                out.append(Violation("segments", "segments pairwise non-overlapping",
                                     f"segments[{i}] and segments[{j}]"))
    return out
