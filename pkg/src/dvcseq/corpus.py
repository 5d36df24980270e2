"""Corpus I/O and transforms.

Annotation files are UTF-8 JSON lines, one video per line:

    {"video_id": ..., "duration_ms": ..., "asr": [{"text", "start_ms", "end_ms"}],
     "frames": {"fps", "count"}, "segments": [{"start_ms", "end_ms", "caption"?}]}

Unknown top-level fields are preserved across a load/save round-trip.
Prediction files reuse the segment schema keyed by video_id; target files are
two-column TSV (video_id TAB target) with single spaces between target tokens
and no trailing whitespace.

``to_partition_setting`` rewrites an annotation into the gap-free layout:
tokens whose midpoint falls outside every segment are removed and the rest are
shifted left by the removed gap time so that segments abut, starting at zero.
``extract_wikihow`` turns a step-annotated article into a pseudo video (one
token per second) plus its encoded target string.
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional

from . import codec
from .alignment import assign_tokens_to_segments
from .errors import (AnnotationFormatError, DuplicatePredictionError,
                     InvalidAnnotationError, NoSegmentsError)
from .types import (AsrToken, AsrTranscript, CodecConfig, FrameTimeline, Segment,
                    VideoAnnotation, validate_annotation)

logger = logging.getLogger(__name__)

_ANN_KEYS = ("video_id", "duration_ms", "asr", "frames", "segments")


# ---------------------------------------------------------------------------
# annotation files
# ---------------------------------------------------------------------------


def _segment_from_record(rec: dict, line_no: int) -> Segment:
    try:
        return Segment(float(rec["start_ms"]), float(rec["end_ms"]),
                       caption=rec.get("caption"))
    except (KeyError, TypeError, ValueError) as e:
        raise AnnotationFormatError(line_no, f"bad segment record {rec!r}: {e}") from e


def _annotation_from_record(rec: dict, line_no: int) -> VideoAnnotation:
    try:
        tokens = tuple(AsrToken(t["text"], float(t["start_ms"]), float(t["end_ms"]))
                       for t in rec["asr"])
        frames = FrameTimeline(fps=float(rec["frames"]["fps"]),
                               count=int(rec["frames"]["count"]))
        segments = tuple(_segment_from_record(s, line_no) for s in rec["segments"])
        extra = {k: v for k, v in rec.items() if k not in _ANN_KEYS}
        return VideoAnnotation(
            video_id=str(rec["video_id"]),
            duration=float(rec["duration_ms"]),
            transcript=AsrTranscript(tokens),
            frames=frames,
            segments=segments,
            extra=extra,
        )
    except AnnotationFormatError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise AnnotationFormatError(line_no, f"bad annotation record: {e}") from e


def iter_annotations(path) -> Iterator[tuple[int, VideoAnnotation]]:
    """Yield (line_no, annotation) pairs without invariant checks.
    Malformed lines raise with their line number."""
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise AnnotationFormatError(line_no, f"invalid JSON: {e}") from e
            if not isinstance(rec, dict):
                raise AnnotationFormatError(line_no, "record is not an object")
            yield line_no, _annotation_from_record(rec, line_no)


def load_annotations(path, allow_overlap: bool = False) -> list[VideoAnnotation]:
    """Order-preserving parse with validation.

    ``allow_overlap`` downgrades the pairwise non-overlap rule to a warning so
    dirty corpora can still be processed; all other invariant violations raise
    with the offending line number.
    """
    out = []
    for line_no, ann in iter_annotations(path):
        violations = validate_annotation(ann)
        if allow_overlap:
            kept = [v for v in violations if v.rule != "segments pairwise non-overlapping"]
            for v in violations:
                if v not in kept:
                    logger.warning("%s: %s (allowed by --allow-overlap)", ann.video_id, v)
            violations = kept
        if violations:
            raise InvalidAnnotationError(
                line_no, f"{ann.video_id}: " + "; ".join(str(v) for v in violations))
        out.append(ann)
    return out


def _segment_record(seg: Segment) -> dict:
    rec = {"start_ms": seg.start, "end_ms": seg.end}
    if seg.caption is not None:
        rec["caption"] = seg.caption
    return rec


def annotation_record(ann: VideoAnnotation) -> dict:
    rec = {
        "video_id": ann.video_id,
        "duration_ms": ann.duration,
        "asr": [{"text": t.text, "start_ms": t.start, "end_ms": t.end}
                for t in ann.transcript],
        "frames": {"fps": ann.frames.fps, "count": ann.frames.count},
        "segments": [_segment_record(s) for s in ann.segments],
    }
    rec.update(ann.extra)
    return rec


def save_annotations(path, annotations: Iterable[VideoAnnotation]):
    with open(path, "w", encoding="utf-8") as f:
        for ann in annotations:
            f.write(json.dumps(annotation_record(ann), ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# prediction and target files
# ---------------------------------------------------------------------------


def load_predictions(path) -> dict[str, list[Segment]]:
    """Prediction JSONL keyed by video_id; duplicate ids are an error."""
    preds: dict[str, list[Segment]] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise AnnotationFormatError(line_no, f"invalid JSON: {e}") from e
            try:
                vid = str(rec["video_id"])
                segments = [_segment_from_record(s, line_no) for s in rec["segments"]]
            except (KeyError, TypeError) as e:
                raise AnnotationFormatError(line_no, f"bad prediction record: {e}") from e
            if vid in preds:
                raise DuplicatePredictionError(f"duplicate video_id in predictions: {vid!r}")
            preds[vid] = segments
    return preds


def save_predictions(path, preds: dict[str, list[Segment]]):
    with open(path, "w", encoding="utf-8") as f:
        for vid, segments in preds.items():
            rec = {"video_id": vid, "segments": [_segment_record(s) for s in segments]}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_targets(path) -> list[tuple[str, str]]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise AnnotationFormatError(line_no, "expected 'video_id<TAB>target'")
            vid, target = line.split("\t", 1)
            rows.append((vid, target))
    return rows


def save_targets(path, rows: Iterable[tuple[str, str]]):
    with open(path, "w", encoding="utf-8") as f:
        for vid, target in rows:
            f.write(f"{vid}\t{target}\n")


# ---------------------------------------------------------------------------
# partition-setting transform
# ---------------------------------------------------------------------------


def _is_partition_form(ann: VideoAnnotation) -> bool:
    segs = ann.segments
    if not segs or segs[0].start != 0.0:
        return False
    for a, b in zip(segs, segs[1:]):
        if a.end != b.start:
            return False
    if ann.duration != segs[-1].end:
        return False
    if ann.frames.count != math.ceil(ann.duration * ann.frames.fps / 1000.0):
        return False
    return all(0.0 <= t.midpoint < ann.duration for t in ann.transcript)


def to_partition_setting(ann: VideoAnnotation) -> VideoAnnotation:
    """Concatenate the annotated segments, leaving out the gaps.

    Tokens whose midpoint lies in a gap (including before the first and after
    the last segment) are removed; surviving tokens shift left with their
    owning segment so the output segments tile [0, new_duration] with no gaps.
    Captions, segment count, and per-segment token counts are preserved, and
    the transform is idempotent.
    """
    if not ann.segments:
        raise NoSegmentsError(f"{ann.video_id}: partition transform needs segments")
    if _is_partition_form(ann):
        return ann

    # New segment starts come from a running duration sum; each segment's
    # tokens shift by that segment's own offset so midpoint membership is kept.
    new_segments = []
    offsets = []
    cursor = 0.0
    for seg in ann.segments:
        new_start = cursor
        cursor = new_start + (seg.end - seg.start)
        new_segments.append(Segment(new_start, cursor, caption=seg.caption))
        offsets.append(seg.start - new_start)
    new_duration = cursor

    owners = assign_tokens_to_segments(ann.transcript, list(ann.segments))
    removed = sum(1 for o in owners if o is None)
    if removed:
        logger.debug("%s: removed %d gap token(s)", ann.video_id, removed)
    new_tokens = []
    for tok, owner in zip(ann.transcript, owners):
        if owner is None:
            continue
        off = offsets[owner]
        new_tokens.append(AsrToken(tok.text,
                                   max(0.0, tok.start - off),
                                   min(new_duration, tok.end - off)))

    frames = FrameTimeline(fps=ann.frames.fps,
                           count=math.ceil(new_duration * ann.frames.fps / 1000.0))
    return VideoAnnotation(
        video_id=ann.video_id,
        duration=new_duration,
        transcript=AsrTranscript(tuple(new_tokens)),
        frames=frames,
        segments=tuple(new_segments),
        extra=dict(ann.extra),
    )


# ---------------------------------------------------------------------------
# WikiHow dense-document-caption extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WikiHowStep:
    start_token: int
    end_token: int
    summary: str


@dataclass(frozen=True)
class WikiHowArticle:
    article_id: str
    body_tokens: tuple[str, ...]
    steps: tuple[WikiHowStep, ...]

    def __post_init__(self):
        object.__setattr__(self, "body_tokens", tuple(self.body_tokens))
        object.__setattr__(self, "steps", tuple(self.steps))


class WikiHowExtraction(NamedTuple):
    annotation: VideoAnnotation
    target: str


def load_wikihow(path) -> list[WikiHowArticle]:
    """Article JSONL: {article_id, body_tokens, steps: [{start_token,
    end_token, summary}]}; steps must be sorted, disjoint, inside the body."""
    out = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise AnnotationFormatError(line_no, f"invalid JSON: {e}") from e
            try:
                article = WikiHowArticle(
                    article_id=str(rec["article_id"]),
                    body_tokens=tuple(str(t) for t in rec["body_tokens"]),
                    steps=tuple(WikiHowStep(int(s["start_token"]), int(s["end_token"]),
                                            str(s["summary"]))
                                for s in rec["steps"]),
                )
            except (KeyError, TypeError, ValueError) as e:
                raise AnnotationFormatError(line_no, f"bad article record: {e}") from e
            problem = _check_article(article)
            if problem:
                raise InvalidAnnotationError(line_no, f"{article.article_id}: {problem}")
            out.append(article)
    return out


def _check_article(article: WikiHowArticle) -> Optional[str]:
    n = len(article.body_tokens)
    for tok in article.body_tokens:
        if not tok or any(c.isspace() for c in tok):
            return f"body token {tok!r} must be non-empty with no whitespace"
    prev_end = 0
    for i, step in enumerate(article.steps):
        if not 0 <= step.start_token < step.end_token <= n:
            return f"steps[{i}] outside body bounds [0, {n})"
        if step.start_token < prev_end:
            return f"steps[{i}] overlaps the previous step"
        prev_end = step.end_token
    return None


def extract_wikihow(article: WikiHowArticle, cfg: CodecConfig) -> WikiHowExtraction:
    """Turn a step-annotated article into a pseudo video annotation plus its
    encoded target string.

    Body token k becomes an ASR token spanning [k, k+1) seconds; steps become
    caption-carrying segments. Body tokens outside every step are absorbed
    into the preceding step (the first step for a leading gap), with a
    warning, so the steps tile the article as the partition setting requires.
    """
    if cfg.setting != "partition":
        raise ValueError("WikiHow extraction requires a partition-setting codec config")
    problem = _check_article(article)
    if problem:
        raise ValueError(f"{article.article_id}: {problem}")
    if not article.steps:
        raise NoSegmentsError(f"{article.article_id}: article has no steps")

    n = len(article.body_tokens)
    bounds = [0]
    for nxt in article.steps[1:]:
        bounds.append(nxt.start_token)
    bounds.append(n)
    gaps = sum(1 for step, a, b in zip(article.steps, bounds, bounds[1:])
               if (step.start_token, step.end_token) != (a, b))
    if gaps:
        logger.warning("%s: %d step(s) extended to absorb gap tokens",
                       article.article_id, gaps)

    tokens = tuple(AsrToken(text, k * 1000.0, (k + 1) * 1000.0)
                   for k, text in enumerate(article.body_tokens))
    segments = tuple(Segment(a * 1000.0, b * 1000.0, caption=step.summary)
                     for step, a, b in zip(article.steps, bounds, bounds[1:]))
    ann = VideoAnnotation(
        video_id=article.article_id,
        duration=n * 1000.0,
        transcript=AsrTranscript(tokens),
        frames=FrameTimeline(fps=1.0, count=n),
        segments=segments,
    )
    return WikiHowExtraction(annotation=ann, target=codec.encode(ann, cfg))
