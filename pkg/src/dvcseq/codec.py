"""Target-string codec: serialize gold segmentations (and captions) into
whitespace-tokenized target strings, and parse possibly-malformed model output
back into index spans.

Two formulations are supported. The tagging formulation emits one tag per ASR
token, so the target has exactly the transcript's length: a separator tag
opens a segment, a pad tag continues it, and (in the original setting) an end
tag closes it; a length-1 segment is marked by the separator alone. In
seg_cap mode caption words sit in the positions after the separator,
truncated to the space available. The length formulation emits explicit token
counts: per-segment lengths in the partition setting, (gap, length) integer
pairs in the original setting, each optionally followed by the caption and
separated from the next record by the separator token.

Decoding never fails on content: every recovery action (skipped token,
dropped record, clamped span, pad-extended coverage) is logged as a warning
in the returned report, and emitted spans are always sorted, disjoint, and
inside the transcript.
"""

import re
from dataclasses import dataclass
from typing import Optional

from .alignment import segments_to_index_spans
from .errors import EmptyTranscriptError, MissingCaptionError, NotAPartitionError
from .types import AsrTranscript, CodecConfig, IndexSpan, VideoAnnotation

TargetString = str

# Canonical integer: decimal digits, no sign, no leading zeros.
_INT_RE = re.compile(r"0|[1-9][0-9]*")


@dataclass(frozen=True)
class LengthRecord:
    """One segment as explicit token counts: length, optional preceding gap,
    optional caption. ``gap`` is None in the partition setting."""

    length: int
    gap: Optional[int] = None
    caption: Optional[str] = None


@dataclass(frozen=True)
class CodecIssue:
    """A localized decode warning or grammar violation."""

    kind: str
    position: int
    detail: str = ""

    def __str__(self) -> str:
        base = f"{self.kind} at position {self.position}"
        return f"{base}: {self.detail}" if self.detail else base


@dataclass(frozen=True)
class DecodeReport:
    """Parsed spans plus every recovery action taken while parsing."""

    spans: tuple[IndexSpan, ...]
    warnings: tuple[CodecIssue, ...]


def _is_int(tok: str) -> bool:
    return _INT_RE.fullmatch(tok) is not None


def _check_caption(caption: Optional[str], cfg: CodecConfig) -> list[str]:
    if caption is None:
        raise MissingCaptionError("seg_cap encoding requires a caption on every segment")
    words = caption.split()
    for w in words:
        if w in cfg.special_tokens:
            raise ValueError(f"caption word {w!r} collides with a reserved codec token")
    return words


def _require_partition(spans: list[IndexSpan], n: int):
    cur = 0
    for span in spans:
        if span.start_idx != cur:
            raise NotAPartitionError(
                f"spans must tile [0, {n}): gap or overlap at token {cur}"
            )
        cur = span.end_idx
    if cur != n:
        raise NotAPartitionError(f"spans must tile [0, {n}): coverage stops at {cur}")


def encode(ann: VideoAnnotation, cfg: CodecConfig) -> TargetString:
    """Serialize an annotation's segments into a target string under ``cfg``.

    Segments are first mapped to token-index spans by the midpoint rule;
    segments capturing zero tokens are dropped. Partition-setting encodings
    require the resulting spans to tile the transcript exactly.
    """
    spans, _dropped = segments_to_index_spans(list(ann.segments), ann.transcript)
    n = len(ann.transcript)
    if cfg.setting == "partition":
        _require_partition(spans, n)
    if cfg.formulation == "length":
        return _encode_length(spans, cfg)
    return _encode_tagging(spans, n, cfg)


def _encode_length(spans: list[IndexSpan], cfg: CodecConfig) -> str:
    records: list[list[str]] = []
    prev_end = 0
    for span in spans:
        rec: list[str] = []
        if cfg.setting == "original":
            rec.append(str(span.start_idx - prev_end))
        rec.append(str(span.length))
        if cfg.mode == "seg_cap":
            rec.extend(_check_caption(span.caption, cfg))
        records.append(rec)
        prev_end = span.end_idx
    if cfg.mode == "seg_cap":
        sep = f" {cfg.sep_token} "
        return sep.join(" ".join(rec) for rec in records)
    return " ".join(tok for rec in records for tok in rec)


def _encode_tagging(spans: list[IndexSpan], n: int, cfg: CodecConfig) -> str:
    out = [cfg.pad_token] * n
    for span in spans:
        a, b = span.start_idx, span.end_idx
        out[a] = cfg.sep_token
        caption_end = b  # exclusive caption capacity limit
        if cfg.setting == "original" and b - a >= 2:
            out[b - 1] = cfg.end_token
            caption_end = b - 1
        if cfg.mode == "seg_cap":
            words = _check_caption(span.caption, cfg)
            fit = words[: max(0, caption_end - (a + 1))]
            out[a + 1 : a + 1 + len(fit)] = fit
    return " ".join(out)


def truncated_caption(caption: str, span_length: int, cfg: CodecConfig) -> str:
    """The caption a tagging/seg_cap encoding can carry for a span of the
    given length: words are cut at word granularity to the in-span capacity
    (one position for the separator, plus one for the end tag in the original
    setting)."""
    words = caption.split()
    capacity = span_length - 1
    if cfg.setting == "original" and span_length >= 2:
        capacity = span_length - 2
    return " ".join(words[: max(0, capacity)])


def decode(target: TargetString, transcript: AsrTranscript,
           cfg: CodecConfig) -> DecodeReport:
    """Best-effort parse of a (possibly malformed) target string.

    Never fails on content; every recovery action is reported as a warning.
    For any valid annotation, ``decode(encode(ann, cfg))`` reproduces the
    annotation's index spans with zero warnings.
    """
    if len(transcript) == 0:
        raise EmptyTranscriptError("cannot decode against an empty transcript")
    spans, warnings = _decode_tokens(target.split(), len(transcript), cfg)
    return DecodeReport(spans=tuple(spans), warnings=tuple(warnings))


def _decode_tokens(tokens: list[str], n: int, cfg: CodecConfig
                   ) -> tuple[list[IndexSpan], list[CodecIssue]]:
    if cfg.formulation == "length":
        return _decode_length(tokens, n, cfg)
    return _decode_tagging(tokens, n, cfg)


# ---------------------------------------------------------------------------
# length formulation
# ---------------------------------------------------------------------------


def _parse_length_records(tokens: list[str], cfg: CodecConfig,
                          warnings: list[CodecIssue]) -> list[tuple[int, LengthRecord]]:
    """Token stream -> (position, LengthRecord) list, applying skip/drop recovery."""
    want_gap = cfg.setting == "original"
    records: list[tuple[int, LengthRecord]] = []

    if cfg.mode == "seg_cap":
        # Records are separated by the sep token; integers first, then caption.
        groups: list[list[tuple[int, str]]] = [[]]
        for pos, tok in enumerate(tokens):
            if tok == cfg.sep_token:
                groups.append([])
            else:
                groups[-1].append((pos, tok))
        for group in groups:
            if not group:
                continue
            ints: list[int] = []
            words: list[str] = []
            need = 2 if want_gap else 1
            for pos, tok in group:
                if len(ints) < need:
                    if _is_int(tok):
                        ints.append(int(tok))
                    else:
                        warnings.append(CodecIssue("ExpectedInteger", pos,
                                                   f"skipped non-integer {tok!r}"))
                elif tok in (cfg.pad_token, cfg.end_token):
                    warnings.append(CodecIssue("ReservedToken", pos,
                                               f"dropped reserved token {tok!r} from caption"))
                else:
                    words.append(tok)
            if len(ints) < need:
                warnings.append(CodecIssue("ExpectedInteger", group[0][0],
                                           "record dropped: missing integer fields"))
                continue
            gap, length = (ints[0], ints[1]) if want_gap else (None, ints[0])
            records.append((group[0][0],
                            LengthRecord(length=length, gap=gap, caption=" ".join(words))))
        return records

    # seg_only: a flat stream of integers.
    ints: list[tuple[int, int]] = []
    for pos, tok in enumerate(tokens):
        if _is_int(tok):
            ints.append((pos, int(tok)))
        else:
            warnings.append(CodecIssue("ExpectedInteger", pos,
                                       f"skipped non-integer {tok!r}"))
    if want_gap:
        if len(ints) % 2 == 1:
            pos, _ = ints[-1]
            warnings.append(CodecIssue("DanglingGap", pos,
                                       "odd integer count: trailing gap has no length"))
            ints = ints[:-1]
        for (gpos, g), (_lpos, l) in zip(ints[0::2], ints[1::2]):
            records.append((gpos, LengthRecord(length=l, gap=g)))
    else:
        for pos, l in ints:
            records.append((pos, LengthRecord(length=l)))
    return records


def _decode_length(tokens: list[str], n: int, cfg: CodecConfig
                   ) -> tuple[list[IndexSpan], list[CodecIssue]]:
    warnings: list[CodecIssue] = []
    records = _parse_length_records(tokens, cfg, warnings)
    spans: list[IndexSpan] = []
    cur = 0
    for pos, rec in records:
        if rec.length <= 0:
            warnings.append(CodecIssue("NonPositiveLength", pos,
                                       f"dropped record with length {rec.length}"))
            continue
        start = cur + (rec.gap or 0)
        if start >= n:
            warnings.append(CodecIssue("LengthOverflow", pos,
                                       f"record starts at token {start}, past transcript "
                                       f"end {n}; remaining records discarded"))
            break
        end = start + rec.length
        if end > n:
            spans.append(IndexSpan(start, n, caption=rec.caption))
            warnings.append(CodecIssue("LengthOverflow", pos,
                                       f"span clamped to transcript end {n}; "
                                       "remaining records discarded"))
            cur = n
            break
        spans.append(IndexSpan(start, end, caption=rec.caption))
        cur = end
    if cfg.setting == "partition" and cur < n:
        if spans:
            last = spans[-1]
            spans[-1] = IndexSpan(last.start_idx, n, caption=last.caption)
            warnings.append(CodecIssue("LengthUnderflow", len(tokens),
                                       f"lengths cover only {cur} of {n} tokens; "
                                       "last span extended"))
        else:
            warnings.append(CodecIssue("LengthUnderflow", len(tokens),
                                       f"no usable records for a {n}-token transcript"))
    return spans, warnings


# ---------------------------------------------------------------------------
# tagging formulation
# ---------------------------------------------------------------------------


def _decode_tagging(tokens: list[str], n: int, cfg: CodecConfig
                    ) -> tuple[list[IndexSpan], list[CodecIssue]]:
    warnings: list[CodecIssue] = []
    if len(tokens) != n:
        warnings.append(CodecIssue("LengthMismatch", min(len(tokens), n),
                                   f"target has {len(tokens)} tokens, transcript has {n}; "
                                   "extra positions ignored, missing treated as pads"))
    tags = [tokens[i] if i < len(tokens) else cfg.pad_token for i in range(n)]
    if cfg.setting == "partition":
        return _decode_tagging_partition(tags, n, cfg, warnings)
    return _decode_tagging_original(tags, n, cfg, warnings)


def _decode_tagging_partition(tags: list[str], n: int, cfg: CodecConfig,
                              warnings: list[CodecIssue]
                              ) -> tuple[list[IndexSpan], list[CodecIssue]]:
    starts: list[int] = []
    words_at: dict[int, list[str]] = {}
    cur_words: list[str] = []
    after_pad = False
    for i, tag in enumerate(tags):
        if tag == cfg.sep_token:
            starts.append(i)
            cur_words = words_at.setdefault(i, [])
            after_pad = False
            continue
        if i == 0:
            warnings.append(CodecIssue("MissingLeadingSep", 0,
                                       "partition target must open with a separator; "
                                       "implicit segment started at token 0"))
            starts.append(0)
            cur_words = words_at.setdefault(0, [])
            after_pad = False
        if tag == cfg.pad_token:
            after_pad = True
            continue
        if tag == cfg.end_token or cfg.mode == "seg_only":
            warnings.append(CodecIssue("UnexpectedTag", i,
                                       f"{tag!r} treated as pad"))
            after_pad = True
            continue
        # seg_cap caption word
        if after_pad:
            warnings.append(CodecIssue("RaggedCaption", i,
                                       f"caption word {tag!r} after padding"))
        cur_words.append(tag)
    spans = []
    for idx, a in enumerate(starts):
        b = starts[idx + 1] if idx + 1 < len(starts) else n
        caption = " ".join(words_at.get(a, [])) if cfg.mode == "seg_cap" else None
        spans.append(IndexSpan(a, b, caption=caption))
    return spans, warnings


def _decode_tagging_original(tags: list[str], n: int, cfg: CodecConfig,
                             warnings: list[CodecIssue]
                             ) -> tuple[list[IndexSpan], list[CodecIssue]]:
    spans: list[IndexSpan] = []
    open_at: Optional[int] = None
    cur_words: list[str] = []
    after_pad = False

    def close(end_idx: int, *, via_end_tag: bool, at: int):
        nonlocal open_at, cur_words, after_pad
        if via_end_tag:
            caption = " ".join(cur_words) if cfg.mode == "seg_cap" else None
            spans.append(IndexSpan(open_at, end_idx, caption=caption))
        else:
            # No end tag seen: the separator alone marks a length-1 segment.
            if cur_words:
                warnings.append(CodecIssue("UnterminatedSegment", at,
                                           "caption words before an unterminated segment "
                                           "discarded; segment closed at length 1"))
            caption = "" if cfg.mode == "seg_cap" else None
            spans.append(IndexSpan(open_at, open_at + 1, caption=caption))
        open_at = None
        cur_words = []
        after_pad = False

    for i, tag in enumerate(tags):
        if open_at is None:
            if tag == cfg.sep_token:
                open_at, cur_words, after_pad = i, [], False
            elif tag == cfg.pad_token:
                continue
            elif tag == cfg.end_token:
                warnings.append(CodecIssue("UnmatchedEnd", i,
                                           "end tag with no open segment ignored"))
            else:
                warnings.append(CodecIssue("UnexpectedTag", i,
                                           f"{tag!r} outside any segment treated as pad"))
            continue
        if tag == cfg.end_token:
            close(i + 1, via_end_tag=True, at=i)
        elif tag == cfg.sep_token:
            close(i, via_end_tag=False, at=i)
            open_at, cur_words, after_pad = i, [], False
        elif tag == cfg.pad_token:
            after_pad = True
        elif cfg.mode == "seg_only":
            warnings.append(CodecIssue("UnexpectedTag", i, f"{tag!r} treated as pad"))
            after_pad = True
        else:
            if after_pad:
                warnings.append(CodecIssue("RaggedCaption", i,
                                           f"caption word {tag!r} after padding"))
            cur_words.append(tag)
    if open_at is not None:
        close(n, via_end_tag=False, at=n)
    return spans, warnings


# ---------------------------------------------------------------------------
# grammar check
# ---------------------------------------------------------------------------

_FIT_KINDS = frozenset({"LengthOverflow", "LengthUnderflow"})


def grammar_check(target: TargetString, cfg: CodecConfig) -> list[CodecIssue]:
    """Syntax-only validation: empty iff ``target`` parses with zero recovery
    warnings against some transcript length. Violations localize the first
    offending token.

    Transcript-fit warnings (overflow/underflow) are not syntax errors, since
    a transcript of matching length always exists for a well-formed string.
    """
    tokens = target.split()
    if not tokens:
        return []
    if cfg.formulation == "tagging":
        n = len(tokens)
    else:
        n = sum(int(t) for t in tokens if _is_int(t)) + 1
    _spans, warnings = _decode_tokens(tokens, max(n, 1), cfg)
    return [w for w in warnings if w.kind not in _FIT_KINDS]
