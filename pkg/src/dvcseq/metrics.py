"""Segmentation and captioning evaluation.

Segmentation quality is scored with interval IoU over either timestamps or
token indices: mIoU takes each ground-truth segment's maximal IoU against the
predictions, averages within a video, then across videos. Precision@t is the
fraction of predicted segments with IoU >= t against at least one ground-truth
segment, recall@t the symmetric fraction of ground truth covered, and F1 their
geometric mean; all three are averaged over the threshold set.

Caption metrics (BLEU-4, ROUGE-L, CIDEr-D, and a lightweight METEOR variant
without synonym tables) are computed sentence-level between a ground-truth
caption and the caption of its matched prediction; a ground-truth segment
with no match above the threshold contributes a zero. Captions are lowercased
and punctuation-stripped before scoring.

Per-video computations are independent; CIDEr-D needs one corpus-wide IDF
pass over the reference side before scoring.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from .alignment import segments_to_index_spans
from .errors import DuplicatePredictionError, NoGroundTruthError, NoPairsError
from .types import IndexSpan, Segment, VideoAnnotation

IOU_BASES = ("token_index", "timestamp")
CAPTION_METRICS = ("bleu4", "rouge_l", "cider_d", "meteor_lite")
AGGREGATIONS = ("macro", "micro")

_BLEU_EPS = 1e-9
_PUNCT_RE = re.compile(r"[^\w\s]+")


@dataclass(frozen=True)
class EvalConfig:
    """Knobs for the evaluation protocol."""

    thresholds: tuple[float, ...] = (0.3, 0.5, 0.7, 0.9)
    iou_basis: str = "timestamp"
    caption_metrics: tuple[str, ...] = ()
    rouge_beta: float = 1.2
    cider_sigma: float = 6.0
    aggregation: str = "macro"

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(self.thresholds))
        object.__setattr__(self, "caption_metrics", tuple(self.caption_metrics))
        if not self.thresholds or any(not 0 < t <= 1 for t in self.thresholds):
            raise ValueError("thresholds must lie in (0, 1]")
        if list(self.thresholds) != sorted(set(self.thresholds)):
            raise ValueError("thresholds must be strictly increasing")
        if self.iou_basis not in IOU_BASES:
            raise ValueError(f"iou_basis must be one of {IOU_BASES}, got {self.iou_basis!r}")
        for m in self.caption_metrics:
            if m not in CAPTION_METRICS:
                raise ValueError(f"unknown caption metric {m!r}")
        if self.rouge_beta <= 0:
            raise ValueError("rouge_beta must be positive")
        if self.cider_sigma <= 0:
            raise ValueError("cider_sigma must be positive")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    """Corpus-level scores; ``per_threshold`` maps each IoU threshold to its
    precision/recall/F1, with f1 = sqrt(precision * recall) at every entry."""

    miou: float
    per_threshold: dict[float, PRF]
    avg_precision: float
    avg_recall: float
    avg_f1: float
    caption_scores: dict[str, float]
    num_videos: int
    num_gt_segments: int
    num_pred_segments: int
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "miou": self.miou,
            "avg_precision": self.avg_precision,
            "avg_recall": self.avg_recall,
            "avg_f1": self.avg_f1,
            "per_threshold": {
                str(t): {"precision": p.precision, "recall": p.recall, "f1": p.f1}
                for t, p in self.per_threshold.items()
            },
            "caption_scores": dict(self.caption_scores),
            "num_videos": self.num_videos,
            "num_gt_segments": self.num_gt_segments,
            "num_pred_segments": self.num_pred_segments,
            "warnings": list(self.warnings),
        }

    def format_table(self) -> str:
        lines = [
            f"videos: {self.num_videos}  gt segments: {self.num_gt_segments}  "
            f"predicted segments: {self.num_pred_segments}",
            f"mIoU: {self.miou:.4f}",
            "threshold  precision   recall       f1",
        ]
        for t, p in self.per_threshold.items():
            lines.append(f"{t:>9.2f}  {p.precision:>9.4f} {p.recall:>8.4f} {p.f1:>8.4f}")
        lines.append(f"{'avg':>9}  {self.avg_precision:>9.4f} "
                     f"{self.avg_recall:>8.4f} {self.avg_f1:>8.4f}")
        if self.caption_scores:
            parts = "  ".join(f"{k}: {v:.4f}" for k, v in self.caption_scores.items())
            lines.append(f"captions (threshold-averaged): {parts}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# IoU primitives
# ---------------------------------------------------------------------------


def interval_iou(a: Segment, b: Segment) -> float:
    """Intersection over union of two timestamp intervals."""
    inter = max(0.0, min(a.end, b.end) - max(a.start, b.start))
    union = (a.end - a.start) + (b.end - b.start) - inter
    if union <= 0:
        return 0.0
    return inter / union


def span_iou(a: IndexSpan, b: IndexSpan) -> float:
    """Intersection over union of two half-open token-index ranges, in tokens."""
    inter = max(0, min(a.end_idx, b.end_idx) - max(a.start_idx, b.start_idx))
    union = a.length + b.length - inter
    if union <= 0:
        return 0.0
    return inter / union


def _iou_fn(basis: str):
    if basis == "token_index":
        return span_iou
    if basis == "timestamp":
        return interval_iou
    raise ValueError(f"iou basis must be one of {IOU_BASES}, got {basis!r}")


def miou(gt: Sequence, pred: Sequence, basis: str) -> float:
    """Mean over ground-truth segments of the maximal IoU against any
    prediction. Empty predictions score 0."""
    iou = _iou_fn(basis)
    if not gt:
        raise NoGroundTruthError("mIoU is undefined without ground-truth segments")
    if not pred:
        return 0.0
    return sum(max(iou(g, p) for p in pred) for g in gt) / len(gt)


def precision_recall_f1(gt: Sequence, pred: Sequence, t: float, basis: str) -> PRF:
    """Fraction of predictions matching some ground truth at IoU >= t
    (precision), the symmetric ground-truth coverage (recall), and their
    geometric mean (f1)."""
    if not gt:
        raise NoGroundTruthError("precision/recall undefined without ground truth")
    if not 0 < t <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {t}")
    iou = _iou_fn(basis)
    if not pred:
        return PRF(0.0, 0.0, 0.0)
    matched_pred = sum(1 for p in pred if any(iou(p, g) >= t for g in gt))
    matched_gt = sum(1 for g in gt if any(iou(g, p) >= t for p in pred))
    precision = matched_pred / len(pred)
    recall = matched_gt / len(gt)
    return PRF(precision, recall, math.sqrt(precision * recall))


def match_for_captions(gt: Sequence, pred: Sequence, t: float, basis: str
                       ) -> dict[int, Optional[int]]:
    """Map each ground-truth index to the prediction with the highest IoU if
    that IoU reaches t, else None. Ties go to the earlier prediction index."""
    if not 0 < t <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {t}")
    iou = _iou_fn(basis)
    out: dict[int, Optional[int]] = {}
    for gi, g in enumerate(gt):
        best, best_iou = None, 0.0
        for pi, p in enumerate(pred):
            v = iou(g, p)
            if v > best_iou:
                best, best_iou = pi, v
        out[gi] = best if best is not None and best_iou >= t else None
    return out


# ---------------------------------------------------------------------------
# caption metrics
# ---------------------------------------------------------------------------


def caption_tokens(text: str) -> list[str]:
    """Lowercase, replace punctuation with spaces, split on whitespace."""
    return _PUNCT_RE.sub(" ", text.lower()).split()


def _ngram_counts(words: list[str], n: int) -> Counter:
    return Counter(tuple(words[i : i + n]) for i in range(len(words) - n + 1))


def bleu4(hyp: str, ref: str) -> float:
    """Sentence-level BLEU with uniform weights over 1..4-gram modified
    precisions, a brevity penalty, and 1e-9 numerator smoothing for zero
    counts."""
    h, r = caption_tokens(hyp), caption_tokens(ref)
    if not h or not r:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        h_counts = _ngram_counts(h, n)
        total = max(len(h) - n + 1, 0)
        if total == 0:
            p = _BLEU_EPS
        else:
            r_counts = _ngram_counts(r, n)
            clipped = sum(min(c, r_counts[g]) for g, c in h_counts.items())
            p = clipped / total if clipped > 0 else _BLEU_EPS / total
        log_sum += math.log(p)
    bp = 1.0 if len(h) >= len(r) else math.exp(1.0 - len(r) / len(h))
    return bp * math.exp(log_sum / 4.0)


def _lcs_len(a: list[str], b: list[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(hyp: str, ref: str, beta: float = 1.2) -> float:
    """Longest-common-subsequence F-measure with recall weight ``beta``."""
    h, r = caption_tokens(hyp), caption_tokens(ref)
    if not h or not r:
        return 0.0
    lcs = _lcs_len(h, r)
    if lcs == 0:
        return 0.0
    p, rec = lcs / len(h), lcs / len(r)
    b2 = beta * beta
    return (1 + b2) * p * rec / (rec + b2 * p)


def _tfidf_vectors(words: list[str], idf: dict, max_n: int = 4) -> list[dict]:
    vecs = []
    for n in range(1, max_n + 1):
        counts = _ngram_counts(words, n)
        vecs.append({g: c * idf.get(g, idf["__default__"]) for g, c in counts.items()})
    return vecs


def cider_d(pairs: Sequence[tuple[str, str]], sigma: float = 6.0
            ) -> tuple[list[float], float]:
    """CIDEr-D over 1..4-grams: TF-IDF vectors with the IDF table built from
    the reference side of ``pairs``, per-order clipped cosine similarity with
    a Gaussian length penalty, averaged over orders and scaled by 10.

    IDF uses the smoothed form ln((1 + N) / (1 + df)) + 1 so a single-pair
    corpus still produces non-degenerate vectors; an identical (hyp, ref)
    pair scores exactly 10. Returns (per-pair scores, corpus mean).
    """
    if not pairs:
        raise NoPairsError("cider_d needs at least one (hyp, ref) pair")
    tokenized = [(caption_tokens(h), caption_tokens(r)) for h, r in pairs]
    n_docs = len(tokenized)
    df: Counter = Counter()
    for _h, r in tokenized:
        grams = set()
        for n in range(1, 5):
            grams.update(_ngram_counts(r, n))
        df.update(grams)
    idf = {g: math.log((1 + n_docs) / (1 + d)) + 1 for g, d in df.items()}
    idf["__default__"] = math.log(1 + n_docs) + 1  # unseen in any reference

    scores = []
    for h, r in tokenized:
        if not h or not r:
            scores.append(0.0)
            continue
        h_vecs = _tfidf_vectors(h, idf)
        r_vecs = _tfidf_vectors(r, idf)
        penalty = math.exp(-((len(h) - len(r)) ** 2) / (2 * sigma * sigma))
        total = 0.0
        for hv, rv in zip(h_vecs, r_vecs):
            norm_h = math.sqrt(sum(v * v for v in hv.values()))
            norm_r = math.sqrt(sum(v * v for v in rv.values()))
            if norm_h == 0 or norm_r == 0:
                continue
            num = sum(min(v, rv[g]) * rv[g] for g, v in hv.items() if g in rv)
            total += num / (norm_h * norm_r) * penalty
        scores.append(10.0 * total / 4.0)
    return scores, sum(scores) / len(scores)


def meteor_lite(hyp: str, ref: str) -> float:
    """Unigram METEOR without synonym/paraphrase tables.

    Words align by exact match, then by shared 4-character prefix (both words
    at least 4 characters). With m matches over alignment chunks:
    Fmean = 10PR / (R + 9P), penalty = 0.5 (chunks / m)^3,
    score = Fmean (1 - penalty). Absolute values are not comparable with full
    METEOR implementations.
    """
    h, r = caption_tokens(hyp), caption_tokens(ref)
    if not h or not r:
        return 0.0
    ref_used = [False] * len(r)
    align: list[tuple[int, int]] = []
    matched_h = [False] * len(h)
    for i, w in enumerate(h):
        for j, y in enumerate(r):
            if not ref_used[j] and w == y:
                ref_used[j] = True
                matched_h[i] = True
                align.append((i, j))
                break
    for i, w in enumerate(h):
        if matched_h[i] or len(w) < 4:
            continue
        for j, y in enumerate(r):
            if not ref_used[j] and len(y) >= 4 and w[:4] == y[:4]:
                ref_used[j] = True
                align.append((i, j))
                break
    m = len(align)
    if m == 0:
        return 0.0
    p, rec = m / len(h), m / len(r)
    fmean = 10 * p * rec / (rec + 9 * p)
    align.sort()
    chunks = 1
    for (hi, ri), (hj, rj) in zip(align, align[1:]):
        if hj != hi + 1 or rj != ri + 1:
            chunks += 1
    penalty = 0.5 * (chunks / m) ** 3
    return fmean * (1 - penalty)


_SENTENCE_METRICS = {
    "bleu4": lambda h, r, cfg: bleu4(h, r),
    "rouge_l": lambda h, r, cfg: rouge_l(h, r, beta=cfg.rouge_beta),
    "meteor_lite": lambda h, r, cfg: meteor_lite(h, r),
}


# ---------------------------------------------------------------------------
# corpus evaluation
# ---------------------------------------------------------------------------


@dataclass
class _VideoEval:
    gt: list
    pred: list
    n_raw_pred: int


def _to_basis(segments: Sequence[Segment], ann: VideoAnnotation, basis: str,
              warnings: list[str], side: str) -> list:
    if basis == "timestamp":
        return list(segments)
    spans, dropped = segments_to_index_spans(list(segments), ann.transcript)
    if dropped:
        warnings.append(f"{ann.video_id}: {len(dropped)} {side} segment(s) captured "
                        "zero tokens and were dropped for token-index scoring")
    return spans


def evaluate(gold: Sequence[VideoAnnotation],
             preds: Mapping[str, Sequence[Segment]],
             cfg: EvalConfig) -> EvalReport:
    """Score predictions against a gold corpus.

    Gold videos missing from ``preds`` are treated as empty prediction lists
    (warned). Per-video scores are macro-averaged across videos by default;
    ``cfg.aggregation == "micro"`` pools segments across the corpus instead.
    Caption metrics average per ground-truth segment with zeros for unmatched
    segments, per video, then across videos and thresholds; CIDEr-D pools its
    IDF corpus per threshold across all matched pairs.
    """
    warnings: list[str] = []
    seen_ids = set()
    for ann in gold:
        if ann.video_id in seen_ids:
            raise DuplicatePredictionError(f"duplicate video_id in gold: {ann.video_id!r}")
        seen_ids.add(ann.video_id)
    extra = set(preds) - seen_ids
    if extra:
        warnings.append(f"{len(extra)} prediction video_id(s) not in gold ignored: "
                        f"{sorted(extra)[:5]}")

    videos: list[_VideoEval] = []
    num_gt_segments = 0
    num_pred_segments = 0
    for ann in gold:
        num_gt_segments += len(ann.segments)
        raw_pred = list(preds.get(ann.video_id, ()))
        if ann.video_id not in preds:
            warnings.append(f"{ann.video_id}: no predictions; treated as empty")
        num_pred_segments += len(raw_pred)
        gt_items = _to_basis(ann.segments, ann, cfg.iou_basis, warnings, "gold")
        pred_items = _to_basis(raw_pred, ann, cfg.iou_basis, warnings, "predicted")
        if not gt_items:
            warnings.append(f"{ann.video_id}: no scoreable ground-truth segments; skipped")
            continue
        videos.append(_VideoEval(gt=gt_items, pred=pred_items, n_raw_pred=len(raw_pred)))

    if not videos:
        warnings.append("no scoreable videos")
        zero = {t: PRF(0.0, 0.0, 0.0) for t in cfg.thresholds}
        return EvalReport(0.0, zero, 0.0, 0.0, 0.0,
                          {m: 0.0 for m in cfg.caption_metrics},
                          len(list(gold)), num_gt_segments, num_pred_segments,
                          tuple(warnings))

    macro = cfg.aggregation == "macro"

    if macro:
        miou_value = sum(miou(v.gt, v.pred, cfg.iou_basis) for v in videos) / len(videos)
    else:
        best = [max((_iou_fn(cfg.iou_basis)(g, p) for p in v.pred), default=0.0)
                for v in videos for g in v.gt]
        miou_value = sum(best) / len(best)

    per_threshold: dict[float, PRF] = {}
    matches_by_t: dict[float, list[dict[int, Optional[int]]]] = {}
    for t in cfg.thresholds:
        if macro:
            prfs = [precision_recall_f1(v.gt, v.pred, t, cfg.iou_basis) for v in videos]
            p = sum(x.precision for x in prfs) / len(prfs)
            r = sum(x.recall for x in prfs) / len(prfs)
        else:
            iou = _iou_fn(cfg.iou_basis)
            total_pred = sum(len(v.pred) for v in videos)
            total_gt = sum(len(v.gt) for v in videos)
            hit_pred = sum(1 for v in videos for q in v.pred
                           if any(iou(q, g) >= t for g in v.gt))
            hit_gt = sum(1 for v in videos for g in v.gt
                         if any(iou(g, q) >= t for q in v.pred))
            p = hit_pred / total_pred if total_pred else 0.0
            r = hit_gt / total_gt if total_gt else 0.0
        per_threshold[t] = PRF(p, r, math.sqrt(p * r))
        matches_by_t[t] = [match_for_captions(v.gt, v.pred, t, cfg.iou_basis)
                           for v in videos]

    avg_p = sum(x.precision for x in per_threshold.values()) / len(per_threshold)
    avg_r = sum(x.recall for x in per_threshold.values()) / len(per_threshold)
    avg_f1 = sum(x.f1 for x in per_threshold.values()) / len(per_threshold)

    caption_scores = {
        m: _caption_score(m, videos, matches_by_t, cfg, macro)
        for m in cfg.caption_metrics
    }

    return EvalReport(
        miou=miou_value,
        per_threshold=per_threshold,
        avg_precision=avg_p,
        avg_recall=avg_r,
        avg_f1=avg_f1,
        caption_scores=caption_scores,
        num_videos=len(list(gold)),
        num_gt_segments=num_gt_segments,
        num_pred_segments=num_pred_segments,
        warnings=tuple(warnings),
    )


def _caption_of(item: Union[Segment, IndexSpan]) -> str:
    return item.caption or ""


def _caption_score(metric: str, videos: list[_VideoEval],
                   matches_by_t: dict[float, list[dict[int, Optional[int]]]],
                   cfg: EvalConfig, macro: bool) -> float:
    per_threshold_scores: list[float] = []
    for t, matches in matches_by_t.items():
        if metric == "cider_d":
            # Pool matched pairs corpus-wide so the IDF table is shared.
            pairs = []
            slots = []  # (video_idx, gt_idx) aligned with pairs
            for vi, (video, match) in enumerate(zip(videos, matches)):
                for gi, pi in match.items():
                    if pi is not None:
                        pairs.append((_caption_of(video.pred[pi]),
                                      _caption_of(video.gt[gi])))
                        slots.append((vi, gi))
            pair_scores = cider_d(pairs, sigma=cfg.cider_sigma)[0] if pairs else []
            scored = {slot: s for slot, s in zip(slots, pair_scores)}
            per_gt = lambda vi, gi, video, match: scored.get((vi, gi), 0.0)  # noqa: E731
        else:
            fn = _SENTENCE_METRICS[metric]

            def per_gt(vi, gi, video, match, fn=fn):
                pi = match[gi]
                if pi is None:
                    return 0.0
                return fn(_caption_of(video.pred[pi]), _caption_of(video.gt[gi]), cfg)

        video_means = []
        all_scores = []
        for vi, (video, match) in enumerate(zip(videos, matches)):
            vals = [per_gt(vi, gi, video, match) for gi in range(len(video.gt))]
            all_scores.extend(vals)
            video_means.append(sum(vals) / len(vals))
        if macro:
            per_threshold_scores.append(sum(video_means) / len(video_means))
        else:
            per_threshold_scores.append(sum(all_scores) / len(all_scores))
    return sum(per_threshold_scores) / len(per_threshold_scores)
