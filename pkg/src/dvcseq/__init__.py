"""Data tooling for dense video captioning as sequence generation.

Segment annotations serialize to whitespace-tokenized target strings (and
parse back, tolerating malformed model output), transcripts align between
timestamps, token indices, and frame indices, and an evaluation harness scores
segmentation (IoU-based) and captioning (IoU-gated sentence metrics) quality.
"""

__version__ = "0.1.0"

from .alignment import (ConcatLayout, MarkedTranscript, Marker, concat_layout,
                        index_spans_to_segments, insert_timestamp_markers,
                        segments_to_index_spans, temporal_bucket,
                        token_index_of_time)
from .baselines import BaselineConfig, random_partition, random_segmentation
from .codec import (CodecIssue, DecodeReport, LengthRecord, TargetString, decode,
                    encode, grammar_check, truncated_caption)
from .corpus import (WikiHowArticle, WikiHowExtraction, WikiHowStep,
                     extract_wikihow, load_annotations, load_predictions,
                     load_targets, load_wikihow, save_annotations,
                     save_predictions, save_targets, to_partition_setting)
from .errors import (AnnotationFormatError, DuplicatePredictionError, DvcseqError,
                     EmptyTranscriptError, InvalidAnnotationError,
                     MissingCaptionError, NoGroundTruthError, NoPairsError,
                     NoSegmentsError, NotAPartitionError, SpanOutOfBoundsError,
                     ZeroBucketError, ZeroDurationError)
from .metrics import (EvalConfig, EvalReport, PRF, bleu4, cider_d, evaluate,
                      interval_iou, match_for_captions, meteor_lite, miou,
                      precision_recall_f1, rouge_l, span_iou)
from .types import (AsrToken, AsrTranscript, CodecConfig, FrameTimeline, IndexSpan,
                    Segment, TimeMs, VideoAnnotation, Violation,
                    validate_annotation)

__all__ = [
    "__version__",
    # types
    "TimeMs", "AsrToken", "AsrTranscript", "Segment", "IndexSpan",
    "FrameTimeline", "VideoAnnotation", "CodecConfig", "Violation",
    "validate_annotation",
    # alignment
    "ConcatLayout", "MarkedTranscript", "Marker", "concat_layout",
    "token_index_of_time", "segments_to_index_spans", "index_spans_to_segments",
    "insert_timestamp_markers", "temporal_bucket",
    # codec
    "TargetString", "LengthRecord", "CodecIssue", "DecodeReport",
    "encode", "decode", "grammar_check", "truncated_caption",
    # metrics
    "EvalConfig", "EvalReport", "PRF", "interval_iou", "span_iou", "miou",
    "precision_recall_f1", "match_for_captions", "bleu4", "rouge_l", "cider_d",
    "meteor_lite", "evaluate",
    # baselines
    "BaselineConfig", "random_partition", "random_segmentation",
    # corpus
    "load_annotations", "save_annotations", "load_predictions",
    "save_predictions", "load_targets", "save_targets", "to_partition_setting",
    "WikiHowArticle", "WikiHowStep", "WikiHowExtraction", "extract_wikihow",
    "load_wikihow",
    # errors
    "DvcseqError", "EmptyTranscriptError", "SpanOutOfBoundsError",
    "ZeroBucketError", "MissingCaptionError", "NotAPartitionError",
    "NoGroundTruthError", "NoPairsError", "NoSegmentsError",
    "ZeroDurationError", "DuplicatePredictionError", "AnnotationFormatError",
    "InvalidAnnotationError",
]
