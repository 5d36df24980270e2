"""Exception hierarchy shared across the package."""


class DvcseqError(Exception):
    """Base class for all errors raised by this package."""


class EmptyTranscriptError(DvcseqError):
    """An operation that needs at least one ASR token got an empty transcript."""


class SpanOutOfBoundsError(DvcseqError):
    """A token-index span points outside the transcript."""


class ZeroBucketError(DvcseqError):
    """Temporal bucketing requires a positive bucket width."""


class MissingCaptionError(DvcseqError):
    """Caption-carrying encoding requested but a segment has no caption."""


class NotAPartitionError(DvcseqError):
    """Partition-setting encoding requires spans that tile the transcript."""


class NoGroundTruthError(DvcseqError):
    """Segmentation metrics are undefined without ground-truth segments."""


class NoPairsError(DvcseqError):
    """Corpus-level caption scoring needs at least one (hypothesis, reference) pair."""


class NoSegmentsError(DvcseqError):
    """The partition transform needs at least one annotated segment."""


class ZeroDurationError(DvcseqError):
    """Random segmentation needs a positive video duration."""


class DuplicatePredictionError(DvcseqError):
    """Two prediction records share the same video_id."""


class AnnotationFormatError(DvcseqError):
    """A corpus file line could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class InvalidAnnotationError(DvcseqError):
    """A parsed record violates an annotation invariant; carries the line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
