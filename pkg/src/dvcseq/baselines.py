"""Seeded random baselines for segmentation.

``random_partition`` tiles a transcript into n spans with n drawn uniformly
from a configured range; ``random_segmentation`` drops n disjoint timestamp
segments into a video by pairing 2n sorted uniform draws. Both are pure
functions of their inputs and the supplied random stream, so identical seeds
reproduce identical outputs. The segmentation construction is this package's
own policy; its scores should be labeled as such.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyTranscriptError, ZeroDurationError
from .types import IndexSpan, Segment, TimeMs


@dataclass(frozen=True)
class BaselineConfig:
    n_min: int = 1
    n_max: int = 15
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError(f"need 1 <= n_min <= n_max, got [{self.n_min}, {self.n_max}]")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def random_partition(transcript_len: int, cfg: BaselineConfig,
                     rng: np.random.Generator) -> list[IndexSpan]:
    """Tile [0, transcript_len) into n spans: n ~ Uniform{n_min..n_max} capped
    at transcript_len, cut points drawn uniformly without replacement."""
    if transcript_len < 1:
        raise EmptyTranscriptError(
            f"cannot partition a transcript of {transcript_len} tokens")
    n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    n = min(n, transcript_len)
    if n > 1:
        cuts = np.sort(rng.choice(transcript_len - 1, size=n - 1, replace=False)) + 1
        bounds = [0, *(int(c) for c in cuts), transcript_len]
    else:
        bounds = [0, transcript_len]
    return [IndexSpan(a, b) for a, b in zip(bounds, bounds[1:])]


def random_segmentation(duration: TimeMs, cfg: BaselineConfig,
                        rng: np.random.Generator) -> list[Segment]:
    """Drop n disjoint segments into [0, duration]: n ~ Uniform{n_min..n_max},
    2n sorted uniform draws paired into (start, end) intervals."""
    if duration <= 0:
        raise ZeroDurationError(f"duration must be positive, got {duration}")
    n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    while True:
        xs = np.sort(rng.uniform(0.0, duration, size=2 * n))
        starts, ends = xs[0::2], xs[1::2]
        if np.all(starts < ends):  # exact ties have measure zero; redraw if hit
            break
    return [Segment(float(s), float(e)) for s, e in zip(starts, ends)]
