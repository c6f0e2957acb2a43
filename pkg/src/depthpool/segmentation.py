"""Action segmentation of continuous depth streams by quantity of movement.

A frame's quantity of movement (QOM) is the number of pixels whose depth
differs from the stream's first frame by at least a threshold.  Frames
whose QOM falls below a learned inter-action threshold are boundary
candidates; a sliding-window minimum filter keeps one boundary per
low-motion valley.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .depth_io import DepthSequence
from .errors import FrameOutOfRangeError, NoTrainingDataError


@dataclass
class QomParams:
    """Tuning knobs for QOM segmentation."""

    threshold_qom: float = 60.0     # per-pixel depth change that counts as movement
    tail_fraction: float = 0.125    # share of the average action length used as tail
    window_divisor: int = 2         # refinement window = avg length // divisor

    def __post_init__(self) -> None:
        if self.threshold_qom <= 0:
            raise ValueError("threshold_qom must be positive")
        if not 0 < self.tail_fraction < 0.5:
            raise ValueError("tail_fraction must lie in (0, 0.5)")
        if self.window_divisor < 1:
            raise ValueError("window_divisor must be at least 1")


@dataclass
class ActionSegment:
    """A span of frames, 1-based and inclusive on both ends."""

    start: int
    end: int
    label: int | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.start <= self.end:
            raise ValueError(f"bad segment span {self.start}..{self.end}")

    def __len__(self) -> int:
        return self.end - self.start + 1


@dataclass
class SegmentationModel:
    """Statistics learned from labeled training streams."""

    avg_length_l: float
    threshold_inter: float

    def __post_init__(self) -> None:
        if self.avg_length_l < 1:
            raise ValueError("avg_length_l must be at least 1")
        if self.threshold_inter < 0:
            raise ValueError("threshold_inter must be non-negative")


def compute_qom(seq: DepthSequence, t: int, threshold_qom: float = 60.0) -> int:
    """QOM of frame ``t`` (1-based): pixels moved vs. frame 1 by >= threshold."""
    if not 1 <= t <= len(seq):
        raise FrameOutOfRangeError(f"frame {t} outside 1..{len(seq)}")
    first = seq.frames[0].astype(np.int64)
    cur = seq.frames[t - 1].astype(np.int64)
    return int((np.abs(cur - first) >= threshold_qom).sum())


def qom_profile(seq: DepthSequence, threshold_qom: float = 60.0) -> np.ndarray:
    """QOM of every frame at once, as an int array of length len(seq)."""
    first = seq.frames[0].astype(np.int64)
    diffs = np.abs(seq.frames.astype(np.int64) - first[np.newaxis])
    return (diffs >= threshold_qom).sum(axis=(1, 2)).astype(np.int64)


def _tail_frames(segment: ActionSegment, n_tail: int) -> list[int]:
    # first and last n_tail frames of the span, deduplicated when they overlap
    head = range(segment.start, min(segment.start + n_tail, segment.end + 1))
    tail = range(max(segment.end - n_tail + 1, segment.start), segment.end + 1)
    return sorted(set(head) | set(tail))


def fit_segmentation_model(
    training: list[tuple[DepthSequence, list[ActionSegment]]],
    params: QomParams | None = None,
) -> SegmentationModel:
    """Learn the average action length and the inter-action QOM threshold.

    The threshold is mean + 2 * std (population) of the QOMs observed in
    the first and last ceil(tail_fraction * L) frames of every labeled
    training segment, where L is the average segment length.
    """
    params = params or QomParams()
    lengths = [len(seg) for _, segs in training for seg in segs]
    if not lengths:
        raise NoTrainingDataError("no labeled segments to fit on")
    avg_length = float(np.mean(lengths))
    n_tail = math.ceil(params.tail_fraction * avg_length)

    tail_qoms: list[float] = []
    for seq, segs in training:
        profile = qom_profile(seq, params.threshold_qom)
        for seg in segs:
            if seg.end > len(seq):
                raise FrameOutOfRangeError(
                    f"segment {seg.start}..{seg.end} outside 1..{len(seq)}"
                )
            for t in _tail_frames(seg, n_tail):
                tail_qoms.append(float(profile[t - 1]))
    qoms = np.asarray(tail_qoms)
    threshold_inter = float(qoms.mean() + 2.0 * qoms.std())
    return SegmentationModel(avg_length_l=avg_length, threshold_inter=threshold_inter)


def segment_actions(
    seq: DepthSequence,
    model: SegmentationModel,
    params: QomParams | None = None,
) -> list[ActionSegment]:
    """Split a stream into action segments at low-motion boundary frames.

    Candidates are frames with QOM below the model threshold.  A candidate
    survives refinement only if no candidate within window - 1 frames of it
    has a lower QOM (earlier frame wins ties).  Survivors plus the implicit
    first and last frame become boundaries; consecutive boundaries share
    their meeting frame.
    """
    params = params or QomParams()
    n = len(seq)
    profile = qom_profile(seq, params.threshold_qom)
    window = max(1, int(model.avg_length_l // params.window_divisor))

    candidates = [t for t in range(1, n + 1) if profile[t - 1] < model.threshold_inter]
    survivors = []
    for idx, t in enumerate(candidates):
        q = profile[t - 1]
        beaten = False
        for s in candidates[:idx][::-1]:
            if t - s > window - 1:
                break
            if profile[s - 1] <= q:  # earlier frame wins ties
                beaten = True
                break
        if not beaten:
            for s in candidates[idx + 1 :]:
                if s - t > window - 1:
                    break
                if profile[s - 1] < q:
                    beaten = True
                    break
        if not beaten:
            survivors.append(t)

    boundaries = sorted({1, n} | set(survivors))
    if len(boundaries) < 2:
        return [ActionSegment(1, n)]
    return [
        ActionSegment(boundaries[i], boundaries[i + 1])
        for i in range(len(boundaries) - 1)
    ]


def levenshtein_segmentation_score(
    predicted: list[ActionSegment], truth: list[ActionSegment]
) -> float:
    """Edit-distance score between two label strings, on a 0..100 scale.

    100 * (1 - editdist / max(len(predicted), len(truth))); two empty
    lists score 100, one empty list scores 0.
    """
    a = [seg.label for seg in predicted]
    b = [seg.label for seg in truth]
    if not a and not b:
        return 100.0
    if not a or not b:
        return 0.0
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cost = 0 if x == y else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    dist = prev[-1]
    return 100.0 * (1.0 - dist / max(len(a), len(b)))
