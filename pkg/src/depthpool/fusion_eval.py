"""Score fusion across image channels and the evaluation metrics.

Scores are non-negative per-class vectors.  Fusion multiplies each
forward/backward channel pair element-wise, L1-normalizes the pair
products, multiplies those together and takes the arg max (lowest index
wins ties).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import EmptyInputError, LengthMismatchError, ZeroVectorError
from .segmentation import ActionSegment

# Frame label meaning "no action here".
NO_LABEL = -1


class PredictionRecord(NamedTuple):
    predicted: int
    truth: int


def _as_scores(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a 1-D score vector, got shape {arr.shape}")
    if (arr < 0).any():
        raise ValueError("score vectors must be non-negative")
    return arr


def l1_normalize(v) -> np.ndarray:
    """Scale a non-negative vector to sum 1."""
    arr = _as_scores(v)
    total = float(arr.sum())
    if total <= 0.0:
        raise ZeroVectorError("cannot normalize an all-zero score vector")
    return arr / total


def product_fuse(channels) -> tuple[int, np.ndarray]:
    """Fuse per-channel score vectors into one label.

    Channels are taken as consecutive forward/backward pairs (an odd
    trailing channel stands alone): each pair is multiplied element-wise
    and L1-normalized, then all pair products are multiplied.  Returns
    (label, fused scores); ties go to the lowest class index.
    """
    vecs = [_as_scores(c) for c in channels]
    if not vecs:
        raise ValueError("product_fuse needs at least one channel")
    n = vecs[0].size
    for v in vecs:
        if v.size != n:
            raise LengthMismatchError(f"score lengths differ: {v.size} vs {n}")
    fused = np.ones(n)
    for i in range(0, len(vecs), 2):
        pair = vecs[i] if i + 1 >= len(vecs) else vecs[i] * vecs[i + 1]
        fused = fused * l1_normalize(pair)
    return int(np.argmax(fused)), fused


def labels_from_segments(segments: list[ActionSegment], length: int) -> np.ndarray:
    """Paint labeled segments onto a per-frame label array.

    Frames outside every segment get NO_LABEL; where segments share a
    boundary frame the later segment wins.
    """
    labels = np.full(length, NO_LABEL, dtype=np.int64)
    for seg in sorted(segments, key=lambda s: (s.start, s.end)):
        if seg.end > length:
            raise LengthMismatchError(f"segment ends at {seg.end} but length is {length}")
        if seg.label is not None:
            labels[seg.start - 1 : seg.end] = seg.label
    return labels


def recognition_rate(records) -> float:
    """Fraction of records whose predicted class equals the truth."""
    pairs = list(records)
    if not pairs:
        raise EmptyInputError("no prediction records")
    return float(np.mean([1.0 if p == t else 0.0 for p, t in pairs]))


def _check_same_length(truth: np.ndarray, predicted: np.ndarray) -> None:
    if truth.shape != predicted.shape:
        raise LengthMismatchError(
            f"label arrays differ in length: {truth.shape} vs {predicted.shape}"
        )


def jaccard_class(truth, predicted, class_id: int) -> float:
    """Frame-level intersection over union for one class (0 if both empty)."""
    t = np.asarray(truth)
    p = np.asarray(predicted)
    _check_same_length(t, p)
    g = t == class_id
    q = p == class_id
    union = int((g | q).sum())
    if union == 0:
        return 0.0
    return float((g & q).sum() / union)


def jaccard_sequence(truth, predicted) -> float:
    """Mean per-class Jaccard over one sequence.

    Sums the per-class index over every class present in the truth or the
    prediction, divided by the number of distinct classes in the truth.
    """
    t = np.asarray(truth)
    p = np.asarray(predicted)
    _check_same_length(t, p)
    truth_classes = {int(c) for c in np.unique(t) if c != NO_LABEL}
    pred_classes = {int(c) for c in np.unique(p) if c != NO_LABEL}
    if not truth_classes:
        return 0.0
    total = sum(jaccard_class(t, p, c) for c in truth_classes | pred_classes)
    return float(total / len(truth_classes))


def mean_jaccard(values) -> float:
    """Average of per-sequence Jaccard values."""
    vals = list(values)
    if not vals:
        raise EmptyInputError("no per-sequence values")
    return float(np.mean(vals))
