"""Movement-based boundary detection and segmentation scoring."""

import numpy as np
import pytest

from depthpool.depth_io import DepthSequence
from depthpool.errors import FrameOutOfRangeError, NoTrainingDataError
from depthpool.segmentation import (
    ActionSegment,
    QomParams,
    SegmentationModel,
    compute_qom,
    fit_segmentation_model,
    levenshtein_segmentation_score,
    qom_profile,
    segment_actions,
)
from depthpool.synthetic import gesture_stream


def brute_force_qom(seq, t, threshold):
    first = seq.frames[0].astype(np.int64)
    frame = seq.frames[t - 1].astype(np.int64)
    count = 0
    for r in range(seq.height):
        for c in range(seq.width):
            if abs(int(frame[r, c]) - int(first[r, c])) >= threshold:
                count += 1
    return count


class TestComputeQom:
    def test_first_frame_is_zero(self):
        rng = np.random.default_rng(60)
        seq = DepthSequence(rng.integers(0, 500, size=(3, 4, 4), dtype=np.uint16))
        assert compute_qom(seq, 1) == 0

    def test_hand_counted_example(self):
        frames = np.zeros((2, 2, 2), dtype=np.uint16)
        frames[1] = [[100, 10], [0, 0]]
        seq = DepthSequence(frames)
        assert compute_qom(seq, 2, 60.0) == 1

    def test_threshold_is_inclusive(self):
        frames = np.zeros((2, 3, 5), dtype=np.uint16)
        frames[1] = 60
        seq = DepthSequence(frames)
        assert compute_qom(seq, 2, 60.0) == 15

    def test_frame_out_of_range(self):
        seq = DepthSequence(np.zeros((2, 2, 2), dtype=np.uint16))
        with pytest.raises(FrameOutOfRangeError):
            compute_qom(seq, 0)
        with pytest.raises(FrameOutOfRangeError):
            compute_qom(seq, 3)

    def test_matches_pixel_loop(self):
        """Vectorized count equals an explicit per-pixel loop, offsets included."""
        rng = np.random.default_rng(61)
        for _ in range(5):
            frames = rng.integers(100, 400, size=(4, 3, 3), dtype=np.uint16)
            # a sub-threshold uniform shift of one frame must act only
            # through the per-pixel differences, never independently
            frames[2] += 59
            seq = DepthSequence(frames)
            for t in range(1, 5):
                assert compute_qom(seq, t, 60.0) == brute_force_qom(seq, t, 60.0)

    def test_profile_matches_per_frame_calls(self):
        rng = np.random.default_rng(62)
        seq = DepthSequence(rng.integers(0, 200, size=(6, 4, 4), dtype=np.uint16))
        profile = qom_profile(seq, 60.0)
        assert profile.shape == (6,)
        for t in range(1, 7):
            assert profile[t - 1] == compute_qom(seq, t, 60.0)


def sequence_with_tail_qoms(tail_qom: int) -> DepthSequence:
    """An 8-frame stream whose last frame changes exactly tail_qom pixels."""
    frames = np.full((8, 4, 4), 500, dtype=np.uint16)
    flat = frames[7].ravel()
    flat[:tail_qom] += 100
    return DepthSequence(frames)


class TestFitSegmentationModel:
    def test_average_length(self):
        frames = np.full((29, 4, 4), 500, dtype=np.uint16)
        seq = DepthSequence(frames)
        segments = [ActionSegment(1, 10), ActionSegment(10, 29)]
        model = fit_segmentation_model([(seq, segments)])
        assert model.avg_length_l == 15.0

    def test_constant_tails_give_threshold_equal_to_mean(self):
        seq = sequence_with_tail_qoms(0)
        model = fit_segmentation_model([(seq, [ActionSegment(1, 8)])])
        assert model.threshold_inter == 0.0

    def test_mean_plus_two_population_std(self):
        """Tail movement counts {0, 10} give 5 + 2*5 = 15."""
        seq = sequence_with_tail_qoms(10)
        model = fit_segmentation_model([(seq, [ActionSegment(1, 8)])])
        # avg length 8 -> ceil(0.125 * 8) = 1 tail frame per side -> QOMs {0, 10}
        assert model.threshold_inter == pytest.approx(15.0)

    def test_no_training_data(self):
        with pytest.raises(NoTrainingDataError):
            fit_segmentation_model([])
        seq = sequence_with_tail_qoms(0)
        with pytest.raises(NoTrainingDataError):
            fit_segmentation_model([(seq, [])])

    def test_model_validation(self):
        with pytest.raises(ValueError):
            SegmentationModel(avg_length_l=0.5, threshold_inter=1.0)
        with pytest.raises(ValueError):
            SegmentationModel(avg_length_l=10.0, threshold_inter=-1.0)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            QomParams(threshold_qom=0.0)
        with pytest.raises(ValueError):
            QomParams(tail_fraction=0.5)
        with pytest.raises(ValueError):
            QomParams(window_divisor=0)


def fitted_model():
    streams = [gesture_stream([0, 1, 0]), gesture_stream([1, 0, 1])]
    return fit_segmentation_model([(seq, segs) for seq, segs in streams])


class TestSegmentActions:
    def test_recovers_rest_pose_boundaries(self):
        model = fitted_model()
        seq, truth = gesture_stream([0, 1, 0], peaks=[11, 12, 10])
        segments = segment_actions(seq, model)
        assert len(segments) == len(truth)
        true_bounds = sorted({s.start for s in truth} | {s.end for s in truth})
        found = sorted({s.start for s in segments} | {s.end for s in segments})
        assert len(found) == len(true_bounds)
        for a, b in zip(found, true_bounds):
            assert abs(a - b) <= 2

    def test_constant_stream_collapses_to_one_segment(self):
        model = fitted_model()
        frames = np.full((40, 4, 4), 800, dtype=np.uint16)
        segments = segment_actions(DepthSequence(frames), model)
        assert segments == [ActionSegment(1, 40)]

    def test_stream_shorter_than_window(self):
        model = fitted_model()
        frames = np.full((3, 4, 4), 800, dtype=np.uint16)
        segments = segment_actions(DepthSequence(frames), model)
        assert segments == [ActionSegment(1, 3)]

    def test_segments_cover_and_share_boundaries(self):
        model = fitted_model()
        seq, _ = gesture_stream([1, 0, 1, 0])
        segments = segment_actions(seq, model)
        assert segments[0].start == 1
        assert segments[-1].end == len(seq)
        for left, right in zip(segments, segments[1:]):
            assert left.end == right.start

    def test_deterministic(self):
        model = fitted_model()
        seq, _ = gesture_stream([0, 1])
        assert segment_actions(seq, model) == segment_actions(seq, model)

    def test_boundaries_are_below_threshold(self):
        """Every interior boundary frame is a candidate (movement under cut)."""
        model = fitted_model()
        seq, _ = gesture_stream([0, 1, 0])
        profile = qom_profile(seq)
        for seg in segment_actions(seq, model)[:-1]:
            assert profile[seg.end - 1] < model.threshold_inter


def brute_force_edit_distance(a, b):
    rows = len(a) + 1
    cols = len(b) + 1
    d = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        d[i][0] = i
    for j in range(cols):
        d[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[-1][-1]


def labeled(labels):
    return [ActionSegment(i + 1, i + 1, lab) for i, lab in enumerate(labels)]


class TestLevenshteinScore:
    def test_identical_sequences(self):
        segs = labeled([0, 1, 2])
        assert levenshtein_segmentation_score(segs, segs) == 100.0

    def test_single_substitution(self):
        assert levenshtein_segmentation_score(labeled([0, 1]), labeled([0, 2])) == 50.0

    def test_empty_cases(self):
        assert levenshtein_segmentation_score([], labeled([0])) == 0.0
        assert levenshtein_segmentation_score(labeled([0]), []) == 0.0
        assert levenshtein_segmentation_score([], []) == 100.0

    def test_matches_reference_distance(self):
        rng = np.random.default_rng(63)
        for _ in range(25):
            a = list(rng.integers(0, 3, size=rng.integers(0, 8)))
            b = list(rng.integers(0, 3, size=rng.integers(0, 8)))
            if not a and not b:
                continue
            expected = 100.0 * (1.0 - brute_force_edit_distance(a, b) / max(len(a), len(b)))
            got = levenshtein_segmentation_score(labeled(a), labeled(b))
            assert got == pytest.approx(expected)
