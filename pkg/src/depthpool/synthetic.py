"""Programmatic moving-block gesture data for demos and tests.

Each stream shows a raised block in front of a flat wall.  A gesture
moves the block away from its home position and back: class 0 sweeps
horizontally, class 1 vertically.  Consecutive gestures share their
boundary frame, where the block sits exactly at home, so the movement
profile dips to zero at every boundary.
"""

from __future__ import annotations

import argparse
import os

import numpy as np

from .depth_io import DepthSequence, save_depth_sequence
from .segmentation import ActionSegment

WIDTH = 32
HEIGHT = 24
WALL_DEPTH = 2000
BLOCK_DEPTH = 1000
BLOCK_SIZE = 6
HOME_ROW = 3
HOME_COL = 4
ACTION_FRAMES = 25
N_CLASSES = 2


def _offsets(peak: int) -> np.ndarray:
    half = (ACTION_FRAMES - 1) // 2
    up = np.rint(np.linspace(0.0, peak, half + 1))
    return np.concatenate([up, up[-2::-1]]).astype(np.int64)


def _render_frame(dx: int, dy: int, block_depth: int) -> np.ndarray:
    frame = np.full((HEIGHT, WIDTH), WALL_DEPTH, dtype=np.uint16)
    r, c = HOME_ROW + dy, HOME_COL + dx
    frame[r : r + BLOCK_SIZE, c : c + BLOCK_SIZE] = block_depth
    return frame


def gesture_stream(
    labels: list[int],
    peaks: list[int] | None = None,
    block_depth: int = BLOCK_DEPTH,
) -> tuple[DepthSequence, list[ActionSegment]]:
    """Render one continuous stream of gestures with shared boundaries."""
    peaks = peaks or [12] * len(labels)
    if len(peaks) != len(labels):
        raise ValueError("need one peak per label")
    n_frames = ACTION_FRAMES + (len(labels) - 1) * (ACTION_FRAMES - 1)
    frames = np.empty((n_frames, HEIGHT, WIDTH), dtype=np.uint16)
    segments = []
    start = 1
    for label, peak in zip(labels, peaks):
        offsets = _offsets(peak)
        for i, off in enumerate(offsets):
            dx, dy = (int(off), 0) if label == 0 else (0, int(off))
            frames[start - 1 + i] = _render_frame(dx, dy, block_depth)
        end = start + ACTION_FRAMES - 1
        segments.append(ActionSegment(start, end, label))
        start = end
    return DepthSequence(frames, source_id="synthetic"), segments


def stream_plan(index: int, rng: np.random.Generator, actions: int = 3):
    """Deterministically varied labels and peaks for stream ``index``."""
    labels = [(index + j) % N_CLASSES for j in range(actions)]
    peaks = [int(rng.integers(10, 13)) for _ in range(actions)]
    return labels, peaks


def make_dataset(
    out_dir: str,
    n_train: int = 10,
    n_test: int = 10,
    seed: int = 0,
    actions: int = 3,
) -> dict:
    """Write train/test gesture streams, truth segments and a fit spec.

    Returns the file layout: stream and segment paths are relative to
    ``out_dir`` so the directory can be moved around freely.
    """
    rng = np.random.default_rng(seed)
    layout = {"train": [], "test": []}
    for split, count in (("train", n_train), ("test", n_test)):
        os.makedirs(os.path.join(out_dir, split), exist_ok=True)
        for i in range(count):
            labels, peaks = stream_plan(i, rng, actions)
            depth = BLOCK_DEPTH + int(rng.integers(-100, 101))
            seq, segments = gesture_stream(labels, peaks, depth)
            stream_rel = os.path.join(split, f"stream_{i:02d}.dseq")
            segments_rel = os.path.join(split, f"stream_{i:02d}_segments.json")
            save_depth_sequence(seq, os.path.join(out_dir, stream_rel))
            _write_segments(segments, os.path.join(out_dir, segments_rel))
            layout[split].append({"input": stream_rel, "segments": segments_rel})
    _write_json(layout["train"], os.path.join(out_dir, "fit_spec.json"))
    return layout


def _write_segments(segments: list[ActionSegment], path: str) -> None:
    _write_json(
        [{"start": s.start, "end": s.end, "label": s.label} for s in segments], path
    )


def _write_json(payload, path: str) -> None:
    import json

    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def main() -> None:
    parser = argparse.ArgumentParser(description="generate a demo gesture dataset")
    parser.add_argument("out_dir")
    parser.add_argument("--train", type=int, default=10)
    parser.add_argument("--test", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    layout = make_dataset(args.out_dir, args.train, args.test, args.seed)
    print(
        f"{len(layout['train'])} train / {len(layout['test'])} test streams in {args.out_dir}"
    )


if __name__ == "__main__":
    main()
