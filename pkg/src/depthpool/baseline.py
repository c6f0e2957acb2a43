"""Nearest-centroid baseline classifier over downsampled dynamic images.

Deliberately simple: per channel and class, the model stores the mean of
bilinearly downsampled images (pixels scaled to [0, 1]).  Scores are a
softmax over negative Euclidean distances, so every score vector is
strictly positive and fuses cleanly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .depth_io import DynamicImage
from .errors import MissingClassExamplesError, MissingPathError

DEFAULT_DOWNSAMPLE = 32


def image_descriptor(image: DynamicImage, downsample: int = DEFAULT_DOWNSAMPLE) -> np.ndarray:
    """Flatten an image to a unit-scaled vector after bilinear downsampling."""
    planes = []
    for c in range(image.channels):
        pil = Image.fromarray(image.pixels[:, :, c], mode="L")
        small = pil.resize((downsample, downsample), Image.BILINEAR)
        planes.append(np.asarray(small, dtype=np.float64).ravel())
    return np.concatenate(planes) / 255.0


@dataclass
class CentroidModel:
    """Per-channel, per-class mean descriptors."""

    downsample: int
    classes: list[int]
    centroids: dict[str, dict[int, np.ndarray]] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.classes) < 2:
            raise MissingClassExamplesError("a classifier needs at least 2 classes")
        if self.classes != sorted(self.classes):
            raise ValueError("classes must be sorted ascending")

    @property
    def channels(self) -> list[str]:
        return sorted(self.centroids)

    def score(self, channel: str, image: DynamicImage) -> np.ndarray:
        """Softmax over negative distances to each class centroid."""
        desc = image_descriptor(image, self.downsample)
        dists = np.array(
            [np.linalg.norm(desc - self.centroids[channel][c]) for c in self.classes]
        )
        logits = -(dists - dists.min())  # shift so the softmax never underflows to zero
        weights = np.exp(logits)
        return weights / weights.sum()

    def save(self, path: str) -> None:
        payload = {
            "downsample": self.downsample,
            "classes": self.classes,
            "centroids": {
                ch: {str(c): vec.tolist() for c, vec in by_class.items()}
                for ch, by_class in self.centroids.items()
            },
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "CentroidModel":
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except FileNotFoundError as exc:
            raise MissingPathError(f"no such model file: {path}") from exc
        centroids = {
            ch: {int(c): np.asarray(vec, dtype=np.float64) for c, vec in by_class.items()}
            for ch, by_class in payload["centroids"].items()
        }
        return cls(
            downsample=int(payload["downsample"]),
            classes=[int(c) for c in payload["classes"]],
            centroids=centroids,
        )


def train_centroid_model(
    examples: dict[str, list[tuple[int, DynamicImage]]],
    downsample: int = DEFAULT_DOWNSAMPLE,
) -> CentroidModel:
    """Average the descriptors of each (channel, class) group.

    ``examples`` maps channel name to (class id, image) pairs.  Every
    channel must contain at least one example of every class seen
    anywhere, and at least two classes overall.
    """
    if not examples:
        raise MissingClassExamplesError("no training examples")
    classes = sorted({c for pairs in examples.values() for c, _ in pairs})
    if len(classes) < 2:
        raise MissingClassExamplesError(f"need at least 2 classes, got {classes}")
    centroids: dict[str, dict[int, np.ndarray]] = {}
    for channel, pairs in examples.items():
        by_class: dict[int, list[np.ndarray]] = {}
        for class_id, image in pairs:
            by_class.setdefault(class_id, []).append(image_descriptor(image, downsample))
        missing = [c for c in classes if c not in by_class]
        if missing:
            raise MissingClassExamplesError(
                f"channel {channel} has no examples for classes {missing}"
            )
        centroids[channel] = {c: np.mean(by_class[c], axis=0) for c in classes}
    return CentroidModel(downsample=downsample, classes=classes, centroids=centroids)
