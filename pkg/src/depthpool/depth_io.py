"""Depth sequence and dynamic image I/O.

Centralizes all on-disk formats so the rest of the pipeline never touches
PIL or raw bytes directly.  Two sequence formats are supported:

* ``png_dir``  -- a directory of single-channel 16-bit grayscale PNGs named
  ``frame_%06d.png``, 1-indexed.
* ``dseq``     -- one binary file: magic ``DSEQ``, then width, height and
  frame count as little-endian uint32, then width*height*count uint16
  samples, frame-major, row-major within a frame.

Depth values are treated as dimensionless intensities in a uint16
container; 8-bit grayscale sources are accepted value-preserving.
"""

from __future__ import annotations

import os
import re
import struct
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import (
    CorruptFrameError,
    EmptySequenceError,
    FrameOutOfRangeError,
    IoFailureError,
    MissingPathError,
    NonFiniteFieldError,
)

DSEQ_MAGIC = b"DSEQ"
FRAME_NAME_RE = re.compile(r"^frame_(\d{6})\.png$")

# Pixel value a constant field maps to: the middle of the 8-bit range.
MID_GRAY = 128


@dataclass
class DepthFrame:
    """One depth map; ``values`` is a (height, width) uint16 array."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        if self.values.dtype != np.uint16:
            raise CorruptFrameError(f"expected uint16 samples, got {self.values.dtype}")
        if self.width < 2 or self.height < 2:
            raise CorruptFrameError(f"frame must be at least 2x2, got {self.width}x{self.height}")
        if self.values.shape != (self.height, self.width):
            raise CorruptFrameError(
                f"sample grid {self.values.shape} does not match {self.height}x{self.width}"
            )


@dataclass
class DepthSequence:
    """An ordered stack of equally sized depth frames.

    ``frames`` is a (count, height, width) uint16 array; ``frame_rate``
    is informational only and ``source_id`` names where the data came
    from (file path, recording id, ...).
    """

    frames: np.ndarray
    frame_rate: float = 30.0
    source_id: str = ""

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 3 or self.frames.shape[0] == 0:
            raise EmptySequenceError("a depth sequence needs at least one frame")
        if self.frames.dtype != np.uint16:
            raise CorruptFrameError(f"expected uint16 samples, got {self.frames.dtype}")
        if self.frames.shape[1] < 2 or self.frames.shape[2] < 2:
            raise CorruptFrameError("frames must be at least 2x2")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])

    def frame(self, t: int) -> DepthFrame:
        """Return frame ``t`` (1-based)."""
        if not 1 <= t <= len(self):
            raise FrameOutOfRangeError(f"frame {t} outside 1..{len(self)}")
        return DepthFrame(self.width, self.height, self.frames[t - 1])

    def slice(self, start: int, end: int) -> "DepthSequence":
        """Return the subsequence covering frames ``start..end`` (1-based, inclusive)."""
        if not (1 <= start <= end <= len(self)):
            raise FrameOutOfRangeError(f"span {start}..{end} outside 1..{len(self)}")
        return DepthSequence(self.frames[start - 1 : end], self.frame_rate, self.source_id)


@dataclass
class DynamicImage:
    """A quantized pooled image; ``pixels`` is (height, width, channels) uint8."""

    width: int
    height: int
    channels: int
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels)
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {self.pixels.dtype}")
        if self.pixels.shape != (self.height, self.width, self.channels):
            raise ValueError(
                f"pixel grid {self.pixels.shape} does not match "
                f"({self.height}, {self.width}, {self.channels})"
            )


def _frame_from_png(path: str) -> np.ndarray:
    try:
        with Image.open(path) as img:
            mode = img.mode
            arr = np.array(img)
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptFrameError(f"cannot decode {path}: {exc}") from exc
    if mode in ("I;16", "I;16B", "I"):
        if arr.min() < 0 or arr.max() > 65535:
            raise CorruptFrameError(f"{path}: values outside the uint16 range")
        return arr.astype(np.uint16)
    if mode == "L":
        # 8-bit sources keep their raw values; thresholds are config anyway.
        return arr.astype(np.uint16)
    raise CorruptFrameError(f"{path}: expected single-channel depth PNG, got mode {mode}")


def _load_png_dir(path: str) -> np.ndarray:
    entries = []
    for name in os.listdir(path):
        m = FRAME_NAME_RE.match(name)
        if m:
            entries.append((int(m.group(1)), name))
    if not entries:
        raise EmptySequenceError(f"no frame_%06d.png files in {path}")
    entries.sort()
    frames = []
    shape = None
    for _, name in entries:
        arr = _frame_from_png(os.path.join(path, name))
        if arr.ndim != 2:
            raise CorruptFrameError(f"{name}: expected a 2-D frame, got shape {arr.shape}")
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise CorruptFrameError(f"{name}: frame size {arr.shape} differs from {shape}")
        frames.append(arr)
    return np.stack(frames)


def _load_dseq(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) < 16 or header[:4] != DSEQ_MAGIC:
            raise CorruptFrameError(f"{path}: not a dseq file")
        width, height, count = struct.unpack("<III", header[4:16])
        if count == 0:
            raise EmptySequenceError(f"{path}: zero frames")
        if width < 2 or height < 2:
            raise CorruptFrameError(f"{path}: frame size {width}x{height} too small")
        expected = width * height * count
        data = np.frombuffer(fh.read(expected * 2), dtype="<u2")
        if data.size != expected:
            raise CorruptFrameError(f"{path}: truncated sample data")
        if fh.read(1):
            raise CorruptFrameError(f"{path}: trailing bytes after sample data")
    return data.reshape(count, height, width).astype(np.uint16)


def load_depth_sequence(path: str, fmt: str = "auto") -> DepthSequence:
    """Load a depth sequence from disk.

    Parameters
    ----------
    path : str
        Directory (``png_dir``) or file (``dseq``).
    fmt : str
        ``"png_dir"``, ``"dseq"`` or ``"auto"`` to infer from the path type.
    """
    if not os.path.exists(path):
        raise MissingPathError(f"no such path: {path}")
    if fmt == "auto":
        fmt = "png_dir" if os.path.isdir(path) else "dseq"
    if fmt == "png_dir":
        if not os.path.isdir(path):
            raise MissingPathError(f"png_dir expects a directory: {path}")
        frames = _load_png_dir(path)
    elif fmt == "dseq":
        if not os.path.isfile(path):
            raise MissingPathError(f"dseq expects a file: {path}")
        frames = _load_dseq(path)
    else:
        raise ValueError(f"unknown sequence format: {fmt}")
    return DepthSequence(frames, source_id=path)


def save_depth_sequence(seq: DepthSequence, path: str) -> None:
    """Write ``seq`` as a dseq file."""
    try:
        with open(path, "wb") as fh:
            fh.write(DSEQ_MAGIC)
            fh.write(struct.pack("<III", seq.width, seq.height, len(seq)))
            fh.write(np.ascontiguousarray(seq.frames, dtype="<u2").tobytes())
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc


def save_depth_png_dir(seq: DepthSequence, path: str) -> None:
    """Write ``seq`` as a directory of 16-bit grayscale PNGs."""
    os.makedirs(path, exist_ok=True)
    for t in range(len(seq)):
        name = os.path.join(path, "frame_%06d.png" % (t + 1))
        try:
            Image.fromarray(seq.frames[t]).save(name, format="PNG")
        except OSError as exc:
            raise IoFailureError(f"cannot write {name}: {exc}") from exc


def quantize_field(field: np.ndarray) -> DynamicImage:
    """Map a real-valued field to an 8-bit image by joint min-max scaling.

    All channels share one affine map round((x - min) / (max - min) * 255);
    a constant field maps to mid-gray everywhere.
    """
    arr = np.asarray(field, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W) or (H, W, 1|3) field, got shape {np.shape(field)}")
    if not np.isfinite(arr).all():
        raise NonFiniteFieldError("field contains NaN or infinity")
    lo = float(arr.min())
    hi = float(arr.max())
    if hi == lo:
        pixels = np.full(arr.shape, MID_GRAY, dtype=np.uint8)
    else:
        pixels = np.rint((arr - lo) / (hi - lo) * 255.0).astype(np.uint8)
    h, w, c = arr.shape
    return DynamicImage(width=w, height=h, channels=c, pixels=pixels)


def save_dynamic_image(image: DynamicImage, path: str) -> None:
    """Write a dynamic image as an 8-bit PNG (grayscale or RGB)."""
    parent = os.path.dirname(path) or "."
    if not os.path.isdir(parent):
        raise IoFailureError(f"target directory does not exist: {parent}")
    if image.channels == 1:
        pil = Image.fromarray(image.pixels[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(image.pixels, mode="RGB")
    try:
        pil.save(path, format="PNG")
    except OSError as exc:
        raise IoFailureError(f"cannot write {path}: {exc}") from exc


def load_dynamic_image(path: str) -> DynamicImage:
    """Read back an 8-bit PNG written by :func:`save_dynamic_image`."""
    if not os.path.exists(path):
        raise MissingPathError(f"no such image: {path}")
    try:
        with Image.open(path) as img:
            mode = img.mode
            arr = np.array(img)
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptFrameError(f"cannot decode {path}: {exc}") from exc
    if mode == "L":
        arr = arr[:, :, np.newaxis]
    elif mode != "RGB":
        raise CorruptFrameError(f"{path}: expected 8-bit L or RGB PNG, got mode {mode}")
    h, w, c = arr.shape
    return DynamicImage(width=w, height=h, channels=c, pixels=arr.astype(np.uint8))
