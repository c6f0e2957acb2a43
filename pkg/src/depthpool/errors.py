"""Exception hierarchy for the depthpool pipeline.

Every error raised on a data or validation path derives from
:class:`DepthPoolError` so callers (and the CLI) can separate bad input
from genuine bugs.
"""


class DepthPoolError(Exception):
    """Base class for all pipeline errors."""


class MissingPathError(DepthPoolError):
    """A required file or directory does not exist."""


class CorruptFrameError(DepthPoolError):
    """A frame could not be decoded or has the wrong type/shape."""


class EmptySequenceError(DepthPoolError):
    """A depth sequence contains no frames."""


class NonFiniteFieldError(DepthPoolError):
    """A real-valued field contains NaN or infinity."""


class IoFailureError(DepthPoolError):
    """An image or file write failed."""


class FrameOutOfRangeError(DepthPoolError):
    """A 1-based frame index lies outside the sequence."""


class NoTrainingDataError(DepthPoolError):
    """Segmentation model fitting received no labeled segments."""


class DimensionMismatchError(DepthPoolError):
    """Feature vectors in one sequence differ in dimension."""


class NonFiniteFeatureError(DepthPoolError):
    """A feature vector contains NaN or infinity."""


class NoForegroundError(DepthPoolError):
    """Background removal left no nonzero pixel in any frame."""


class TooFewFramesError(DepthPoolError):
    """An operation needs more frames than the segment provides."""


class ZeroVectorError(DepthPoolError):
    """A score vector sums to zero and cannot be normalized."""


class LengthMismatchError(DepthPoolError):
    """Two per-frame label arrays differ in length."""


class EmptyInputError(DepthPoolError):
    """A metric was asked to average over an empty collection."""


class MissingClassExamplesError(DepthPoolError):
    """Baseline training lacks examples for some class/channel."""


class MissingScoresError(DepthPoolError):
    """Classification found no scores for an enabled channel."""


class ConfigError(DepthPoolError):
    """A configuration file could not be parsed or holds invalid values."""
