"""Per-frame depth representations and the pooled dynamic image builders.

Three image families are produced per segment, each pooled forward and
backward in time:

* ddi   -- raw depth pixels pooled directly.
* ddni  -- surface normals after histogram-based background removal.
* ddmni -- surface normals restricted to moving pixels found by a
  per-pixel Gaussian mixture background model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .depth_io import DepthFrame, DepthSequence, DynamicImage, quantize_field
from .errors import NoForegroundError, TooFewFramesError
from .rank_pooling import HierarchyConfig, RankPoolParams, hierarchical_bidirectional

# Fresh mixture components start wide so a single sample does not dominate,
# and variances never collapse below the floor.
GMM_INITIAL_VARIANCE = 900.0
GMM_NEW_WEIGHT = 0.05
GMM_VARIANCE_FLOOR = 4.0


@dataclass
class BackgroundParams:
    """Settings for histogram-based far-plane removal."""

    hist_bins: int = 256
    tolerance: float = 50.0      # depth margin kept in front of the far peak
    min_peak_mass: float = 0.01  # fraction of pixels a bin needs to count as a peak

    def __post_init__(self) -> None:
        if self.hist_bins < 8:
            raise ValueError("hist_bins must be at least 8")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        if not 0 < self.min_peak_mass < 1:
            raise ValueError("min_peak_mass must lie in (0, 1)")


@dataclass
class GmmParams:
    """Per-pixel adaptive mixture settings for moving-pixel detection.

    The update is fully deterministic; ``seed`` is carried so stochastic
    initializers stay configurable, the built-in one ignores it.
    """

    components: int = 3
    learning_rate: float = 0.01
    mahalanobis_threshold: float = 6.25  # squared normalized distance (2.5 sigma)
    background_ratio: float = 0.7
    seed: int = 0

    def __post_init__(self) -> None:
        if self.components < 1:
            raise ValueError("components must be at least 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.mahalanobis_threshold <= 0:
            raise ValueError("mahalanobis_threshold must be positive")
        if not 0 < self.background_ratio <= 1:
            raise ValueError("background_ratio must lie in (0, 1]")


@dataclass
class NormalField:
    """Per-pixel unit surface normals; invalid pixels carry (0, 0, 0)."""

    width: int
    height: int
    nx: np.ndarray = field(repr=False)
    ny: np.ndarray = field(repr=False)
    nz: np.ndarray = field(repr=False)


@dataclass
class DynamicImageSet:
    """The pooled images of one segment, keyed as <rep>_<direction>."""

    ddi_fwd: DynamicImage | None = None
    ddi_bwd: DynamicImage | None = None
    ddni_fwd: DynamicImage | None = None
    ddni_bwd: DynamicImage | None = None
    ddmni_fwd: DynamicImage | None = None
    ddmni_bwd: DynamicImage | None = None


def compute_normals(frame: DepthFrame) -> NormalField:
    """Estimate surface normals with finite differences.

    Interior pixels use central differences, border pixels one-sided ones.
    The (unnormalized) normal is (-dz/dx, -dz/dy, 1); pixels with depth 0
    or any 4-neighbor of depth 0 are marked invalid as (0, 0, 0).
    """
    z = frame.values.astype(np.float64)
    zy, zx = np.gradient(z)
    nx, ny, nz = -zx, -zy, np.ones_like(z)
    norm = np.sqrt(nx * nx + ny * ny + nz * nz)
    nx, ny, nz = nx / norm, ny / norm, nz / norm

    hole = z == 0
    invalid = hole.copy()
    invalid[1:, :] |= hole[:-1, :]
    invalid[:-1, :] |= hole[1:, :]
    invalid[:, 1:] |= hole[:, :-1]
    invalid[:, :-1] |= hole[:, 1:]
    for comp in (nx, ny, nz):
        comp[invalid] = 0.0
    return NormalField(width=frame.width, height=frame.height, nx=nx, ny=ny, nz=nz)


def remove_background(seq: DepthSequence, params: BackgroundParams | None = None) -> DepthSequence:
    """Zero out pixels behind the far peak of the sequence depth histogram.

    The histogram runs over all nonzero pixels of all frames; the cut is
    the lower edge of the last local-maximum bin with mass >= min_peak_mass,
    minus the tolerance.  When no bin qualifies nothing is removed.
    """
    params = params or BackgroundParams()
    values = seq.frames[seq.frames > 0]
    if values.size == 0:
        raise NoForegroundError("sequence has no nonzero pixels")
    lo = float(values.min())
    hi = float(values.max())
    span = (lo, hi) if hi > lo else (lo, lo + 1.0)
    counts, edges = np.histogram(values, bins=params.hist_bins, range=span)

    mass = counts / values.size
    padded = np.concatenate(([-1.0], counts.astype(np.float64), [-1.0]))
    local_max = (padded[1:-1] >= padded[:-2]) & (padded[1:-1] >= padded[2:])
    peaks = np.nonzero(local_max & (mass >= params.min_peak_mass))[0]
    if peaks.size == 0:
        return DepthSequence(seq.frames.copy(), seq.frame_rate, seq.source_id)

    threshold = float(edges[peaks[-1]]) - params.tolerance
    frames = seq.frames.copy()
    frames[frames.astype(np.float64) > threshold] = 0
    if not (frames > 0).any():
        raise NoForegroundError("background removal left no foreground pixel")
    return DepthSequence(frames, seq.frame_rate, seq.source_id)


def gmm_foreground(seq: DepthSequence, params: GmmParams | None = None) -> list[np.ndarray]:
    """Per-frame boolean masks of moving pixels from an adaptive mixture.

    Each pixel keeps up to ``components`` Gaussians over its depth values.
    A frame's mask is decided against the model learned from the frames
    before it, then the model absorbs the frame; the first frame seeds the
    model and is entirely background.
    """
    params = params or GmmParams()
    if len(seq) < 2:
        raise TooFewFramesError("motion detection needs at least 2 frames")
    n_pix = seq.height * seq.width
    k = params.components
    lr = params.learning_rate

    weight = np.zeros((n_pix, k))
    mean = np.zeros((n_pix, k))
    var = np.full((n_pix, k), GMM_INITIAL_VARIANCE)
    active = np.zeros((n_pix, k), dtype=bool)

    weight[:, 0] = 1.0
    mean[:, 0] = seq.frames[0].astype(np.float64).ravel()
    active[:, 0] = True

    masks = [np.zeros((seq.height, seq.width), dtype=bool)]
    rows = np.arange(n_pix)
    for t in range(1, len(seq)):
        x = seq.frames[t].astype(np.float64).ravel()

        fitness = np.where(active, weight / np.sqrt(var), -np.inf)
        order = np.argsort(-fitness, axis=1, kind="stable")
        dist_sq = (x[:, np.newaxis] - mean) ** 2 / var
        matches = active & (dist_sq <= params.mahalanobis_threshold)

        ranked_matches = matches[rows[:, np.newaxis], order]
        any_match = ranked_matches.any(axis=1)
        match_rank = np.argmax(ranked_matches, axis=1)
        matched_comp = order[rows, match_rank]

        # background = best-fitness components up to the one whose
        # cumulative weight first reaches the ratio
        ranked_weight = weight[rows[:, np.newaxis], order]
        cum = np.cumsum(ranked_weight, axis=1)
        bg_rank = np.argmax(cum >= params.background_ratio, axis=1)
        foreground = ~any_match | (match_rank > bg_rank)
        masks.append(foreground.reshape(seq.height, seq.width))

        # absorb the frame: decay all weights, reinforce the matched component
        weight[active] *= 1.0 - lr
        m_rows = rows[any_match]
        m_cols = matched_comp[any_match]
        weight[m_rows, m_cols] += lr
        delta = x[any_match] - mean[m_rows, m_cols]
        mean[m_rows, m_cols] += lr * delta
        resid = x[any_match] - mean[m_rows, m_cols]
        var[m_rows, m_cols] += lr * (resid**2 - var[m_rows, m_cols])
        np.maximum(var, GMM_VARIANCE_FLOOR, out=var)

        # unmatched pixels claim a free slot, or evict the worst component
        new_rows = rows[~any_match]
        if new_rows.size:
            has_free = ~active[new_rows].all(axis=1)
            free_col = np.argmin(active[new_rows], axis=1)
            worst_col = order[new_rows, active[new_rows].sum(axis=1) - 1]
            col = np.where(has_free, free_col, worst_col)
            active[new_rows, col] = True
            weight[new_rows, col] = GMM_NEW_WEIGHT
            mean[new_rows, col] = x[~any_match]
            var[new_rows, col] = GMM_INITIAL_VARIANCE
        weight[~active] = 0.0
        weight /= weight.sum(axis=1, keepdims=True)
    return masks


def _normal_features(frames: np.ndarray, width: int, height: int) -> np.ndarray:
    feats = []
    for t in range(frames.shape[0]):
        nf = compute_normals(DepthFrame(width, height, frames[t]))
        feats.append(np.concatenate([nf.nx.ravel(), nf.ny.ravel(), nf.nz.ravel()]))
    return np.stack(feats)


def _pool_to_images(
    features: np.ndarray,
    shape: tuple,
    config: HierarchyConfig,
    params: RankPoolParams,
) -> tuple[DynamicImage, DynamicImage]:
    fwd, bwd = hierarchical_bidirectional(features, config, params)
    return quantize_field(fwd.reshape(shape)), quantize_field(bwd.reshape(shape))


def _as_hwc(flat: np.ndarray, height: int, width: int) -> np.ndarray:
    return flat.reshape(3, height, width).transpose(1, 2, 0)


def build_ddi(
    seq: DepthSequence,
    config: HierarchyConfig | None = None,
    params: RankPoolParams | None = None,
) -> tuple[DynamicImage, DynamicImage]:
    """Pool raw depth pixels of a segment into forward/backward images."""
    config = config or HierarchyConfig()
    params = params or RankPoolParams()
    features = seq.frames.reshape(len(seq), -1).astype(np.float64)
    return _pool_to_images(features, (seq.height, seq.width), config, params)


def build_ddni(
    seq: DepthSequence,
    background: BackgroundParams | None = None,
    config: HierarchyConfig | None = None,
    params: RankPoolParams | None = None,
) -> tuple[DynamicImage, DynamicImage]:
    """Pool background-removed surface normals into forward/backward images."""
    config = config or HierarchyConfig()
    params = params or RankPoolParams()
    cleaned = remove_background(seq, background)
    features = _normal_features(cleaned.frames, seq.width, seq.height)
    fwd, bwd = hierarchical_bidirectional(features, config, params)
    return (
        quantize_field(_as_hwc(fwd, seq.height, seq.width)),
        quantize_field(_as_hwc(bwd, seq.height, seq.width)),
    )


def _ddmni_field(
    seq: DepthSequence, gmm: GmmParams, config: HierarchyConfig, params: RankPoolParams
) -> np.ndarray:
    from .rank_pooling import FORWARD, hierarchical_rank_pool
    from dataclasses import replace

    masks = gmm_foreground(seq, gmm)
    feats = []
    for t in range(len(seq)):
        nf = compute_normals(DepthFrame(seq.width, seq.height, seq.frames[t]))
        m = masks[t]
        feats.append(
            np.concatenate(
                [
                    np.where(m, nf.nx, 0.0).ravel(),
                    np.where(m, nf.ny, 0.0).ravel(),
                    np.where(m, nf.nz, 0.0).ravel(),
                ]
            )
        )
    return hierarchical_rank_pool(np.stack(feats), replace(config, direction=FORWARD), params)


def build_ddmni(
    seq: DepthSequence,
    gmm: GmmParams | None = None,
    config: HierarchyConfig | None = None,
    params: RankPoolParams | None = None,
) -> tuple[DynamicImage, DynamicImage]:
    """Pool motion-masked surface normals into forward/backward images.

    The mixture model is causal, so the backward image reruns it on the
    time-reversed segment rather than reusing the forward masks.
    """
    gmm = gmm or GmmParams()
    config = config or HierarchyConfig()
    params = params or RankPoolParams()
    if len(seq) < 2:
        raise TooFewFramesError("moving-pixel pooling needs at least 2 frames")
    fwd = _ddmni_field(seq, gmm, config, params)
    reversed_seq = DepthSequence(seq.frames[::-1].copy(), seq.frame_rate, seq.source_id)
    bwd = _ddmni_field(reversed_seq, gmm, config, params)
    return (
        quantize_field(_as_hwc(fwd, seq.height, seq.width)),
        quantize_field(_as_hwc(bwd, seq.height, seq.width)),
    )
