"""Rank pooling: encode a feature sequence as the weights of a linear ranker.

The pooled descriptor is the minimizer of

    J(w) = 0.5 * ||w||^2 + lam * sum_{i > j} max(0, 1 - w . (d_i - d_j))

where d_t is (optionally) the running mean of the raw features up to t,
so that w scores later frames higher than earlier ones.  The minimizer is
found exactly with deterministic coordinate descent on the dual box QP,
which only needs the k x k Gram matrix of the (smoothed) features; the
stopping rule is a primal-dual gap below ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatchError, NonFiniteFeatureError

FORWARD = "forward"
BACKWARD = "backward"


@dataclass
class RankPoolParams:
    """Solver settings for one rank pooling problem.

    lam is the hinge weight (larger values enforce the frame order harder),
    max_iters caps coordinate descent epochs, tol is the duality gap at
    which iteration stops, and use_smoothing selects running-mean features.
    """

    lam: float = 1.0
    max_iters: int = 4000
    tol: float = 1e-6
    use_smoothing: bool = True

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class HierarchyConfig:
    """Shape of the pooling pyramid: sliding windows then one final pool."""

    layers: int = 2
    window: int = 3
    stride: int = 1
    direction: str = FORWARD

    def __post_init__(self) -> None:
        if self.layers < 1:
            raise ValueError("layers must be at least 1")
        if self.window < 2:
            raise ValueError("window must be at least 2")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        if self.direction not in (FORWARD, BACKWARD):
            raise ValueError(f"direction must be {FORWARD!r} or {BACKWARD!r}")


def as_feature_matrix(features) -> np.ndarray:
    """Validate and return features as a (k, D) float64 matrix."""
    if isinstance(features, np.ndarray) and features.ndim == 2:
        mat = features.astype(np.float64, copy=False)
    else:
        rows = [np.asarray(f, dtype=np.float64).ravel() for f in features]
        if not rows:
            raise ValueError("feature sequence is empty")
        dim = rows[0].size
        for i, r in enumerate(rows):
            if r.size != dim:
                raise DimensionMismatchError(
                    f"feature {i} has dimension {r.size}, expected {dim}"
                )
        mat = np.stack(rows)
    if mat.shape[0] < 1 or mat.shape[1] < 1:
        raise ValueError(f"feature matrix must be (k>=1, D>=1), got {mat.shape}")
    if not np.isfinite(mat).all():
        raise NonFiniteFeatureError("features contain NaN or infinity")
    return mat


def smoothed_features(features) -> np.ndarray:
    """Running mean over time: row t is the mean of rows 0..t."""
    mat = as_feature_matrix(features)
    counts = np.arange(1, mat.shape[0] + 1, dtype=np.float64)
    return np.cumsum(mat, axis=0) / counts[:, np.newaxis]


def _solve_dual(gram: np.ndarray, lam: float, max_iters: int, tol: float):
    """Coordinate descent on the dual; returns frame coefficients c with w = X^T c."""
    k = gram.shape[0]
    pairs = [(i, j) for i in range(k) for j in range(i)]
    alpha = np.zeros(len(pairs))
    c = np.zeros(k)
    s = np.zeros(k)  # s = gram @ c, i.e. per-frame scores w . d_t
    qpp = np.array([gram[i, i] + gram[j, j] - 2.0 * gram[i, j] for i, j in pairs])
    lam = float(lam)
    for _ in range(max_iters):
        for p, (i, j) in enumerate(pairs):
            margin = s[i] - s[j]
            if qpp[p] <= 0.0:
                # degenerate pair (d_i == d_j): hinge is constant, the
                # multiplier saturates without moving w
                alpha[p] = lam if margin < 1.0 else alpha[p]
                continue
            new = min(max(alpha[p] - (margin - 1.0) / qpp[p], 0.0), lam)
            delta = new - alpha[p]
            if delta != 0.0:
                alpha[p] = new
                c[i] += delta
                c[j] -= delta
                s += delta * (gram[:, i] - gram[:, j])
        norm_sq = float(c @ s)
        margins = np.array([s[i] - s[j] for i, j in pairs])
        primal = 0.5 * norm_sq + lam * float(np.maximum(0.0, 1.0 - margins).sum())
        dual = float(alpha.sum()) - 0.5 * norm_sq
        if primal - dual <= tol:
            break
    return c


def rank_pool(features, params: RankPoolParams | None = None) -> np.ndarray:
    """Pool a (k, D) feature sequence into one (D,) ranking weight vector."""
    params = params or RankPoolParams()
    mat = as_feature_matrix(features)
    if params.use_smoothing:
        mat = smoothed_features(mat)
    if mat.shape[0] == 1:
        return np.zeros(mat.shape[1])
    gram = mat @ mat.T
    c = _solve_dual(gram, params.lam, params.max_iters, params.tol)
    return mat.T @ c


def rank_pool_bidirectional(features, params: RankPoolParams | None = None):
    """Pool forward and backward; backward runs on the reversed raw sequence."""
    mat = as_feature_matrix(features)
    forward = rank_pool(mat, params)
    backward = rank_pool(mat[::-1], params)
    return forward, backward


def rank_pool_layer(
    features, window: int, stride: int, params: RankPoolParams | None = None
) -> np.ndarray:
    """Pool sliding windows of a sequence into a shorter sequence.

    Windows start at frames 1, 1+stride, 1+2*stride, ... and must fit
    entirely; an input shorter than the window collapses to one pooled
    vector over the whole sequence.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    mat = as_feature_matrix(features)
    n = mat.shape[0]
    if n < window:
        return rank_pool(mat, params)[np.newaxis, :]
    starts = range(0, n - window + 1, stride)
    return np.stack([rank_pool(mat[s : s + window], params) for s in starts])


def hierarchical_rank_pool(
    features,
    config: HierarchyConfig | None = None,
    params: RankPoolParams | None = None,
) -> np.ndarray:
    """Stack pooling layers and collapse the last one into a single vector.

    With ``config.direction == "backward"`` the input sequence is reversed
    before the first layer; smoothing (when enabled in ``params``) is
    re-applied inside every pooled window of every layer.
    """
    config = config or HierarchyConfig()
    mat = as_feature_matrix(features)
    if config.direction == BACKWARD:
        mat = mat[::-1]
    for _ in range(config.layers - 1):
        mat = rank_pool_layer(mat, config.window, config.stride, params)
    return rank_pool(mat, params)


def hierarchical_bidirectional(
    features,
    config: HierarchyConfig | None = None,
    params: RankPoolParams | None = None,
):
    """Forward and backward hierarchical pooling of one feature sequence."""
    config = config or HierarchyConfig()
    fwd = hierarchical_rank_pool(features, replace(config, direction=FORWARD), params)
    bwd = hierarchical_rank_pool(features, replace(config, direction=BACKWARD), params)
    return fwd, bwd
