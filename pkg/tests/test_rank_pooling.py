"""Ranking solver behavior against an independent grid-search oracle.

The oracle below never calls the library solver: it evaluates the pooling
objective on a dense grid over a box guaranteed to contain the optimum,
then refines around the best grid point.  Agreement of objective values
(not weight vectors, which can tie) is what certifies the solver.
"""

import numpy as np
import pytest

from depthpool.errors import DimensionMismatchError, NonFiniteFeatureError
from depthpool.rank_pooling import (
    BACKWARD,
    FORWARD,
    HierarchyConfig,
    RankPoolParams,
    hierarchical_bidirectional,
    hierarchical_rank_pool,
    rank_pool,
    rank_pool_bidirectional,
    rank_pool_layer,
    smoothed_features,
)

# ---------------------------------------------------------------------------
# oracle helpers (deliberately brute force)


def pair_differences(mat):
    """All d_i - d_j rows for i > j, in the same lexicographic pair order."""
    k = mat.shape[0]
    rows = [mat[i] - mat[j] for i in range(k) for j in range(i)]
    return np.asarray(rows) if rows else np.zeros((0, mat.shape[1]))


def hinge_objective(w, diffs, lam):
    margins = diffs @ w
    return 0.5 * float(w @ w) + lam * float(np.maximum(0.0, 1.0 - margins).sum())


def grid_optimum(diffs, lam, dim, steps=(0.05, 0.005, 0.001)):
    """Best objective over staged dense grids.

    The optimum satisfies 0.5*|w|^2 <= objective(0) = lam * P, which
    brackets the search box.  After each stage the box shrinks to a
    radius derived from 1-strong convexity of the objective: a grid
    point within g of the optimum in every coordinate is within
    G*g*sqrt(dim)/2 in objective, hence within sqrt(2*that) in distance.
    """
    n_pairs = diffs.shape[0]
    if n_pairs == 0:
        return np.zeros(dim), 0.0
    box = float(np.sqrt(2.0 * lam * n_pairs)) + 1e-3
    lipschitz = box + lam * float(np.linalg.norm(diffs, axis=1).sum())

    center = np.zeros(dim)
    half = box
    best_w, best_val = center, hinge_objective(center, diffs, lam)
    for step in steps:
        axes = [
            np.arange(center[d] - half, center[d] + half + step / 2, step)
            for d in range(dim)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        candidates = np.stack([g.ravel() for g in grids], axis=1)
        for lo in range(0, candidates.shape[0], 500000):
            chunk = candidates[lo : lo + 500000]
            margins = chunk @ diffs.T
            vals = 0.5 * (chunk**2).sum(axis=1) + lam * np.maximum(
                0.0, 1.0 - margins
            ).sum(axis=1)
            i = int(np.argmin(vals))
            if vals[i] < best_val:
                best_val = float(vals[i])
                best_w = chunk[i].copy()
        center = best_w
        gap_bound = lipschitz * step * np.sqrt(dim) / 2
        half = float(np.sqrt(2.0 * gap_bound)) + step
    return best_w, best_val


RAW = RankPoolParams(use_smoothing=False)


# ---------------------------------------------------------------------------


class TestSmoothing:
    def test_running_means(self):
        out = smoothed_features(np.array([[2.0], [4.0], [6.0]]))
        np.testing.assert_array_equal(out, [[2.0], [3.0], [4.0]])

    def test_constant_sequence_unchanged(self):
        v = np.array([[1.5, -2.0]] * 4)
        np.testing.assert_allclose(smoothed_features(v), v)

    def test_single_frame_identity(self):
        v = np.array([[3.0, 7.0]])
        np.testing.assert_array_equal(smoothed_features(v), v)


class TestRankPool:
    def test_constant_sequence_gives_zero(self):
        w = rank_pool(np.array([[2.0, 5.0]] * 3))
        np.testing.assert_array_equal(w, np.zeros(2))

    def test_single_frame_gives_zero(self):
        w = rank_pool(np.array([[1.0, 2.0, 3.0]]))
        np.testing.assert_array_equal(w, np.zeros(3))

    def test_increasing_scalar_matches_fine_grid(self):
        """1-D <1,2,3> at high lambda: positive weight, grid-verified."""
        feats = np.array([[1.0], [2.0], [3.0]])
        params = RankPoolParams(lam=10.0, use_smoothing=False)
        w = rank_pool(feats, params)
        assert w[0] > 0
        diffs = pair_differences(feats)
        grid = np.arange(-0.5, 15.0, 1e-4)
        vals = [hinge_objective(np.array([g]), diffs, 10.0) for g in grid]
        best = min(vals)
        assert abs(hinge_objective(w, diffs, 10.0) - best) <= 1e-4

    def test_inactive_coordinate_stays_zero(self):
        """A constant feature coordinate cannot influence the ranking."""
        feats = np.array([[1.0, 0.5], [2.0, 0.5], [3.0, 0.5]])
        params = RankPoolParams(lam=10.0, use_smoothing=False)
        w = rank_pool(feats, params)
        assert abs(w[1]) <= params.tol
        diffs = pair_differences(feats)
        _, best = grid_optimum(diffs, 10.0, 2)
        assert abs(hinge_objective(w, diffs, 10.0) - best) <= 1e-3

    def test_objective_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(42)
        for trial in range(10):
            dim = 1 + trial % 2
            k = int(rng.integers(2, 7))
            feats = rng.uniform(0.0, 0.5, size=(k, dim))
            w = rank_pool(feats, RAW)
            diffs = pair_differences(feats)
            _, best = grid_optimum(diffs, 1.0, dim)
            assert abs(hinge_objective(w, diffs, 1.0) - best) <= 1e-3

    def test_deterministic(self):
        rng = np.random.default_rng(43)
        feats = rng.normal(size=(5, 8))
        a = rank_pool(feats)
        b = rank_pool(feats.copy())
        np.testing.assert_array_equal(a, b)

    def test_component_order_survives_feature_scaling(self):
        """Scaling separable features by c > 0 keeps the weight ordering."""
        rng = np.random.default_rng(44)
        for _ in range(10):
            direction = rng.uniform(0.5, 1.5, size=3)
            feats = np.arange(1.0, 6.0)[:, np.newaxis] * direction
            base = rank_pool(feats, RankPoolParams(lam=10.0))
            for c in (0.5, 2.0):
                scaled = rank_pool(c * feats, RankPoolParams(lam=10.0))
                np.testing.assert_array_equal(np.argsort(base), np.argsort(scaled))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            rank_pool([np.array([1.0]), np.array([1.0, 2.0])])

    def test_non_finite_feature(self):
        with pytest.raises(NonFiniteFeatureError):
            rank_pool(np.array([[1.0], [np.nan]]))

    def test_param_validation(self):
        with pytest.raises(ValueError):
            RankPoolParams(lam=0.0)
        with pytest.raises(ValueError):
            RankPoolParams(tol=-1.0)
        with pytest.raises(ValueError):
            RankPoolParams(max_iters=0)


class TestBidirectional:
    def test_backward_equals_forward_of_reversed(self):
        rng = np.random.default_rng(45)
        for _ in range(5):
            feats = rng.normal(size=(6, 4))
            _, bwd = rank_pool_bidirectional(feats)
            np.testing.assert_array_equal(bwd, rank_pool(feats[::-1]))

    def test_palindrome_symmetry(self):
        feats = np.array([[1.0], [2.0], [3.0], [2.0], [1.0]])
        fwd, bwd = rank_pool_bidirectional(feats)
        np.testing.assert_array_equal(fwd, bwd)

    def test_ramp_directions(self):
        """The backward pool of a rising ramp encodes the falling dynamic."""
        up = np.arange(1.0, 6.0)[:, np.newaxis]
        params = RankPoolParams(lam=10.0)
        fwd, bwd = rank_pool_bidirectional(up, params)
        assert fwd[0] > 0
        # ranking the descending ramp needs a negative weight
        assert bwd[0] < 0
        np.testing.assert_array_equal(bwd, rank_pool(up[::-1], params))


class TestRankPoolLayer:
    def test_five_three_one_gives_three(self):
        rng = np.random.default_rng(46)
        out = rank_pool_layer(rng.normal(size=(5, 2)), 3, 1)
        assert out.shape == (3, 2)

    def test_single_full_window(self):
        rng = np.random.default_rng(47)
        feats = rng.normal(size=(3, 2))
        out = rank_pool_layer(feats, 3, 1)
        assert out.shape == (1, 2)
        np.testing.assert_array_equal(out[0], rank_pool(feats))

    def test_short_input_pools_whole_sequence(self):
        rng = np.random.default_rng(48)
        feats = rng.normal(size=(2, 3))
        out = rank_pool_layer(feats, 3, 1)
        assert out.shape == (1, 3)
        np.testing.assert_array_equal(out[0], rank_pool(feats))

    def test_windows_match_direct_pooling(self):
        rng = np.random.default_rng(49)
        feats = rng.normal(size=(7, 2))
        out = rank_pool_layer(feats, 3, 2)
        assert out.shape == (3, 2)
        for row, start in zip(out, (0, 2, 4)):
            np.testing.assert_array_equal(row, rank_pool(feats[start : start + 3]))

    def test_length_formula_sample(self):
        rng = np.random.default_rng(50)
        for n, window, stride in [(10, 4, 3), (9, 2, 5), (20, 20, 1), (6, 5, 2)]:
            out = rank_pool_layer(rng.normal(size=(n, 1)), window, stride, RAW)
            assert out.shape[0] == (n - window) // stride + 1


class TestHierarchical:
    def test_single_layer_equals_plain_pooling(self):
        rng = np.random.default_rng(51)
        feats = rng.normal(size=(6, 3))
        config = HierarchyConfig(layers=1)
        np.testing.assert_array_equal(
            hierarchical_rank_pool(feats, config), rank_pool(feats)
        )

    def test_two_layers_compose(self):
        rng = np.random.default_rng(52)
        feats = rng.normal(size=(5, 2))
        config = HierarchyConfig(layers=2, window=3, stride=1)
        manual = rank_pool(rank_pool_layer(feats, 3, 1))
        np.testing.assert_array_equal(hierarchical_rank_pool(feats, config), manual)

    def test_constant_input_collapses_to_zero(self):
        feats = np.array([[4.0, 4.0]] * 5)
        w = hierarchical_rank_pool(feats, HierarchyConfig(layers=2))
        np.testing.assert_array_equal(w, np.zeros(2))

    def test_backward_reverses_before_first_layer(self):
        rng = np.random.default_rng(53)
        feats = rng.normal(size=(6, 2))
        bwd = hierarchical_rank_pool(feats, HierarchyConfig(direction=BACKWARD))
        fwd_of_reversed = hierarchical_rank_pool(
            feats[::-1], HierarchyConfig(direction=FORWARD)
        )
        np.testing.assert_array_equal(bwd, fwd_of_reversed)

    def test_bidirectional_pair(self):
        rng = np.random.default_rng(54)
        feats = rng.normal(size=(5, 2))
        fwd, bwd = hierarchical_bidirectional(feats)
        np.testing.assert_array_equal(fwd, hierarchical_rank_pool(feats))
        np.testing.assert_array_equal(
            bwd, hierarchical_rank_pool(feats, HierarchyConfig(direction=BACKWARD))
        )

    def test_config_validation(self):
        with pytest.raises(ValueError):
            HierarchyConfig(layers=0)
        with pytest.raises(ValueError):
            HierarchyConfig(window=1)
        with pytest.raises(ValueError):
            HierarchyConfig(stride=0)
        with pytest.raises(ValueError):
            HierarchyConfig(direction="sideways")
