"""
Unit tests for distances, Gram matrices, the median heuristic and grids
"""

import numpy as np
import pytest

from src.kernels.kernel_core import (
    BlockLayout,
    ScalingGrid,
    SampleMatrix,
    block_grams,
    gaussian_gram,
    median_heuristic,
    pairwise_sqdist,
    parse_grid,
    recommended_nu,
    scaling_grid,
)
from src.utils.errors import (
    DegenerateSampleError,
    InvalidInputError,
    InvalidLayoutError,
    InvalidParameterError,
    SampleTooSmallError,
)


# ============================================================================
# SAMPLES AND DISTANCES
# ============================================================================

def test_sample_rejects_single_row():
    with pytest.raises(SampleTooSmallError):
        SampleMatrix(np.array([[1.0, 2.0]]))


def test_sample_rejects_nan():
    with pytest.raises(InvalidInputError):
        SampleMatrix(np.array([[0.0], [np.nan]]))


def test_sample_promotes_vectors_to_columns():
    sample = SampleMatrix(np.array([1.0, 2.0, 3.0]))
    assert (sample.n, sample.d) == (3, 1)


def test_identical_points_have_zero_distance():
    D = pairwise_sqdist(np.array([[0.0], [0.0]]))
    np.testing.assert_array_equal(D.values, np.zeros((2, 2)))


def test_distances_on_the_line():
    D = pairwise_sqdist(np.array([[0.0], [1.0], [3.0]])).values
    assert sorted([D[0, 1], D[0, 2], D[1, 2]]) == [1.0, 4.0, 9.0]


def test_rescaled_distance_divides_by_dimension():
    D = pairwise_sqdist(np.array([[0.0, 0.0], [1.0, 1.0]]), rescale_by_dim=True)
    assert D.values[0, 1] == pytest.approx(1.0)
    assert D.rescaled_by_dim


# ============================================================================
# GRAM MATRICES
# ============================================================================

def test_zero_distances_give_all_ones_gram():
    G = gaussian_gram(np.zeros((3, 3)), 2.0)
    np.testing.assert_array_equal(G.values, np.ones((3, 3)))


def test_unit_distance_gram_value():
    D = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert gaussian_gram(D, 1.0).values[0, 1] == pytest.approx(np.exp(-1.0))


def test_gram_at_double_nu_is_elementwise_square(rng):
    D = pairwise_sqdist(rng.standard_normal((6, 2)))
    np.testing.assert_allclose(gaussian_gram(D, 1.4).squared().values, gaussian_gram(D, 2.8).values, rtol=1e-12)


def test_gram_properties(rng):
    G = gaussian_gram(pairwise_sqdist(rng.standard_normal((8, 3))), 0.7).values
    np.testing.assert_allclose(G, G.T)
    np.testing.assert_array_equal(np.diag(G), np.ones(8))
    assert np.all((G > 0) & (G <= 1))


@pytest.mark.parametrize("nu", [0.0, -1.0, np.inf])
def test_gram_rejects_invalid_nu(nu):
    with pytest.raises(InvalidParameterError):
        gaussian_gram(np.zeros((2, 2)), nu)


# ============================================================================
# MEDIAN HEURISTIC
# ============================================================================

def test_median_heuristic_on_three_points():
    D = pairwise_sqdist(np.array([[0.0], [1.0], [3.0]]))
    assert median_heuristic(D) == pytest.approx(0.25)


def test_median_heuristic_single_pair():
    assert median_heuristic(pairwise_sqdist(np.array([[0.0], [1.0]]))) == pytest.approx(1.0)


def test_median_heuristic_scales_inversely(rng):
    X = rng.standard_normal((10, 2))
    c = 3.0
    assert median_heuristic(pairwise_sqdist(c * X)) == pytest.approx(median_heuristic(pairwise_sqdist(X)) / c ** 2)


def test_median_heuristic_constant_sample_is_degenerate():
    with pytest.raises(DegenerateSampleError):
        median_heuristic(pairwise_sqdist(np.ones((5, 2))))


def test_median_heuristic_falls_back_to_positive_distances():
    # 6 of the 10 pairs coincide
    X = np.array([[0.0], [0.0], [0.0], [0.0], [2.0]])
    assert median_heuristic(pairwise_sqdist(X)) == pytest.approx(0.25)


# ============================================================================
# BLOCK GRAMS
# ============================================================================

def test_block_grams_multiply_to_full_gram():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    grams = block_grams(X, BlockLayout((1, 1)), 1.0)
    assert grams[0].values[0, 1] == pytest.approx(np.exp(-1.0))
    assert grams[1].values[0, 1] == pytest.approx(np.exp(-1.0))
    full = gaussian_gram(pairwise_sqdist(X), 1.0).values
    np.testing.assert_allclose(grams[0].values * grams[1].values, full)


def test_block_grams_with_rescaling_share_the_full_divisor(rng):
    X = rng.standard_normal((6, 5))
    grams = block_grams(X, BlockLayout((2, 3)), 0.8, rescale_by_dim=True)
    full = gaussian_gram(pairwise_sqdist(X, rescale_by_dim=True), 0.8).values
    np.testing.assert_allclose(grams[0].values * grams[1].values, full, rtol=1e-12)


def test_constant_sample_gives_all_ones_block_grams():
    for G in block_grams(np.ones((4, 3)), BlockLayout.unit(3), 2.0):
        np.testing.assert_array_equal(G.values, np.ones((4, 4)))


def test_layout_must_match_dimension():
    with pytest.raises(InvalidLayoutError):
        block_grams(np.zeros((4, 3)), BlockLayout((1, 1)), 1.0)


@pytest.mark.parametrize("text", ["1", "1,0", "a,b"])
def test_layout_parse_errors(text):
    with pytest.raises(InvalidLayoutError):
        BlockLayout.parse(text)


def test_layout_parse():
    layout = BlockLayout.parse("1, 2,3")
    assert layout.widths == (1, 2, 3)
    assert (layout.k, layout.d) == (3, 6)


# ============================================================================
# SCALING GRIDS
# ============================================================================

def test_single_point_grid_is_upper_end():
    assert scaling_grid(100, 2, 1).values == (100.0,)


def test_two_point_grid_is_the_endpoints():
    assert scaling_grid(100, 2, 2).values == pytest.approx((1.0, 100.0))


def test_three_point_grid_is_log_spaced():
    assert scaling_grid(64, 4, 3).values == pytest.approx((1.0, np.sqrt(8.0), 8.0))


def test_upper_floor_widens_a_high_dimensional_grid():
    assert scaling_grid(600, 1000, 20).hi == pytest.approx(600 ** 0.002)
    grid = scaling_grid(600, 1000, 20, min_upper=20.0)
    assert grid.values[0] == 1.0 and grid.values[-1] == 20.0
    assert len(set(grid.values)) == 20
    assert np.allclose(np.diff(np.log(grid.values)), np.log(20.0) / 19)


def test_upper_floor_never_shrinks_the_grid():
    assert scaling_grid(100, 2, 2, min_upper=20.0).values == pytest.approx((1.0, 100.0))
    with pytest.raises(InvalidParameterError):
        scaling_grid(100, 2, 2, min_upper=0.5)


def test_grid_requires_points():
    with pytest.raises(InvalidParameterError):
        scaling_grid(64, 4, 0)


def test_grid_must_increase():
    with pytest.raises(InvalidParameterError):
        ScalingGrid((1.0, 1.0))


def test_parse_grid():
    grid = parse_grid("1:100:3")
    assert grid.values == pytest.approx((1.0, 10.0, 100.0))
    with pytest.raises(InvalidParameterError):
        parse_grid("1:100")


def test_refined_grid_merges_points():
    grid = scaling_grid(100, 2, 2).refined([10.0])
    assert grid.values == pytest.approx((1.0, 10.0, 100.0))


def test_recommended_nu():
    assert recommended_nu(1000, 1, 2.0) == pytest.approx(1000 ** (4.0 / 9.0))
    with pytest.raises(InvalidParameterError):
        recommended_nu(100, 1, 0.0)
