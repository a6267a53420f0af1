"""
Unit tests for the two-sample estimators and test
"""

import numpy as np
import pytest

from src.calibration.resampling import PooledShuffle, ResamplePlan, draw_replicate
from src.hypothesis.hom import HomProblem, TwoSample, hom_gamma2, hom_stat, hom_test, hom_variance
from src.hypothesis.reports import Calibration
from src.utils.errors import InvalidInputError
from tests.oracles import brute_hom_gamma2, brute_ustat_moments


def test_gamma2_on_hand_example():
    X = Y = np.array([[0.0], [1.0]])
    assert hom_gamma2(X, Y, 1.0) == pytest.approx(np.exp(-1.0) - 1.0, rel=1e-12)


def test_gamma2_of_equal_constant_samples_is_zero():
    assert hom_gamma2(np.ones((3, 2)), np.ones((4, 2)), 1.0) == pytest.approx(0.0)


def test_gamma2_matches_triple_sum(rng):
    for n, m in ((3, 5), (6, 6), (8, 4)):
        X, Y = rng.standard_normal((n, 2)), rng.standard_normal((m, 2)) + 0.3
        assert hom_gamma2(X, Y, 0.7) == pytest.approx(brute_hom_gamma2(X, Y, 0.7), rel=1e-12)


def test_gamma2_is_symmetric_for_equal_sizes(rng):
    X, Y = rng.standard_normal((6, 1)), rng.standard_normal((6, 1))
    assert hom_gamma2(X, Y, 1.0) == pytest.approx(hom_gamma2(Y, X, 1.0))


def test_variance_of_constant_pool_is_floored():
    s_tilde2, s_hat2 = hom_variance(np.zeros((6, 1)), 1.0, floor_n=3)
    assert s_tilde2 == pytest.approx(0.0, abs=1e-12)
    assert s_hat2 == pytest.approx(1.0 / 9)


def test_variance_matches_enumeration(rng):
    Z = rng.standard_normal((8, 2))
    D = np.sum((Z[:, None] - Z[None]) ** 2, axis=2)
    _, u_pair_sq, u_triple, u_quad = brute_ustat_moments(np.exp(-0.5 * D))
    assert hom_variance(Z, 0.5)[0] == pytest.approx(u_pair_sq - 2 * u_triple + u_quad, rel=1e-10)


def test_statistic_composition():
    X = Y = np.array([[0.0], [1.0]])
    pooled = np.vstack([X, Y])
    _, s_hat2 = hom_variance(pooled, 1.0, floor_n=2)
    expected = 2 * 2 / (np.sqrt(2) * 4) * (np.exp(-1.0) - 1.0) / np.sqrt(s_hat2)
    assert hom_stat(X, Y, 1.0) == pytest.approx(expected, rel=1e-12)


def test_zero_gamma2_gives_zero_statistic():
    assert hom_stat(np.ones((3, 1)), np.ones((3, 1)), 1.0) == pytest.approx(0.0, abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        TwoSample(np.zeros((3, 1)), np.zeros((3, 2)))


def test_permuted_statistic_equals_recomputation(rng):
    X, Y = rng.standard_normal((5, 2)), rng.standard_normal((7, 2)) + 0.5
    problem = HomProblem(X, Y)
    plan = ResamplePlan(PooledShuffle(5, 7), B=3, seed=11)
    pooled = np.vstack([X, Y])
    for b in range(3):
        perm = draw_replicate(plan, b)
        fast = problem.evaluate([0.8], perm)
        Xp, Yp = pooled[perm[:5]], pooled[perm[5:]]
        assert fast.gamma2[0] == pytest.approx(hom_gamma2(Xp, Yp, 0.8), rel=1e-10)


def test_v_statistic_exceeds_zero(rng):
    X, Y = rng.standard_normal((10, 1)), rng.standard_normal((12, 1))
    assert HomProblem(X, Y).gamma2_v(1.0) >= 0.0


def test_identical_points_give_pvalue_one():
    X = Y = np.zeros((5, 1))
    report = hom_test(X, Y, 1.0, B=99, seed=3, n_jobs=1)
    assert report.p_value == pytest.approx(1.0)
    assert not report.reject


def test_separated_samples_get_smallest_pvalue(rng):
    X, Y = rng.standard_normal((40, 1)), rng.standard_normal((40, 1)) + 4.0
    report = hom_test(X, Y, 1.0, B=99, seed=5, n_jobs=1)
    assert report.p_value == pytest.approx(0.01)
    assert report.m == 40


def test_asymptotic_calibration(rng):
    X, Y = rng.standard_normal((20, 1)), rng.standard_normal((20, 1))
    report = hom_test(X, Y, 1.0, calibration='asymptotic')
    assert report.calibration is Calibration.ASYMPTOTIC_NORMAL
    assert report.B is None and report.seed is None


def test_parallel_and_serial_pvalues_agree(rng):
    X, Y = rng.standard_normal((15, 1)), rng.standard_normal((15, 1)) + 0.4
    serial = hom_test(X, Y, 1.0, B=40, seed=9, n_jobs=1)
    parallel = hom_test(X, Y, 1.0, B=40, seed=9, n_jobs=2)
    assert serial.p_value == parallel.p_value
