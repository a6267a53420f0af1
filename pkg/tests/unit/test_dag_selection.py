"""
Unit tests for DAG enumeration and residual-based selection
"""

import numpy as np
import pytest

from src.benchmark.dag_selection import (
    DagCandidate,
    dag_select,
    dag_selection_frequencies,
    enumerate_dags,
    is_acyclic,
    nadaraya_watson,
    nadaraya_watson_residuals,
    silverman_bandwidths,
    standardize,
)
from src.data.experiments import two_variable_anm_sample
from src.utils.errors import (
    DegenerateRegressorError,
    InvalidConfigError,
    InvalidParameterError,
    SampleTooSmallError,
    UnsupportedSizeError,
)


@pytest.mark.parametrize("p, count", [(1, 1), (2, 3), (3, 25), (4, 543)])
def test_dag_counts(p, count):
    assert len(enumerate_dags(p)) == count


def test_cycle_detection():
    cycle = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=bool)
    chain = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=bool)
    assert not is_acyclic(cycle)
    assert is_acyclic(chain)


def test_enumeration_rejects_five_nodes():
    with pytest.raises(UnsupportedSizeError):
        enumerate_dags(5)


def test_bandwidths_need_spread():
    with pytest.raises(DegenerateRegressorError):
        silverman_bandwidths(np.ones((10, 1)))
    h = silverman_bandwidths(np.arange(10.0)[:, np.newaxis])
    assert h[0] == pytest.approx(np.std(np.arange(10.0), ddof=1) * (4.0 / 30.0) ** 0.2)


def test_regression_of_constant_target_is_constant(rng):
    x = rng.standard_normal(30)
    np.testing.assert_allclose(nadaraya_watson(x[:, np.newaxis], np.full(30, 2.5)), 2.5)


def test_roots_keep_their_values(rng):
    Z = rng.standard_normal((25, 2))
    empty = np.zeros((2, 2), dtype=bool)
    np.testing.assert_array_equal(nadaraya_watson_residuals(Z, empty), Z)


def test_constant_column_cannot_be_standardized():
    data = np.column_stack([np.arange(30.0), np.ones(30)])
    with pytest.raises(DegenerateRegressorError, match="b"):
        standardize(data, ['a', 'b'])


def test_candidate_description():
    adjacency = np.array([[0, 1], [0, 0]], dtype=bool)
    candidate = DagCandidate(adjacency, 0.4, 1.0, ('x', 'y'), 1)
    assert candidate.describe() == 'x->y'
    assert candidate.to_dict()['edges'] == [['x', 'y']]
    empty = DagCandidate(np.zeros((2, 2), dtype=bool), 0.1, 2.0, ('x', 'y'), 0)
    assert empty.describe() == '(empty)'


def test_input_validation(rng):
    with pytest.raises(UnsupportedSizeError):
        dag_select(rng.standard_normal((30, 5)))
    with pytest.raises(UnsupportedSizeError):
        dag_select(rng.standard_normal((30, 1)))
    with pytest.raises(SampleTooSmallError):
        dag_select(rng.standard_normal((10, 2)))
    with pytest.raises(InvalidConfigError):
        dag_select(rng.standard_normal((30, 2)), method='lasso')


def test_ranking_order():
    data = two_variable_anm_sample(60, seed=8)
    ranked = dag_select(data, ['x', 'y'], method='median', B=19, seed=1, n_jobs=1)
    assert len(ranked) == 3
    keys = [(-c.p_value, c.n_edges, c.index) for c in ranked]
    assert keys == sorted(keys)
    assert sorted(c.index for c in ranked) == [0, 1, 2]


def test_frequencies_sum_to_one():
    data = two_variable_anm_sample(80, seed=9)
    frame = dag_selection_frequencies(
        data, ['x', 'y'], subsample=40, reps=3, method='median', B=9, seed=2, n_jobs=1, progress=False,
    )
    assert list(frame.columns) == ['dag', 'count', 'frequency']
    assert frame['count'].sum() == 3
    assert frame['frequency'].sum() == pytest.approx(1.0)


def test_subsample_larger_than_data():
    with pytest.raises(InvalidParameterError):
        dag_selection_frequencies(np.zeros((30, 2)), subsample=40, reps=1)
