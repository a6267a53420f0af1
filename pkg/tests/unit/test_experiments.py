"""
Unit tests for the simulation data generators
"""

import numpy as np
import pytest

from src.data.experiments import (
    MIXTURE_WEIGHTS,
    ExperimentSetting,
    experiment_sampler,
    planted_dag_sample,
    variance_ratio,
)
from src.utils.errors import InvalidSettingError


def test_mixture_weights_sum_to_one():
    assert sum(MIXTURE_WEIGHTS) == pytest.approx(1.0)


def test_experiment_one_shapes():
    sample = experiment_sampler(ExperimentSetting('I', n=30, m=20), seed=1)
    assert sample.X.data.shape == (30, 1)
    assert sample.Y.data.shape == (20, 1)


def test_experiment_two_sign_structure():
    sample = experiment_sampler(ExperimentSetting('II', n=500), seed=2)
    data = sample.X.data
    assert np.all(np.prod(data, axis=1) >= 0.0)
    assert sample.layout.widths == (1, 1, 1, 1, 1)


def test_experiment_two_null_breaks_sign_structure():
    data = experiment_sampler(ExperimentSetting('II', n=500, null=True), seed=2).X.data
    assert np.any(np.prod(data, axis=1) < 0.0)


def test_variance_ratios():
    assert variance_ratio(ExperimentSetting('III', n=10, d=100)) == pytest.approx(1.2)
    assert variance_ratio(ExperimentSetting('IV', n=10, d=100)) == pytest.approx(1.0 + 6.0 * 100 ** -0.6)


def test_experiment_four_layout_halves():
    sample = experiment_sampler(ExperimentSetting('IV', n=10, d=8), seed=3)
    assert sample.X.data.shape == (10, 8)
    assert sample.layout.widths == (4, 4)


def test_draws_are_pure_functions_of_seed_and_replicate():
    setting = ExperimentSetting('III', n=10, d=5)
    a = experiment_sampler(setting, seed=4, replicate=2)
    b = experiment_sampler(setting, seed=4, replicate=2)
    c = experiment_sampler(setting, seed=4, replicate=3)
    np.testing.assert_array_equal(a.Y.data, b.Y.data)
    assert not np.array_equal(a.Y.data, c.Y.data)


def test_with_n_keeps_the_design():
    setting = ExperimentSetting('III', n=10, d=5).with_n(40)
    assert (setting.n, setting.m, setting.d) == (40, 40, 5)
    assert setting.as_null().null


@pytest.mark.parametrize("kwargs", [
    dict(tag='V', n=10),
    dict(tag='I', n=3),
    dict(tag='I', n=10, d=2),
    dict(tag='II', n=10, d=4),
    dict(tag='II', n=10, m=10),
    dict(tag='III', n=10),
    dict(tag='IV', n=10, d=7),
])
def test_invalid_settings(kwargs):
    with pytest.raises(InvalidSettingError):
        ExperimentSetting(**kwargs)


def test_planted_dag_columns():
    data = planted_dag_sample(50, seed=5)
    assert data.shape == (50, 3)
    np.testing.assert_array_equal(data, planted_dag_sample(50, seed=5))
