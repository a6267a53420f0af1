"""
Unit tests for the bump perturbations of the uniform density
"""

import numpy as np
import pytest
from scipy import integrate

from src.data.perturbation import (
    PerturbationSpec,
    bump_phi,
    bump_phi0,
    bumps_for_separation,
    cell_probabilities,
    l2_separation,
    perturbed_density,
    phi0_l2_norm,
    phi0_spectral_moments,
    phi_sup_norm,
    sample_perturbed,
)
from src.utils.errors import InvalidParameterError, InvalidSpecError


def _integrate_1d(f):
    left, _ = integrate.quad(f, 0.0, 0.5, limit=200)
    right, _ = integrate.quad(f, 0.5, 1.0, limit=200)
    return left + right


def test_bump_values_at_centres():
    values = bump_phi0(np.array([0.25, 0.75, 0.0, 0.5, 1.0]))
    assert values[0] == pytest.approx(np.exp(-1.0))
    assert values[1] == pytest.approx(-np.exp(-1.0))
    assert np.all(values[2:] == 0.0)


def test_bump_has_zero_mean():
    assert _integrate_1d(lambda t: float(bump_phi0(np.array([t]))[0])) == pytest.approx(0.0, abs=1e-12)


def test_tensor_bump_peak():
    assert bump_phi(np.array([[0.25, 0.25]]))[0] == pytest.approx(phi_sup_norm(2))
    assert bump_phi(np.array([[0.25, 0.75]]))[0] == pytest.approx(-phi_sup_norm(2))


def test_spectral_moment_zero_is_the_l2_norm():
    assert phi0_spectral_moments(0)[0] == pytest.approx(phi0_l2_norm() ** 2, rel=1e-6)


def test_density_integrates_to_one_with_known_separation():
    spec = PerturbationSpec.alternating(d=1, b=2, r=0.1)

    def density(t):
        return float(perturbed_density(spec, np.array([[t]]))[0])

    assert _integrate_1d(density) == pytest.approx(1.0, abs=1e-9)
    assert _integrate_1d(lambda t: (density(t) - 1.0) ** 2) == pytest.approx(0.02, rel=1e-6)


def test_separation_formula():
    spec = PerturbationSpec.alternating(d=1, b=4, r=0.1)
    assert l2_separation(spec) == pytest.approx(0.2)


def test_every_cell_keeps_uniform_mass():
    spec = PerturbationSpec.with_random_signs(d=1, b=3, r=0.05, seed=1)
    np.testing.assert_allclose(cell_probabilities(spec), 1.0 / 3, atol=1e-8)


def test_density_vanishes_outside_cube():
    spec = PerturbationSpec.alternating(d=2, b=2, r=0.05)
    assert np.all(perturbed_density(spec, np.array([[-0.1, 0.5], [0.5, 1.2]])) == 0.0)


@pytest.mark.parametrize("kwargs", [
    dict(d=1, b=2, r=0.1, signs=[1.0]),
    dict(d=1, b=2, r=0.1, signs=[1.0, 0.5]),
    dict(d=1, b=2, r=-0.1, signs=[1.0, -1.0]),
    dict(d=1, b=2, r=10.0, signs=[1.0, -1.0]),
    dict(d=0, b=2, r=0.1, signs=[]),
])
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpecError):
        PerturbationSpec(**kwargs)


def test_sampling_is_deterministic_and_in_the_cube():
    spec = PerturbationSpec.alternating(d=2, b=2, r=0.05)
    first = sample_perturbed(spec, 200, seed=3, stream=1)
    second = sample_perturbed(spec, 200, seed=3, stream=1)
    np.testing.assert_array_equal(first.data, second.data)
    assert first.data.shape == (200, 2)
    assert np.all((first.data >= 0.0) & (first.data <= 1.0))
    assert not np.array_equal(first.data, sample_perturbed(spec, 200, seed=3, stream=2).data)


def test_sampling_needs_two_points():
    with pytest.raises(InvalidParameterError):
        sample_perturbed(PerturbationSpec.alternating(d=1, b=1, r=0.0), 1, seed=1)


def test_bump_count_for_separation():
    b, r = bumps_for_separation(0.05, d=1, s=2, M=100.0)
    assert b >= 1
    assert r * b ** 0.5 == pytest.approx(0.05)
    smaller_b, _ = bumps_for_separation(0.2, d=1, s=2, M=100.0)
    assert smaller_b <= b


def test_bump_count_keeps_density_in_sobolev_ball():
    b, r = bumps_for_separation(0.05, d=1, s=2, M=100.0)
    spec = PerturbationSpec.alternating(1, b, r, s=2, M=100.0)
    assert spec.sobolev_bound_sq() <= 100.0 ** 2 * (1.0 + 1e-9)
    # one more bump per axis leaves the ball
    assert PerturbationSpec.alternating(1, b + 1, 0.05 / np.sqrt(b + 1), s=2).sobolev_bound_sq() > 100.0 ** 2


def test_radius_too_small_for_perturbation():
    with pytest.raises(InvalidSpecError):
        PerturbationSpec.alternating(1, 4, 0.01, s=2, M=1e-3)
    with pytest.raises(InvalidSpecError):
        PerturbationSpec.alternating(1, 4, 0.01, s=1.5, M=10.0)


def test_separation_too_large_for_radius():
    with pytest.raises(InvalidSpecError):
        bumps_for_separation(1e6, d=1, s=2, M=1e-3)
    with pytest.raises(InvalidParameterError):
        bumps_for_separation(0.0, d=1, s=2, M=1.0)
