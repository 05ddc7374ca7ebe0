import numpy as np
import pytest
from numpy.testing import assert_allclose

from spectral.grid import Field, make_grid, to_spectrum
from experiments.random_fields import random_fields
from variational.functionals import ModelParams, mass, triple
from variational.rearrangement import fourier_rearrangement, rearrangement_distance


@pytest.fixture
def params():
    return ModelParams(gamma=1.0, sigma=1.0, dim=1)


class TestFourierRearrangement:
    def test_norm_inequalities_on_random_fields(self, params):
        grid = make_grid(1, 20.0, 128)
        violations = []
        for index, u in enumerate(random_fields(grid, 100, seed=5)):
            sharp = fourier_rearrangement(u)
            t, s = triple(u, params), triple(sharp, params)
            if abs(mass(sharp) - mass(u)) > 1e-12 * mass(u):
                violations.append((index, 'mass'))
            if s.A > t.A * (1.0 + 1e-12):
                violations.append((index, 'bilaplacian'))
            if s.B > t.B * (1.0 + 1e-12):
                violations.append((index, 'gradient'))
            if s.C < t.C * (1.0 - 1e-12):
                violations.append((index, 'lebesgue'))
        assert violations == []

    def test_output_is_real_and_even(self):
        grid = make_grid(2, 10.0, 32)
        u = next(random_fields(grid, 1, seed=9))
        sharp = fourier_rearrangement(u)
        assert sharp.is_real()
        # x -> -x maps index j to M - j, with index 0 fixed
        mirrored = np.roll(np.flip(sharp.values), 1, axis=(0, 1))
        assert_allclose(mirrored, sharp.values, atol=1e-12)

    def test_spectrum_is_decreasing_in_frequency(self):
        grid = make_grid(1, 10.0, 64)
        u = next(random_fields(grid, 1, seed=2))
        magnitudes = np.abs(to_spectrum(fourier_rearrangement(u).values))
        order = np.argsort(np.abs(grid.frequency_indices), kind='stable')
        assert np.all(np.diff(magnitudes[order]) <= 1e-12 * magnitudes.max())

    def test_mass_preserved_in_two_dimensions(self):
        grid = make_grid(2, 10.0, 32)
        for u in random_fields(grid, 10, seed=4):
            assert_allclose(mass(fourier_rearrangement(u)), mass(u), rtol=1e-12)

    def test_distance_of_even_decreasing_profile(self):
        grid = make_grid(1, 32.0, 256)
        gaussian = Field.from_function(grid, lambda x: np.exp(-x ** 2))
        assert rearrangement_distance(gaussian) < 1e-12

    def test_boosted_gaussian_rearranges_to_the_centered_one(self):
        grid = make_grid(1, 32.0, 256)
        k0 = 2.0 * np.pi * 4 / grid.extent
        boosted = Field.from_function(grid, lambda x: np.exp(1j * k0 * x) * np.exp(-x ** 2))
        sharp = fourier_rearrangement(boosted)
        assert_allclose(sharp.values, np.exp(-grid.axis_coordinates ** 2), atol=1e-8)
