import numpy as np
import pytest
from numpy.testing import assert_allclose

from spectral.grid import (
    Field,
    apply_symbol,
    bilaplacian,
    dilate,
    dilate_with_factor,
    field_mass,
    forward,
    gradient,
    integrate,
    inverse,
    laplacian,
    make_grid,
    to_spectrum,
    translate,
)
from experiments.random_fields import random_fields
from utils.errors import InvalidGrid, NonFiniteField, OddPointCount, ResolutionLimit, SupportOverflow


@pytest.fixture
def grid():
    return make_grid(1, 32.0, 256)


@pytest.fixture
def gaussian(grid):
    return Field.from_function(grid, lambda x: np.exp(-x ** 2))


class TestMakeGrid:
    def test_derived_quantities(self, grid):
        assert grid.spacing == 0.125
        assert grid.shape == (256,)
        assert grid.axis_coordinates[0] == -16.0
        assert grid.axis_coordinates[128] == 0.0
        assert_allclose(grid.nyquist, np.pi / 0.125)
        assert_allclose(np.max(np.abs(grid.wavenumbers)), grid.nyquist)

    def test_odd_points_rejected(self):
        with pytest.raises(OddPointCount):
            make_grid(1, 10.0, 65)

    @pytest.mark.parametrize('dim, extent, points', [(3, 10.0, 64), (1, 0.0, 64), (1, -1.0, 64), (2, 10.0, 6)])
    def test_invalid_grids_rejected(self, dim, extent, points):
        with pytest.raises(InvalidGrid):
            make_grid(dim, extent, points)

    def test_two_dimensional_mesh(self):
        grid = make_grid(2, 10.0, 16)
        x, y = grid.mesh
        assert x.shape == (16, 16)
        assert_allclose(x[:, 0], grid.axis_coordinates)
        assert_allclose(y[0, :], grid.axis_coordinates)
        assert grid.nyquist_mask.sum() == 2 * 16 - 1


class TestField:
    def test_values_are_read_only(self, gaussian):
        with pytest.raises(ValueError):
            gaussian.values[0] = 1.0

    def test_non_finite_rejected(self, grid):
        values = np.zeros(grid.shape)
        values[3] = np.nan
        with pytest.raises(NonFiniteField):
            Field(grid, values)

    def test_wrong_size_rejected(self, grid):
        with pytest.raises(ValueError):
            Field(grid, np.zeros(100))

    def test_even_profile_has_real_spectrum(self, gaussian):
        coefficients = to_spectrum(gaussian.values)
        assert np.max(np.abs(coefficients.imag)) < 1e-12 * np.max(np.abs(coefficients))


class TestOperators:
    def test_parseval(self, grid):
        rng = np.random.default_rng(7)
        u = Field(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
        assert_allclose(forward(u).norm_squared(), field_mass(u), rtol=1e-12)
        assert_allclose(inverse(forward(u)).values, u.values, atol=1e-13)

    def test_gaussian_integrals(self, gaussian):
        assert_allclose(field_mass(gaussian), np.sqrt(np.pi / 2.0), rtol=1e-13)
        assert_allclose(integrate(gaussian.grid, gaussian), np.sqrt(np.pi), rtol=1e-13)

    def test_laplacian_of_gaussian(self, grid, gaussian):
        x = grid.axis_coordinates
        expected = (4.0 * x ** 2 - 2.0) * np.exp(-x ** 2)
        result = laplacian(gaussian)
        assert result.is_real()
        assert_allclose(result.values.real, expected, atol=1e-11)

    def test_bilaplacian_of_cosine(self, grid):
        k = 2.0 * np.pi * 5 / grid.extent
        u = Field.from_function(grid, lambda x: np.cos(k * x))
        assert_allclose(bilaplacian(u).values.real, k ** 4 * np.cos(k * grid.axis_coordinates), atol=1e-10)

    def test_gradient_of_gaussian(self, grid, gaussian):
        (dx,) = gradient(gaussian)
        x = grid.axis_coordinates
        assert_allclose(dx.values.real, -2.0 * x * np.exp(-x ** 2), atol=1e-12)

    def test_unit_symbol_is_identity(self, grid):
        u = next(random_fields(grid, 1, seed=4))
        assert_allclose(apply_symbol(u, lambda k2: np.ones_like(k2)).values, u.values, atol=1e-12)

    def test_symbol_composition(self, grid):
        for u in random_fields(grid, 5, seed=6):
            once = apply_symbol(u, lambda k2: k2 ** 2)
            twice = apply_symbol(apply_symbol(u, lambda k2: -k2), lambda k2: -k2)
            scale = np.max(np.abs(once.values))
            assert np.max(np.abs(once.values - twice.values)) <= 1e-11 * scale

    def test_gradient_in_two_dimensions(self):
        grid = make_grid(2, 16.0, 128)
        u = Field.from_function(grid, lambda x, y: np.exp(-x ** 2 - 2.0 * y ** 2))
        dx, dy = gradient(u)
        x, y = grid.mesh
        assert_allclose(dx.values.real, -2.0 * x * u.values.real, atol=1e-10)
        assert_allclose(dy.values.real, -4.0 * y * u.values.real, atol=1e-10)


class TestDilation:
    def test_dilated_gaussian_matches_closed_form(self, grid, gaussian):
        x = grid.axis_coordinates
        dilated, factor = dilate_with_factor(gaussian, 2.0)
        assert abs(factor - 1.0) < 1e-12
        assert_allclose(dilated.values.real, 2.0 ** 0.25 * np.exp(-2.0 * x ** 2), atol=1e-12)

    def test_mass_is_preserved(self, gaussian):
        for lam in (0.5, 1.7, 3.0):
            assert_allclose(field_mass(dilate(gaussian, lam)), field_mass(gaussian), rtol=1e-14)

    def test_identity_dilation(self, gaussian):
        assert np.array_equal(dilate(gaussian, 1.0).values, gaussian.values)

    def test_compression_that_leaks_support(self, grid):
        wide = Field.from_function(grid, lambda x: np.exp(-(x / 4.0) ** 2))
        with pytest.raises(SupportOverflow):
            dilate(wide, 0.1)

    def test_nonpositive_parameter(self, gaussian):
        with pytest.raises(ValueError):
            dilate(gaussian, 0.0)

    def test_inverse_dilation_restores_the_field(self, gaussian):
        for lam in (0.5, 2.0, 5.0):
            restored = dilate(dilate(gaussian, lam), 1.0 / lam)
            assert_allclose(restored.values, gaussian.values, atol=1e-12)

    def test_stretched_nodes_outside_the_box_read_zero(self, grid, gaussian):
        x = grid.axis_coordinates
        dilated = dilate(gaussian, 5.0)
        assert_allclose(dilated.values.real, 5.0 ** 0.25 * np.exp(-5.0 * x ** 2), atol=1e-12)

    def test_compression_past_nyquist_is_under_resolved(self, grid):
        # mode 64 compressed fourfold lands on twice the Nyquist frequency
        k = 2.0 * np.pi * 64 / grid.extent
        packet = Field.from_function(grid, lambda x: np.cos(k * x) * np.exp(-(x / 2.0) ** 2))
        _, factor = dilate_with_factor(packet, 16.0)
        assert abs(factor - 1.0) > 1e-6
        with pytest.raises(ResolutionLimit):
            dilate(packet, 16.0)

    def test_two_dimensional_dilation(self):
        grid = make_grid(2, 16.0, 128)
        u = Field.from_function(grid, lambda x, y: np.exp(-x ** 2 - y ** 2))
        x, y = grid.mesh
        assert_allclose(dilate(u, 1.5).values.real, 1.5 ** 0.5 * np.exp(-1.5 * (x ** 2 + y ** 2)), atol=1e-11)


class TestTranslate:
    def test_shift_gaussian(self, grid, gaussian):
        x = grid.axis_coordinates
        shifted = translate(gaussian, (0.7,))
        assert_allclose(shifted.values, np.exp(-(x + 0.7) ** 2), atol=1e-12)
        assert_allclose(field_mass(shifted), field_mass(gaussian), rtol=1e-13)
