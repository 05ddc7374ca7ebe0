import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spectral.grid import Field, dilate, integrate, make_grid
from experiments.random_fields import random_fields
from variational.functionals import (
    ModelParams,
    ScalarTriple,
    energy,
    energy_along_dilation,
    energy_gradient,
    mass,
    multiplier_from_identities,
    optimal_dilation,
    pohozaev,
    pohozaev_along_dilation,
    reduced_energy,
    rescale_to_mass,
    stationary_residual,
    triple,
    weinstein_quotient,
)
from utils.errors import ConfigError, Degenerate, NoMaximizer, ZeroField, ZeroMass

ROOT_HALF_PI = math.sqrt(math.pi / 2.0)


@pytest.fixture
def grid():
    return make_grid(1, 32.0, 256)


@pytest.fixture
def gaussian(grid):
    return Field.from_function(grid, lambda x: np.exp(-x ** 2))


@pytest.fixture
def supercritical():
    return ModelParams(gamma=1.0, sigma=6.0, dim=1)


@pytest.fixture
def critical():
    return ModelParams(gamma=1.0, sigma=4.0, dim=1)


class TestModelParams:
    @pytest.mark.parametrize('kwargs', [
        {'gamma': 0.0, 'sigma': 4.0, 'dim': 1},
        {'gamma': 1.0, 'sigma': -1.0, 'dim': 1},
        {'gamma': 1.0, 'sigma': 4.0, 'dim': 3},
        {'gamma': 1.0, 'sigma': 4.0, 'dim': 1, 'mass_target': -2.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            ModelParams(**kwargs)

    def test_critical_exponent(self, critical, supercritical):
        assert critical.is_critical
        assert not supercritical.is_critical
        assert ModelParams(gamma=1.0, sigma=2.0, dim=2).is_critical

    def test_subcritical_has_no_ground_states(self):
        with pytest.raises(ConfigError):
            ModelParams(gamma=1.0, sigma=2.0, dim=1).require_ground_state_regime()


class TestTriple:
    def test_gaussian_closed_forms(self, gaussian, supercritical):
        t = triple(gaussian, supercritical)
        assert_allclose(mass(gaussian), ROOT_HALF_PI, rtol=1e-13)
        assert_allclose(t.B, ROOT_HALF_PI, rtol=1e-12)
        assert_allclose(t.A, 3.0 * ROOT_HALF_PI, rtol=1e-12)
        assert_allclose(t.C, math.sqrt(math.pi / 14.0), rtol=1e-13)

    def test_energy_and_pohozaev(self, gaussian, supercritical):
        t = triple(gaussian, supercritical)
        assert_allclose(energy(gaussian, supercritical), 0.5 * t.A + 0.5 * t.B - t.C / 14.0, rtol=1e-14)
        assert_allclose(pohozaev(gaussian, supercritical), t.A + 0.5 * t.B - 3.0 * t.C / 14.0, rtol=1e-14)

    def test_reduced_energy_drops_nonlinear_term(self, gaussian, supercritical):
        t = triple(gaussian, supercritical)
        expected = energy(gaussian, supercritical) - (1.0 / 3.0) * pohozaev(gaussian, supercritical)
        assert_allclose(reduced_energy(t, supercritical), expected, rtol=1e-12)

    def test_interpolation_inequality(self, grid, supercritical):
        for u in random_fields(grid, 20, seed=11):
            assert triple(u, supercritical).satisfies_interpolation(mass(u))


class TestDilationAlgebra:
    def test_energy_along_dilation_matches_dilated_field(self, gaussian, supercritical):
        t = triple(gaussian, supercritical)
        for lam in (0.6, 1.0, 1.8):
            assert_allclose(
                energy_along_dilation(t, lam, supercritical),
                energy(dilate(gaussian, lam), supercritical),
                rtol=1e-10,
            )

    def test_pohozaev_is_scaled_derivative(self, gaussian, supercritical):
        t = triple(gaussian, supercritical)
        h = 1e-5
        for lam in (0.5, 1.0, 2.0):
            derivative = (
                energy_along_dilation(t, lam + h, supercritical) - energy_along_dilation(t, lam - h, supercritical)
            ) / (2.0 * h)
            assert_allclose(pohozaev_along_dilation(t, lam, supercritical), lam * derivative, rtol=1e-7)
        assert_allclose(pohozaev_along_dilation(t, 1.0, supercritical), pohozaev(gaussian, supercritical), rtol=1e-14)

    def test_supercritical_maximizer(self, gaussian, supercritical):
        t = triple(gaussian, supercritical)
        result = optimal_dilation(t, supercritical)
        assert result.exists
        lam = result.lambda_star
        assert abs(pohozaev_along_dilation(t, lam, supercritical)) < 1e-9 * lam * t.A
        samples = np.geomspace(lam / 50.0, lam * 50.0, 41)
        energies = [energy_along_dilation(t, s, supercritical) for s in samples]
        peak = int(np.argmax(energies))
        assert np.all(np.diff(energies[:peak + 1]) > 0)
        assert np.all(np.diff(energies[peak:]) < 0)
        assert result.max_energy >= max(energies) - 1e-12 * abs(result.max_energy)

    def test_energy_along_dilation_arithmetic(self):
        p = ModelParams(gamma=1.0, sigma=3.0, dim=2)
        assert energy_along_dilation(ScalarTriple(A=1.0, B=1.0, C=7.0), 2.0, p) == pytest.approx(-4.0, abs=1e-14)

    def test_supercritical_closed_form(self):
        # positive root of (21/8) lambda^2 - lambda - 1/2
        p = ModelParams(gamma=1.0, sigma=3.0, dim=2)
        result = optimal_dilation(ScalarTriple(A=1.0, B=1.0, C=7.0), p)
        assert result.lambda_star == pytest.approx(2.0 / 3.0, rel=1e-10)

    def test_critical_closed_form(self, critical):
        t = ScalarTriple(A=1.0, B=1.0, C=10.0)
        result = optimal_dilation(t, critical)
        assert result.lambda_star == pytest.approx(0.5)
        assert result.max_energy == pytest.approx(energy_along_dilation(t, 0.5, critical))

    def test_critical_without_maximizer(self, critical):
        t = ScalarTriple(A=1.0, B=1.0, C=1.0)
        with pytest.raises(NoMaximizer):
            optimal_dilation(t, critical)
        result = optimal_dilation(t, critical, strict=False)
        assert not result.exists
        assert math.isinf(result.max_energy)

    def test_degenerate_triples(self, supercritical):
        with pytest.raises(Degenerate):
            optimal_dilation(ScalarTriple(A=1.0, B=1.0, C=0.0), supercritical)
        with pytest.raises(Degenerate):
            optimal_dilation(ScalarTriple(A=0.0, B=0.0, C=1.0), supercritical)


class TestWeinsteinQuotient:
    def test_invariant_under_scaling_and_dilation(self, gaussian, critical):
        w = weinstein_quotient(gaussian, critical)
        assert_allclose(weinstein_quotient(gaussian.scaled(3.0), critical), w, rtol=1e-12)
        assert_allclose(weinstein_quotient(dilate(gaussian, 2.0), critical), w, rtol=1e-10)

    def test_zero_field(self, grid, critical):
        with pytest.raises(ZeroField):
            weinstein_quotient(Field.zeros(grid), critical)


class TestGradient:
    def test_matches_directional_derivative(self, grid, gaussian, supercritical):
        direction = Field.from_function(grid, lambda x: np.exp(-0.5 * (x - 0.3) ** 2))
        g = energy_gradient(gaussian, supercritical)
        h = 1e-5
        plus = energy(gaussian.with_values(gaussian.values + h * direction.values), supercritical)
        minus = energy(gaussian.with_values(gaussian.values - h * direction.values), supercritical)
        expected = integrate(grid, np.real(g.values * direction.values))
        assert_allclose((plus - minus) / (2.0 * h), expected, rtol=1e-7, atol=1e-10)

    def test_residual_of_zero_field(self, grid, supercritical):
        with pytest.raises(ZeroField):
            stationary_residual(Field.zeros(grid), 1.0, supercritical)

    def test_rescale_to_mass(self, gaussian):
        assert_allclose(mass(rescale_to_mass(gaussian, 2.5)), 2.5, rtol=1e-14)


class TestMultiplierIdentity:
    def test_critical_arithmetic(self, critical):
        t = ScalarTriple(A=1.0, B=2.0, C=0.0)
        assert multiplier_from_identities(t, 2.0, critical) == pytest.approx(3.5, rel=1e-14)

    def test_nonpositive_mass(self, critical):
        with pytest.raises(ZeroMass):
            multiplier_from_identities(ScalarTriple(A=1.0, B=2.0, C=0.0), 0.0, critical)
