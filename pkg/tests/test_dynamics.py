import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spectral.grid import Field, make_grid
from dynamics.diagnostics import classify_oc, tail_fraction, virial_rate_excess
from dynamics.integrator import (
    TRACE_HEADER,
    MonitorConfig,
    Verdict,
    default_time_step,
    evolve,
    step_strang,
)
from dynamics.virial import (
    VirialConfig,
    localized_virial,
    profile,
    profile_derivative,
    profile_second_derivative,
)
from solvers.ground_state import solve_fixed_multiplier
from solvers.stationary import SolverConfig
from variational.functionals import ModelParams, energy, mass, pohozaev
from utils.errors import ConfigError


@pytest.fixture
def grid():
    return make_grid(1, 32.0, 128)


@pytest.fixture
def params():
    return ModelParams(gamma=1.0, sigma=1.0, dim=1)


@pytest.fixture
def gaussian(grid):
    return Field.from_function(grid, lambda x: np.exp(-x ** 2))


class TestVirialProfile:
    def test_continuity_at_the_joins(self):
        for rho in (1.0, 10.0):
            below, above = rho - 1e-9, rho + 1e-9
            assert_allclose(profile(below), profile(above), atol=1e-7)
            assert_allclose(profile_derivative(below), profile_derivative(above), atol=1e-7)
            assert_allclose(profile_second_derivative(below), profile_second_derivative(above), atol=1e-7)

    def test_shape(self):
        rho = np.linspace(0.0, 12.0, 2401)
        assert np.all(profile_second_derivative(rho) <= 1.0 + 1e-14)
        assert_allclose(profile(rho[rho <= 1.0]), 0.5 * rho[rho <= 1.0] ** 2)
        assert np.all(profile_derivative(rho[rho >= 10.0]) == 0.0)

    def test_derivatives_are_consistent(self):
        rho = np.linspace(1.5, 9.5, 33)
        h = 1e-5
        assert_allclose((profile(rho + h) - profile(rho - h)) / (2 * h), profile_derivative(rho), atol=1e-7)
        assert_allclose(
            (profile_derivative(rho + h) - profile_derivative(rho - h)) / (2 * h),
            profile_second_derivative(rho),
            atol=1e-7,
        )

    def test_nonpositive_radius(self):
        with pytest.raises(ConfigError):
            VirialConfig(R=0.0)

    def test_default_radius(self, grid):
        assert VirialConfig.for_grid(grid).R == 8.0
        assert VirialConfig.for_grid(grid, 3.0).R == 3.0


class TestLocalizedVirial:
    def test_real_field_has_no_momentum(self, grid, gaussian):
        assert localized_virial(gaussian, VirialConfig.for_grid(grid)) == pytest.approx(0.0, abs=1e-14)

    def test_chirped_gaussian(self, grid):
        beta = 0.8
        chirped = Field.from_function(grid, lambda x: np.exp(-x ** 2) * np.exp(0.5j * beta * x ** 2))
        expected = 0.5 * beta * math.sqrt(math.pi / 2.0)
        assert_allclose(localized_virial(chirped, VirialConfig.for_grid(grid)), expected, rtol=1e-10)

    def test_boosted_shifted_gaussian(self, grid):
        k0 = 2.0 * np.pi * 3 / grid.extent
        boosted = Field.from_function(grid, lambda x: np.exp(1j * k0 * x) * np.exp(-(x - 1.0) ** 2))
        expected = 2.0 * k0 * math.sqrt(math.pi / 2.0)
        assert abs(localized_virial(boosted, VirialConfig.for_grid(grid)) - expected) <= 1e-6


class TestStrangStep:
    def test_mass_conservation(self, params):
        grid = make_grid(1, 32.0, 64)
        psi = Field.from_function(grid, lambda x: 1.2 * np.exp(-x ** 2) * np.exp(0.3j * x))
        initial = mass(psi)
        for _ in range(10000):
            psi = step_strang(psi, 1e-3, params)
        assert abs(mass(psi) - initial) <= 1e-11 * initial

    def test_time_reversible(self, params, gaussian):
        forward = step_strang(gaussian.scaled(1.5), 0.01, params)
        back = step_strang(forward, -0.01, params)
        assert np.max(np.abs(back.values - 1.5 * gaussian.values)) < 1e-11

    def test_linear_plane_wave(self, grid, params):
        k = 2.0 * np.pi * 3 / grid.extent
        wave = Field.from_function(grid, lambda x: np.exp(1j * k * x))
        tau = 0.02
        stepped = step_strang(wave, tau, params, nonlinear_coefficient=0.0)
        phase = np.exp(-1j * tau * (k ** 4 + k ** 2))
        assert_allclose(stepped.values, phase * wave.values, atol=1e-12)

    def test_default_time_step(self, grid):
        assert default_time_step(grid, 1.0) == pytest.approx(0.25 * 0.25 ** 2)
        assert default_time_step(grid, 4.0) == pytest.approx(0.5 * default_time_step(grid, 1.0))


class TestEvolve:
    def test_rejects_bad_horizon(self, grid, params, gaussian):
        with pytest.raises(ConfigError):
            evolve(gaussian, 0.0, 1e-3, params, VirialConfig.for_grid(grid))
        with pytest.raises(ConfigError):
            evolve(gaussian, 1.0, -1e-3, params, VirialConfig.for_grid(grid))

    def test_trace_shape(self, grid, params, gaussian):
        trace = evolve(gaussian, 0.1, 1e-3, params, VirialConfig.for_grid(grid), output_interval=0.01)
        assert trace.verdict is Verdict.COMPLETED
        assert trace.steps == 100
        assert trace.rows().shape == (11, len(TRACE_HEADER.split(',')))
        assert trace.times[-1] == pytest.approx(0.1)
        assert trace.mass_deviation() < 1e-12
        assert trace.final_state is not None

    def test_step_shrinks_to_reach_horizon(self, grid, params, gaussian):
        trace = evolve(gaussian, 0.1, 0.03, params, VirialConfig.for_grid(grid))
        assert trace.steps == 4
        assert trace.tau == pytest.approx(0.025)

    def test_unresolved_datum(self, grid, params):
        k = 2.0 * np.pi * 58 / grid.extent
        datum = Field.from_function(grid, lambda x: 0.1 * np.cos(k * x))
        monitor = MonitorConfig(max_restarts=1)
        trace = evolve(datum, 0.01, 1e-3, params, VirialConfig.for_grid(grid), monitor=monitor)
        assert trace.verdict is Verdict.RESOLUTION_EXHAUSTED
        assert trace.restarts == 1

    def test_growth_triggers_blow_up_verdict(self, grid, params, gaussian):
        monitor = MonitorConfig(growth_factor=0.5)
        trace = evolve(gaussian, 0.1, 1e-3, params, VirialConfig.for_grid(grid), monitor=monitor)
        assert trace.verdict is Verdict.BLOW_UP_DETECTED
        assert len(trace.times) == 2

    @pytest.mark.slow
    def test_energy_drift_is_second_order(self, grid, params, gaussian):
        drift = []
        for tau in (0.004, 0.002):
            trace = evolve(gaussian.scaled(1.5), 0.4, tau, params, VirialConfig.for_grid(grid))
            drift.append(trace.energy_deviation())
        assert 3.2 <= drift[0] / drift[1] <= 4.8

    @pytest.mark.slow
    def test_standing_wave_keeps_its_profile(self, params):
        grid = make_grid(1, 32.0, 256)
        alpha = 1.0
        u = solve_fixed_multiplier(alpha, params, grid, SolverConfig.from_settings())
        period = 2.0 * math.pi / alpha
        trace = evolve(u, period, 1e-3, params, VirialConfig.for_grid(grid), output_interval=period)
        expected = np.exp(1j * alpha * period) * u.values
        error = math.sqrt(mass(trace.final_state.with_values(trace.final_state.values - expected)) / mass(u))
        assert trace.verdict is Verdict.COMPLETED
        assert error <= 1e-5


class TestDiagnostics:
    def test_tail_fraction(self, grid, gaussian):
        assert tail_fraction(gaussian) < 1e-20
        assert tail_fraction(Field.zeros(grid)) == 0.0
        k = 2.0 * np.pi * 60 / grid.extent
        assert tail_fraction(Field.from_function(grid, lambda x: np.cos(k * x))) == pytest.approx(1.0)

    def test_classify_oc_is_strict(self, gaussian, params):
        level = energy(gaussian, params)
        assert pohozaev(gaussian, params) > 0
        assert classify_oc(gaussian, level + 1e-9, params)
        assert not classify_oc(gaussian, level, params)

    def test_virial_rate_excess(self):
        times = [0.0, 1.0, 2.0, 3.0]
        virial = [0.0, 8.0, 16.0, 30.0]
        q_series = [1.0, 1.0, 1.0, 1.0]
        assert virial_rate_excess(times, virial, q_series) == [0.0, 3.0]
        assert virial_rate_excess(times[:2], virial[:2], q_series[:2]) == []
