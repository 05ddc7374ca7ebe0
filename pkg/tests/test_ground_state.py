import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spectral.checkpoint import write_checkpoint
from spectral.grid import Field, make_grid
from solvers.critical import critical_mass, extremizer_problem, get_critical_extremizer
from solvers.ground_state import (
    GroundState,
    fixed_multiplier_problem,
    mass_curve,
    normalized_ground_state,
    solve_fixed_multiplier,
)
from solvers.minimax import ROUNDOFF_ALLOWANCE, cross_validate, minimax_descent, solve_both
from solvers.stationary import (
    SolverConfig,
    StationaryProblem,
    gaussian_seed,
    load_seed,
    nehari_gradient_flow,
    petviashvili,
)
from variational.functionals import ModelParams, identity_residuals, mass, stationary_residual
from utils.errors import (
    ConfigError,
    CrossValidationError,
    DimensionMismatch,
    InvariantViolation,
    SeedOutsideDomain,
    SubcriticalMass,
    ZeroSeed,
)


@pytest.fixture(scope='module')
def grid():
    return make_grid(1, 32.0, 256)


@pytest.fixture(scope='module')
def params():
    return ModelParams(gamma=1.0, sigma=6.0, dim=1)


@pytest.fixture(scope='module')
def cfg():
    return SolverConfig.from_settings()


@pytest.fixture(scope='module')
def profile(grid, params, cfg):
    """Fixed-multiplier solution at alpha = 1"""
    return solve_fixed_multiplier(1.0, params, grid, cfg)


@pytest.fixture(scope='module')
def state(grid, params, cfg, profile):
    return normalized_ground_state(mass(profile), params, grid, cfg)


class TestStationaryProblem:
    def test_invalid_coefficients(self):
        with pytest.raises(ConfigError):
            StationaryProblem(gamma=-1.0, mu=1.0, omega=1.0, d=1.0, sigma=2.0)

    def test_zero_seed(self, grid, cfg):
        problem = extremizer_problem(1)
        with pytest.raises(ZeroSeed):
            petviashvili(problem, grid, cfg, seed=Field.zeros(grid))

    def test_gaussian_seed_is_real_and_even(self, grid):
        seed = gaussian_seed(extremizer_problem(1), grid)
        assert seed.is_real()
        assert_allclose(seed.values[1:], seed.values[1:][::-1])


class TestFixedMultiplier:
    def test_solution_satisfies_equation(self, profile, params):
        assert profile.is_real()
        assert stationary_residual(profile, 1.0, params) < 1e-8
        identities = identity_residuals(profile, params.gamma, 1.0, 1.0, 1.0, params.sigma)
        assert identities.worst < 1e-8

    def test_solution_is_even(self, profile):
        values = profile.values.real
        assert_allclose(values[1:], values[1:][::-1], atol=1e-10)

    def test_mass_curve_keeps_input_order(self, grid, params, cfg, profile):
        points = mass_curve([2.0, 1.0, 2.0], params, grid, cfg)
        assert [pt.alpha for pt in points] == [2.0, 1.0, 2.0]
        assert all(pt.ok for pt in points)
        assert_allclose(points[1].mass, mass(profile), rtol=1e-8)

    def test_mass_curve_rejects_nonpositive_multiplier(self, grid, params, cfg):
        with pytest.raises(ConfigError):
            mass_curve([1.0, -1.0], params, grid, cfg)

    @pytest.mark.slow
    def test_gradient_flow_oracle_agrees(self, grid, params, profile):
        oracle = nehari_gradient_flow(fixed_multiplier_problem(1.0, params), grid)
        assert_allclose(mass(oracle.field), mass(profile), rtol=1e-4)


class TestNormalizedGroundState:
    def test_hits_prescribed_mass(self, state, profile):
        c = mass(profile)
        assert abs(state.mass - c) <= 1e-8 * c
        assert state.solver_tag == 'petviashvili_shooting'
        assert state.brackets >= 1

    def test_invariants(self, state):
        assert state.check_invariants() == []
        assert state.alpha > 0
        assert state.energy > 0
        assert state.pohozaev_residual <= 1e-6

    def test_recovers_the_multiplier(self, state):
        assert state.alpha == pytest.approx(1.0, rel=1e-5)

    def test_diagnostics(self, state):
        assert len(state.sign_changes()) == 1
        assert state.rearrangement_distance() >= 0.0
        assert state.identities().worst < 1e-6
        assert state.mass_curve

    def test_record_round_trip(self, state):
        restored = GroundState.from_record(state.field, state.to_record())
        assert restored.energy == state.energy
        assert restored.alpha == state.alpha

    def test_record_carries_convergence(self, state):
        record = state.to_record()
        assert record['converged'] is True
        record['converged'] = False
        assert GroundState.from_record(state.field, record).converged is False

    def test_tampered_record_fails(self, state):
        record = state.to_record()
        record['energy'] = state.energy * (1.0 + 1e-6)
        with pytest.raises(InvariantViolation):
            GroundState.from_record(state.field, record)

    def test_wrong_multiplier_fails(self, state):
        record = state.to_record()
        record['alpha'] = state.alpha * 1.01
        with pytest.raises(InvariantViolation):
            GroundState.from_record(state.field, record)

    def test_nonpositive_mass(self, grid, params, cfg):
        with pytest.raises(ConfigError):
            normalized_ground_state(0.0, params, grid, cfg)

    @pytest.mark.slow
    def test_grid_doubling(self, state, params, cfg):
        fine = normalized_ground_state(state.mass, params, make_grid(1, 32.0, 512), cfg)
        assert math.isclose(fine.energy, state.energy, rel_tol=1e-7)

    def test_subcritical_exponent_rejected(self, grid, cfg):
        with pytest.raises(ConfigError):
            normalized_ground_state(1.0, ModelParams(gamma=1.0, sigma=2.0, dim=1), grid, cfg)


class TestCheckpointSeed:
    def test_seed_from_checkpoint(self, tmp_path, grid, params, profile):
        path = write_checkpoint(profile, params.gamma, params.sigma, tmp_path / 'seed.bin')
        cfg = SolverConfig.from_settings(seed_profile='checkpoint', seed_checkpoint=str(path))
        seed = load_seed(cfg, grid)
        assert np.array_equal(seed.values, profile.values)
        assert load_seed(SolverConfig.from_settings(), grid) is None

    def test_seed_on_another_grid(self, tmp_path, params, profile):
        path = write_checkpoint(profile, params.gamma, params.sigma, tmp_path / 'seed.bin')
        cfg = SolverConfig.from_settings(seed_profile='checkpoint', seed_checkpoint=str(path))
        with pytest.raises(DimensionMismatch):
            load_seed(cfg, make_grid(1, 32.0, 128))


class TestCriticalMass:
    @pytest.fixture(scope='class')
    def critical(self):
        return ModelParams(gamma=1.0, sigma=4.0, dim=1)

    def test_extremizer_identities(self, grid, cfg):
        extremizer = get_critical_extremizer(grid, cfg)
        assert extremizer.sharp_constant > 0
        assert identity_residuals(extremizer.field, 1.0, 0.0, 1.0, 1.0, 4.0).worst < 1e-8
        assert get_critical_extremizer(grid, cfg) is extremizer

    def test_gamma_scaling(self, grid, cfg, critical):
        base = critical_mass(critical, grid, cfg)
        doubled = critical_mass(critical.with_gamma(2.0), grid, cfg)
        assert doubled / base == pytest.approx(2.0 ** 0.25, rel=1e-12)

    def test_subcritical_mass_rejected(self, grid, cfg, critical):
        c_star = critical_mass(critical, grid, cfg)
        for factor in (0.9, 1.0):
            with pytest.raises(SubcriticalMass):
                normalized_ground_state(factor * c_star, critical, grid, cfg)

    def test_stationary_masses_exceed_critical_mass(self, grid, cfg, critical):
        c_star = critical_mass(critical, grid, cfg)
        points = mass_curve([0.5, 1.0, 2.0], critical, grid, cfg)
        assert all(pt.ok for pt in points)
        assert all(pt.mass > c_star for pt in points)

    def test_critical_mass_needs_critical_exponent(self, grid, cfg, params):
        with pytest.raises(ConfigError):
            critical_mass(params, grid, cfg)


class TestMinimax:
    @pytest.fixture(scope='class')
    def descent(self, grid, params, state):
        cfg = SolverConfig.from_settings(residual_tolerance=1e-8, max_iterations=20000)
        return minimax_descent(state.mass, params, grid, cfg)

    def test_cross_validation_gap(self, state):
        other = dataclasses.replace(state, energy=state.energy * (1.0 + 1e-3))
        with pytest.raises(CrossValidationError):
            cross_validate(state, other)
        assert cross_validate(state, state) == 0.0

    def test_converged_seed_stops_at_once(self, grid, params, state):
        cfg = SolverConfig.from_settings(residual_tolerance=1e-6)
        result = minimax_descent(state.mass, params, grid, cfg, seed=state.field)
        assert result.iterations == 1
        assert result.history == pytest.approx([result.energy], rel=1e-8)
        assert result.converged
        assert math.isclose(result.energy, state.energy, rel_tol=1e-8)

    def test_seed_outside_the_domain(self, grid, cfg):
        critical = ModelParams(gamma=1.0, sigma=4.0, dim=1)
        c = 1.2 * critical_mass(critical, grid, cfg)
        ripple = Field.from_function(grid, lambda x: np.cos(3.0 * x) * np.exp(-x ** 2 / 8.0))
        with pytest.raises(SeedOutsideDomain):
            minimax_descent(c, critical, grid, cfg, seed=ripple)

    @pytest.mark.slow
    def test_agrees_with_shooting(self, descent, state):
        assert descent.solver_tag == 'minimax_descent'
        assert descent.converged
        assert math.isclose(descent.energy, state.energy, rel_tol=1e-4)
        assert abs(descent.mass - state.mass) <= 1e-10 * state.mass

    @pytest.mark.slow
    def test_history_is_nonincreasing(self, descent):
        history = descent.history
        assert len(history) > 1
        assert all(b <= a + ROUNDOFF_ALLOWANCE * abs(a) for a, b in zip(history, history[1:]))

    @pytest.mark.slow
    def test_critical_plane_cross_validation(self):
        grid = make_grid(2, 25.6, 128)
        critical = ModelParams(gamma=1.0, sigma=2.0, dim=2)
        cfg = SolverConfig.from_settings()
        c = 1.3 * critical_mass(critical, grid, cfg)
        value = solve_both(c, critical, grid, cfg)
        assert value.gap <= 1e-4
        assert value.shooting.alpha > 0
        assert value.minimax.alpha > 0
        assert value.value == min(value.shooting.energy, value.minimax.energy)
