import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spectral.grid import Field, make_grid, to_spectrum
from dynamics.integrator import Verdict
from experiments.concentration import concentration_study, limit_residual, mass_centroid
from experiments.critical import ThresholdReport, compute_gn_constant, threshold_experiment
from experiments.gamma_curve import gamma_curve, is_monotone, is_strictly_decreasing
from experiments.random_fields import random_fields
from experiments.stability import global_existence_experiment, instability_experiment
from solvers.critical import critical_mass, get_critical_extremizer
from solvers.ground_state import mass_curve, normalized_ground_state, solve_fixed_multiplier
from solvers.stationary import SolverConfig
from variational.functionals import ModelParams, mass
from utils.errors import ConfigError


@pytest.fixture(scope='module')
def grid():
    return make_grid(1, 32.0, 256)


@pytest.fixture(scope='module')
def cfg():
    return SolverConfig.from_settings()


@pytest.fixture(scope='module')
def critical():
    return ModelParams(gamma=1.0, sigma=4.0, dim=1)


@pytest.fixture(scope='module')
def supercritical():
    return ModelParams(gamma=1.0, sigma=6.0, dim=1)


@pytest.fixture(scope='module')
def consts(critical, grid, cfg):
    return compute_gn_constant(critical, grid, cfg, certify_samples=20, seed=3, run_oracle=False)


class TestRandomFields:
    def test_seeded_streams_repeat(self, grid):
        first = [u.values for u in random_fields(grid, 3, seed=17)]
        second = [u.values for u in random_fields(grid, 3, seed=17)]
        for a, b in zip(first, second):
            assert np.array_equal(a, b)

    def test_band_limited(self, grid):
        u = next(random_fields(grid, 1, seed=1))
        coefficients = to_spectrum(u.values)
        outside = np.sqrt(grid.k_squared) > 0.5 * grid.nyquist
        assert np.max(np.abs(coefficients[outside])) < 1e-12 * np.max(np.abs(coefficients))

    def test_real_samples(self, grid):
        assert all(u.is_real() for u in random_fields(grid, 4, seed=2, real=True))


class TestSweepOrdering:
    def test_is_monotone(self):
        assert is_monotone([3.0, 2.0, 2.0])
        assert is_monotone([1.0, 1.0 + 1e-7])
        assert not is_monotone([1.0, 1.1])
        assert is_monotone([])

    def test_is_strictly_decreasing(self):
        assert is_strictly_decreasing([3.0, 2.0, 1.0])
        assert not is_strictly_decreasing([3.0, 3.0])


class TestGammaCurveArguments:
    def test_empty_sweep(self, supercritical, grid, cfg):
        with pytest.raises(ConfigError):
            gamma_curve([], supercritical, grid, cfg)

    def test_unordered_sweep(self, supercritical, grid, cfg):
        with pytest.raises(ConfigError):
            gamma_curve([2.0, 1.0], supercritical, grid, cfg)

    def test_sweep_below_threshold(self, supercritical, grid, cfg):
        with pytest.raises(ConfigError):
            gamma_curve([0.0, 1.0], supercritical, grid, cfg)


class TestGammaCurveSweeps:
    @pytest.mark.slow
    def test_supercritical_line(self, supercritical, grid, cfg):
        lo, hi = sorted(pt.mass for pt in mass_curve([0.25, 4.0], supercritical, grid, cfg))
        curve = gamma_curve(list(np.linspace(lo, hi, 6)), supercritical, grid, cfg)
        assert curve.strictly_decreasing
        assert all(a > 0 for a in curve.alphas)
        assert all(pt.gap <= 1e-4 for pt in curve.points)

    @pytest.mark.slow
    def test_critical_line(self, critical, grid, cfg, consts):
        masses = [consts.c_star * f for f in (1.2, 1.3, 1.4, 1.5, 1.6, 1.7)]
        curve = gamma_curve(masses, critical, grid, cfg)
        assert curve.strictly_decreasing
        assert all(a > 0 for a in curve.alphas)

    @pytest.mark.slow
    def test_critical_plane(self, cfg):
        plane = make_grid(2, 25.6, 128)
        p = ModelParams(gamma=1.0, sigma=2.0, dim=2)
        c_star = critical_mass(p, plane, cfg)
        curve = gamma_curve([c_star * f for f in (1.3, 1.4, 1.5, 1.6, 1.7, 1.8)], p, plane, cfg)
        assert curve.strictly_decreasing
        assert all(a > 0 for a in curve.alphas)

    @pytest.mark.slow
    def test_level_grows_toward_critical_mass(self, critical, cfg):
        fine = make_grid(1, 32.0, 1024)
        c_star = critical_mass(critical, fine, cfg)
        # ascending masses c_star (1 + 2^-n) for n = 4, 3, 2, 1
        masses = [c_star * (1.0 + 2.0 ** -n) for n in (4, 3, 2, 1)]
        curve = gamma_curve(masses, critical, fine, cfg)
        by_n = curve.gammas[::-1]
        assert all(b > a for a, b in zip(by_n, by_n[1:]))


class TestCriticalConstants:
    def test_constants(self, consts, critical):
        assert consts.B_crit > 0
        assert_allclose(consts.C_of_N, 5.0 / consts.B_crit, rtol=1e-14)
        assert_allclose(consts.c_star, consts.C_of_N ** 0.25, rtol=1e-14)
        assert consts.identity_residual() < 1e-12
        assert consts.certification_samples == 20
        assert consts.certification_ratio <= 1.0 + 1e-6

    def test_record(self, consts):
        record = consts.to_record()
        assert record['dim'] == 1
        assert record['oracle_B'] is None
        assert record['extremizer_mass'] == pytest.approx(mass(consts.extremizer))

    def test_needs_critical_exponent(self, supercritical, grid, cfg):
        with pytest.raises(ConfigError):
            compute_gn_constant(supercritical, grid, cfg, certify_samples=0, run_oracle=False)

    @pytest.mark.slow
    def test_gradient_flow_oracle(self, critical, grid, cfg):
        result = compute_gn_constant(critical, grid, cfg, certify_samples=0, run_oracle=True)
        assert abs(result.oracle_B - result.B_crit) <= 1e-4 * result.B_crit


class TestThreshold:
    def test_report(self, critical, grid, cfg, consts):
        report = threshold_experiment(critical, grid, consts, cfg, samples=20, seed=8)
        assert report.violations == []
        assert report.subcritical_rejected
        assert report.blowup_energy < -1e3
        assert report.ray_formula_defect < 1e-8
        assert report.subcritical_mass == pytest.approx(0.9 * consts.c_star)

    def test_needs_critical_exponent(self, supercritical, grid, consts):
        with pytest.raises(ConfigError):
            threshold_experiment(supercritical, grid, consts)

    def test_ray_off_its_closed_form_is_a_violation(self):
        report = ThresholdReport(
            subcritical_mass=1.0,
            samples=0,
            lower_bound_violations=0,
            worst_lower_bound_margin=0.0,
            supercritical_mass=1.2,
            blowup_lambda=64.0,
            blowup_energy=-2e3,
            ray_formula_defect=1e-6,
            eventually_decreasing=True,
            critical_coefficient=0.0,
            subcritical_rejected=True,
        )
        assert len(report.violations) == 1
        assert 'closed form' in report.violations[0]


class TestConcentrationHelpers:
    def test_mass_centroid(self, grid):
        shifted = Field.from_function(grid, lambda x: np.exp(-(x - 1.5) ** 2))
        assert_allclose(mass_centroid(shifted), (1.5,), atol=1e-12)

    def test_limit_residual_of_extremizer(self, critical, grid, cfg):
        extremizer = get_critical_extremizer(grid, cfg)
        assert limit_residual(extremizer.field, critical) < 1e-8

    def test_short_sequence_rejected(self, critical, grid, cfg, consts):
        with pytest.raises(ConfigError):
            concentration_study(2, critical, grid, cfg, consts)

    @pytest.mark.slow
    def test_concentration(self, critical, cfg):
        grid = make_grid(1, 32.0, 1024)
        consts = compute_gn_constant(critical, grid, cfg, certify_samples=0, run_oracle=False)
        report = concentration_study(4, critical, grid, cfg, consts)
        assert report.violations == []
        assert len(report.rows()) == 4
        assert report.limit_residuals[-1] <= 0.1 * report.limit_residuals[0]
        assert math.isnan(report.rows()[-1][4])


class TestStability:
    @pytest.fixture(scope='class')
    def state(self, supercritical, grid, cfg):
        u = solve_fixed_multiplier(1.0, supercritical, grid, cfg)
        return normalized_ground_state(mass(u), supercritical, grid, cfg)

    def test_dilation_must_exceed_one(self, supercritical, grid, state):
        with pytest.raises(ValueError):
            instability_experiment(state.mass, 1.0, supercritical, grid, 1.0, state=state)

    def test_perturbed_datum_leaves_the_ground_level(self, supercritical, grid, state):
        report = instability_experiment(state.mass, 1.05, supercritical, grid, 0.01, state=state)
        assert report.beta > 0
        assert report.initial_pohozaev < 0
        assert not report.in_oc
        assert report.to_record()['verdict'] == report.verdict.value

    @pytest.mark.slow
    def test_global_existence(self, supercritical, grid, state):
        report = global_existence_experiment(state.mass, supercritical, grid, 1.0, state=state)
        assert report.in_oc
        assert report.verdict is Verdict.COMPLETED
        assert report.violations == []
        report.raise_on_violations()

    @pytest.mark.slow
    def test_global_existence_at_critical_exponent(self, critical, grid, cfg, consts):
        report = global_existence_experiment(1.2 * consts.c_star, critical, grid, 50.0, cfg=cfg)
        assert report.in_oc
        assert report.verdict is Verdict.COMPLETED
        assert report.trace.times[-1] == pytest.approx(50.0)
        assert all(q > 0 for q in report.trace.q_series)
        assert report.violations == []

    @pytest.mark.slow
    def test_instability_in_the_plane(self, cfg):
        plane = make_grid(2, 25.6, 256)
        p = ModelParams(gamma=1.0, sigma=2.0, dim=2)
        c = 1.3 * critical_mass(p, plane, cfg)
        report = instability_experiment(c, 1.05, p, plane, 50.0, cfg=cfg)
        assert report.beta > 0
        assert report.verdict is not Verdict.COMPLETED
        assert report.trace.bilap_growth() >= 10.0
        assert report.virial_within_budget
        assert report.violations == []
