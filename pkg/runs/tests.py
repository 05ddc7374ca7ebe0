import json
import shutil
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from spectral.checkpoint import write_checkpoint
from spectral.grid import Field, make_grid
from dynamics.integrator import TRACE_HEADER
from solvers.ground_state import solve_fixed_multiplier
from solvers.stationary import SolverConfig
from variational.functionals import ModelParams, mass
from utils.errors import ConfigParseError, ConfigValidationError
from utils.keyvalue import read_document

from .config import config_to_dict, parse_config, serialize_config
from .dispatch import CommandFactory
from .models import Run
from .serializers import COMMANDS
from .storage import format_table, read_ground_state, sidecar_path


class ParseConfigTests(TestCase):
    def test_defaults(self):
        cfg = parse_config("command: gn-constant\nmodel.sigma: 4\nmodel.dim: 1\n")
        self.assertEqual(cfg.model.gamma, 1.0)
        self.assertEqual(cfg.grid, make_grid(1, 32.0, 512))
        self.assertEqual(cfg.solver.alpha_bracket, (0.05, 50.0))
        self.assertEqual(cfg.dynamics.horizon, 50.0)
        self.assertEqual(cfg.sweep.n_max, 4)

    def test_aliases_and_overrides(self):
        cfg = parse_config("sigma = 2\ndim = 2\n", {'command': 'ground-state', 'mass': '30', 'grid.points': '64'})
        self.assertEqual(cfg.model.mass_target, 30)
        self.assertEqual(cfg.grid, make_grid(2, 25.6, 64))

    def test_invalid_values_collected(self):
        with self.assertRaises(ConfigValidationError) as ctx:
            parse_config("command: ground-state\nmodel.sigma: -1\nmodel.dim: 3\nmodel.mass: 2\n")
        keys = ' '.join(ctx.exception.errors)
        self.assertIn('model.sigma', keys)
        self.assertIn('model.dim', keys)

    def test_unknown_key_reports_line(self):
        with self.assertRaises(ConfigParseError) as ctx:
            parse_config("command: gn-constant\nmodel.sigma: 4\nmodel.colour: red\n")
        self.assertEqual(ctx.exception.line, 3)
        self.assertEqual(ctx.exception.key, 'model.colour')

    def test_alias_and_dotted_key_collide(self):
        with self.assertRaises(ConfigParseError):
            parse_config("command: gn-constant\nsigma: 4\nmodel.sigma: 4\nmodel.dim: 1\n")

    def test_critical_command_needs_critical_exponent(self):
        with self.assertRaises(ConfigValidationError):
            parse_config("command: threshold\nmodel.sigma: 6\nmodel.dim: 1\n")

    def test_mass_factor_needs_critical_exponent(self):
        with self.assertRaises(ConfigValidationError):
            parse_config("command: ground-state\nmodel.sigma: 6\nmodel.dim: 1\nmodel.mass_factor: 1.2\n")

    def test_serialized_document_parses_back(self):
        cfg = parse_config(
            "command: gamma-curve\nmodel.sigma: 4\nmodel.dim: 1\nsweep.mass_factors: 1.1, 1.5\nrng_seed: 7\n"
        )
        again = parse_config(serialize_config(cfg))
        self.assertEqual(config_to_dict(again), config_to_dict(cfg))
        self.assertEqual(again.sweep.mass_factors, [1.1, 1.5])

    def test_single_sweep_value_is_a_list(self):
        cfg = parse_config("command: gamma-curve\nmodel.sigma: 6\nmodel.dim: 1\nsweep.masses: 3.5\n")
        self.assertEqual(cfg.sweep.masses, [3.5])


class CommandFactoryTests(TestCase):
    def test_every_command_is_registered(self):
        self.assertEqual(CommandFactory.names(), sorted(COMMANDS))

    def test_table_format(self):
        self.assertEqual(format_table('a,b', []), b'a,b\n')
        self.assertEqual(format_table('a,b', [[1.0, 0.1]]), b'a,b\n1,0.10000000000000001\n')


class LabCommandTests(TestCase):
    """End-to-end runs through manage.py lab on a small grid"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        grid = make_grid(1, 32.0, 256)
        params = ModelParams(gamma=1.0, sigma=6.0, dim=1)
        cls.grid = grid
        cls.ground_mass = mass(solve_fixed_multiplier(1.0, params, grid, SolverConfig.from_settings()))

    def setUp(self):
        self.workdir = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.workdir, ignore_errors=True)

    def lab(self, command, output, *assignments):
        out = StringIO()
        arguments = ['--output', str(output), '--grid-points', '256', '--extent', '32']
        for assignment in assignments:
            arguments += ['--set', assignment]
        call_command('lab', command, *arguments, stdout=out)
        return out.getvalue()

    def ground_state(self, output):
        return self.lab('ground-state', output, 'sigma=6', 'dim=1', f"mass={self.ground_mass!r}")

    def test_ground_state_artifacts(self):
        output = self.workdir / 'gs'
        stdout = self.ground_state(output)
        self.assertIn('ground-state finished', stdout)

        state = read_ground_state(output / 'ground_state.bin', expected_grid=self.grid)
        self.assertAlmostEqual(state.alpha, 1.0, places=4)
        for name in ('report.txt', 'config.txt', 'mass_curve.csv', 'history.csv', 'ground_state.txt'):
            self.assertTrue((output / name).exists(), name)

        manifest = json.loads((output / 'manifest.json').read_text())
        self.assertEqual(manifest['exit_status'], 0)
        self.assertEqual(manifest['grid'], {'dim': 1, 'extent': 32.0, 'points': 256})
        self.assertIn('numpy', manifest['versions'])
        self.assertIn('ground_state.bin', manifest['artifacts'])

        run = Run.objects.get()
        self.assertEqual(run.status, 'succeeded')
        self.assertEqual(run.config['model.sigma'], 6.0)

    def test_identical_runs_write_identical_tables(self):
        self.ground_state(self.workdir / 'first')
        self.ground_state(self.workdir / 'second')
        for name in ('mass_curve.csv', 'history.csv', 'ground_state.bin'):
            self.assertEqual(
                (self.workdir / 'first' / name).read_bytes(),
                (self.workdir / 'second' / name).read_bytes(),
                name,
            )

    def test_evolve_from_checkpoint(self):
        gaussian = Field.from_function(self.grid, lambda x: np.exp(-x ** 2))
        checkpoint = write_checkpoint(gaussian, 1.0, 4.0, self.workdir / 'datum.bin')
        output = self.workdir / 'evolve'
        self.lab(
            'evolve', output, 'sigma=4', 'dim=1', 'horizon=0.01', 'tau=0.001',
            f"dynamics.initial_checkpoint={checkpoint}",
        )
        lines = (output / 'trace.csv').read_text().splitlines()
        self.assertEqual(lines[0], TRACE_HEADER)
        self.assertTrue((output / 'final_state.bin').exists())
        report = (output / 'report.txt').read_text()
        self.assertIn('verdict: completed', report)

        sidecar = read_document(sidecar_path(output / 'final_state.bin'))
        self.assertEqual(sidecar['verdict'], 'completed')
        self.assertAlmostEqual(sidecar['final_time'], 0.01, places=12)
        self.assertEqual(sidecar['restarts'], 0)
        self.assertEqual(sidecar['steps'], 10)

    def test_config_error_exit_status(self):
        output = self.workdir / 'bad'
        with self.assertRaises(CommandError) as ctx:
            self.lab('ground-state', output, 'sigma=-1', 'dim=1', 'mass=1')
        self.assertEqual(ctx.exception.returncode, 2)

        error = json.loads((output / 'error.json').read_text())
        self.assertEqual(error['category'], 'ConfigError')
        self.assertEqual(error['exit_code'], 2)

        run = Run.objects.get()
        self.assertEqual((run.status, run.exit_code), ('failed', 2))

        out = StringIO()
        call_command('run_history', stdout=out)
        self.assertIn('1 runs, 1 failed', out.getvalue())

    def test_malformed_assignment(self):
        with self.assertRaises(CommandError) as ctx:
            self.lab('ground-state', self.workdir / 'bad', 'sigma')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_subcritical_mass_exit_status(self):
        output = self.workdir / 'subcritical'
        with self.assertRaises(CommandError) as ctx:
            self.lab('ground-state', output, 'sigma=4', 'dim=1', 'mass_factor=0.9')
        self.assertEqual(ctx.exception.returncode, 3)
        error = json.loads((output / 'error.json').read_text())
        self.assertEqual(error['type'], 'SubcriticalMass')
        self.assertEqual(json.loads((output / 'manifest.json').read_text())['exit_status'], 3)
