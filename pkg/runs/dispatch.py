"""
Command dispatch: one LabCommand per subcommand, and the run driver that
wraps them with artifacts, manifests and error records
"""
import dataclasses
import logging
import math
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from spectral.checkpoint import read_checkpoint
from spectral.grid import integrate
from dynamics.integrator import TRACE_HEADER, EvolutionTrace, evolve
from experiments import concentration, gamma_curve as gamma_curve_module
from experiments.critical import CriticalConstants, compute_gn_constant, threshold_experiment
from experiments.stability import StabilityReport, global_existence_experiment, instability_experiment
from solvers.critical import critical_mass
from solvers.ground_state import normalized_ground_state
from variational.functionals import mass
from utils.errors import ConfigError, InvariantViolation, LabError, exit_code_for

from .config import RunConfig, config_to_dict, serialize_config
from .storage import RunArtifacts, default_output_dir

logger = logging.getLogger(__name__)

MASS_CURVE_HEADER = 'alpha,mass,energy,iterations'
HISTORY_HEADER = 'iteration,residual'
RAY_HEADER = 'lambda,energy'


class LabCommand(ABC):
    """Base class for subcommands"""

    name = ''

    def __init__(self, cfg: RunConfig, artifacts: RunArtifacts):
        self.cfg = cfg
        self.artifacts = artifacts
        self.p = cfg.model
        self.grid = cfg.grid
        self.solver = cfg.solver

    @abstractmethod
    def execute(self) -> Dict[str, Any]:
        """Run the command, write its artifacts and return the report values"""
        pass

    def resolve_mass(self) -> float:
        """Absolute mass, or mass_factor times c_N*"""
        if self.p.mass_target is not None:
            return self.p.mass_target
        if self.cfg.mass_factor is not None:
            return self.cfg.mass_factor * critical_mass(self.p, self.grid, self.solver)
        raise ConfigError(f"{self.name} needs model.mass or model.mass_factor")

    def critical_constants(self, certify_samples: int = 0, run_oracle: bool = False) -> CriticalConstants:
        return compute_gn_constant(
            self.p, self.grid, self.solver,
            certify_samples=certify_samples, seed=self.cfg.rng_seed, run_oracle=run_oracle,
        )

    def write_trace(self, trace: EvolutionTrace):
        self.artifacts.write_table('trace.csv', TRACE_HEADER, trace.rows())
        if trace.final_state is not None:
            self.artifacts.write_field(
                'final_state', trace.final_state, self.p.gamma, self.p.sigma, trace.to_record()
            )

    def finish(self, values: Dict[str, Any], violations: List[str]) -> Dict[str, Any]:
        """Write the report, then fail with every violation it lists"""
        values = dict(values)
        values['violations'] = len(violations)
        header = '\n'.join([f"{self.name} report"] + [f"violation: {v}" for v in violations])
        self.artifacts.write_report(values, header)
        if violations:
            raise InvariantViolation(violations)
        return values


class GnConstantCommand(LabCommand):
    name = 'gn-constant'

    def execute(self) -> Dict[str, Any]:
        consts = self.critical_constants(self.cfg.sweep.certify_samples, run_oracle=True)
        doubled = compute_gn_constant(
            self.p.with_gamma(2.0 * self.p.gamma), self.grid, self.solver,
            certify_samples=0, run_oracle=False,
        )
        values = consts.to_record()
        values['c_star_doubled_gamma'] = doubled.c_star
        values['c_star_scaling_ratio'] = doubled.c_star / consts.c_star
        self.artifacts.write_field(
            'extremizer', consts.extremizer, 1.0, self.p.sigma,
            {'B_crit': consts.B_crit, 'mass': mass(consts.extremizer), 'dim': self.grid.dim},
        )
        expected_ratio = 2.0 ** (self.grid.dim / 4.0)
        violations = []
        if abs(values['c_star_scaling_ratio'] / expected_ratio - 1.0) > 1e-8:
            violations.append(f"c_star scales by {values['c_star_scaling_ratio']:.12g}, expected {expected_ratio:.12g}")
        return self.finish(values, violations)


class GroundStateCommand(LabCommand):
    name = 'ground-state'

    def execute(self) -> Dict[str, Any]:
        c = self.resolve_mass()
        state = normalized_ground_state(c, self.p, self.grid, self.solver)
        self.artifacts.write_ground_state('ground_state', state)
        self.artifacts.write_table(
            'mass_curve.csv', MASS_CURVE_HEADER,
            [[pt.alpha, pt.mass, pt.energy, pt.iterations] for pt in state.mass_curve],
        )
        self.artifacts.write_table(
            'history.csv', HISTORY_HEADER,
            [[i + 1, r] for i, r in enumerate(state.history)],
        )
        values = state.to_record()
        values['requested_mass'] = c
        values['identity_residual'] = state.identities().worst
        values['sign_changes'] = state.sign_changes()
        values['rearrangement_distance'] = state.rearrangement_distance()
        return self.finish(values, [])


class GammaCurveCommand(LabCommand):
    name = 'gamma-curve'

    def masses(self) -> List[float]:
        sweep = self.cfg.sweep
        if sweep.masses is not None:
            return list(sweep.masses)
        c_star = critical_mass(self.p, self.grid, self.solver)
        return [factor * c_star for factor in sweep.mass_factors]

    def execute(self) -> Dict[str, Any]:
        curve = gamma_curve_module.gamma_curve(self.masses(), self.p, self.grid, self.solver)
        self.artifacts.write_table('gamma_curve.csv', gamma_curve_module.CSV_HEADER, curve.rows())
        values = {
            'masses': len(curve.masses),
            'monotone': curve.monotone_ok,
            'strictly_decreasing': curve.strictly_decreasing,
            'largest_solver_gap': max(pt.gap for pt in curve.points),
            'unconverged_minimax': sum(not pt.minimax.converged for pt in curve.points),
            'smallest_alpha': min(curve.alphas),
        }
        violations = [] if curve.monotone_ok else ["Gamma is not nonincreasing over the sweep"]
        violations += [f"alpha at mass {c:.10g} is {a:.6g}" for c, a in zip(curve.masses, curve.alphas) if not a > 0]
        return self.finish(values, violations)


class EvolveCommand(LabCommand):
    """Evolve a checkpointed state, or the ground state of the configured mass"""

    name = 'evolve'

    def execute(self) -> Dict[str, Any]:
        dyn = self.cfg.dynamics
        state = None
        if dyn.initial_checkpoint:
            psi0, _ = read_checkpoint(dyn.initial_checkpoint, expected_grid=self.grid)
        else:
            state = normalized_ground_state(self.resolve_mass(), self.p, self.grid, self.solver)
            psi0 = state.field

        trace = evolve(
            psi0, dyn.horizon, dyn.tau, self.p, dyn.virial(self.grid),
            monitor=dyn.monitor(), output_interval=dyn.output_interval,
        )
        self.write_trace(trace)
        values = {
            'verdict': trace.verdict.value,
            'tau': trace.tau,
            'steps': trace.steps,
            'restarts': trace.restarts,
            'final_time': trace.times[-1],
            'mass_deviation': trace.mass_deviation(),
            'energy_deviation': trace.energy_deviation(),
            'bilap_growth': trace.bilap_growth(),
        }
        if state is not None:
            # a ground state only rotates its phase: psi(t) = exp(i alpha t) u
            t = trace.times[-1]
            exact = np.exp(1j * state.alpha * t) * state.field.values
            error = integrate(self.grid, np.abs(trace.final_state.values - exact) ** 2)
            values['alpha'] = state.alpha
            values['standing_wave_error'] = math.sqrt(error / state.mass)
        return self.finish(values, [])


class _StabilityCommand(LabCommand):
    def record(self, report: StabilityReport) -> Dict[str, Any]:
        self.write_trace(report.trace)
        return self.finish(report.to_record(), report.violations)


class GlobalExistenceCommand(_StabilityCommand):
    name = 'global-existence'

    def execute(self) -> Dict[str, Any]:
        dyn = self.cfg.dynamics
        report = global_existence_experiment(
            self.resolve_mass(), self.p, self.grid, dyn.horizon,
            cfg=self.solver, tau=dyn.tau, vcfg=dyn.virial(self.grid),
            monitor=dyn.monitor(), dilation=dyn.lambda_global,
        )
        return self.record(report)


class InstabilityCommand(_StabilityCommand):
    name = 'instability'

    def execute(self) -> Dict[str, Any]:
        dyn = self.cfg.dynamics
        report = instability_experiment(
            self.resolve_mass(), dyn.lambda_perturb, self.p, self.grid, dyn.horizon,
            cfg=self.solver, tau=dyn.tau, vcfg=dyn.virial(self.grid), monitor=dyn.monitor(),
        )
        return self.record(report)


class ConcentrationCommand(LabCommand):
    name = 'concentration'

    def execute(self) -> Dict[str, Any]:
        consts = self.critical_constants()
        report = concentration.concentration_study(self.cfg.sweep.n_max, self.p, self.grid, self.solver, consts)
        self.artifacts.write_table('concentration.csv', concentration.CSV_HEADER, report.rows())
        for n, w in enumerate(report.rescaled_fields, 1):
            self.artifacts.write_field(f"rescaled_{n}", w, self.p.gamma, self.p.sigma)
        values = {
            'c_star': consts.c_star,
            'n_max': len(report.c_sequence),
            'first_limit_residual': report.limit_residuals[0],
            'last_limit_residual': report.limit_residuals[-1],
            'residual_reduction': report.limit_residuals[0] / report.limit_residuals[-1],
        }
        return self.finish(values, report.violations)


class ThresholdCommand(LabCommand):
    name = 'threshold'

    def execute(self) -> Dict[str, Any]:
        consts = self.critical_constants()
        report = threshold_experiment(
            self.p, self.grid, consts, self.solver,
            samples=self.cfg.sweep.threshold_samples, seed=self.cfg.rng_seed,
        )
        self.artifacts.write_table(
            'ray.csv', RAY_HEADER,
            [[2.0 ** k, e] for k, e in enumerate(report.ray_energies)],
        )
        values = {k: v for k, v in dataclasses.asdict(report).items() if k != 'ray_energies'}
        values['c_star'] = consts.c_star
        return self.finish(values, report.violations)


class CommandFactory:
    """Factory class to get the command for a subcommand name"""

    _commands = {
        command.name: command
        for command in (
            GnConstantCommand,
            GroundStateCommand,
            GammaCurveCommand,
            EvolveCommand,
            GlobalExistenceCommand,
            InstabilityCommand,
            ConcentrationCommand,
            ThresholdCommand,
        )
    }

    @classmethod
    def names(cls) -> List[str]:
        return sorted(cls._commands)

    @classmethod
    def get_command(cls, cfg: RunConfig, artifacts: RunArtifacts) -> LabCommand:
        command_class = cls._commands.get(cfg.command)
        if not command_class:
            raise ConfigError(f"Unsupported command: {cfg.command}")
        return command_class(cfg, artifacts)


@dataclass
class RunOutcome:
    command: str
    exit_code: int
    output_dir: Path
    wall_time: float
    report: Dict[str, Any] = dataclasses.field(default_factory=dict)
    error: Optional[BaseException] = None


def run(cfg: RunConfig) -> RunOutcome:
    """
    Dispatch a validated configuration and leave its artifacts on disk

    Every run writes manifest.json; failed runs also write error.json with
    the error category. Exceptions are returned in the outcome, not raised.

    Args:
        cfg: Validated configuration

    Returns:
        RunOutcome with the exit status
    """
    output_dir = Path(cfg.output_dir) if cfg.output_dir else default_output_dir(cfg.command)
    artifacts = RunArtifacts(output_dir)
    config_text = serialize_config(cfg)
    artifacts.write_report(config_to_dict(cfg), 'configuration echo', name='config.txt')

    started = time.perf_counter()
    report: Dict[str, Any] = {}
    error: Optional[BaseException] = None
    try:
        report = CommandFactory.get_command(cfg, artifacts).execute()
        exit_code = 0
    except LabError as e:
        logger.error("%s failed (%s): %s", cfg.command, e.category, e)
        error, exit_code = e, exit_code_for(e)
    except Exception as e:
        logger.exception("%s failed unexpectedly", cfg.command)
        error, exit_code = e, exit_code_for(e)
    wall_time = time.perf_counter() - started

    if error is not None:
        artifacts.write_error(error)
    artifacts.write_manifest(
        cfg.command, config_text, config_to_dict(cfg), cfg.grid, cfg.rng_seed, wall_time, exit_code,
    )
    logger.info("%s finished with exit status %d in %.2fs (%s)", cfg.command, exit_code, wall_time, output_dir)
    return RunOutcome(cfg.command, exit_code, output_dir, wall_time, report, error)
