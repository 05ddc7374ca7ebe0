"""
Iterative solvers for gamma Lap^2 v - mu Lap v + omega v = d |v|^{2 sigma} v

Both solvers work on the coefficient array directly. The residual is
measured spectrally as ||l F - N_hat|| / ||F|| with l the linear symbol, so
it never pays for a round trip through physical space.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from django.conf import settings

from spectral.checkpoint import read_checkpoint
from spectral.grid import Field, GridSpec, from_spectrum, to_spectrum
from utils.errors import ConfigError, DivergedToZero, NonConvergence, ZeroSeed

logger = logging.getLogger(__name__)

COLLAPSE_MASS = 1e-12
SEED_PROFILES = ('gaussian', 'checkpoint')


@dataclass(frozen=True)
class StationaryProblem:
    """Coefficients of gamma Lap^2 v - mu Lap v + omega v = d |v|^{2 sigma} v"""

    gamma: float
    mu: float
    omega: float
    d: float
    sigma: float

    def __post_init__(self):
        if not self.gamma > 0 or self.mu < 0 or not self.omega > 0:
            raise ConfigError(
                f"Linear operator is not positive: gamma={self.gamma}, mu={self.mu}, omega={self.omega}"
            )
        if not self.d > 0 or not self.sigma > 0:
            raise ConfigError(f"Nonlinearity must be focusing: d={self.d}, sigma={self.sigma}")

    @property
    def degree(self) -> float:
        """Nonlinearity degree 2 sigma + 1"""
        return 2.0 * self.sigma + 1.0

    def symbol(self, k2: np.ndarray) -> np.ndarray:
        return self.gamma * k2 ** 2 + self.mu * k2 + self.omega

    def nonlinearity(self, values: np.ndarray) -> np.ndarray:
        return self.d * np.abs(values) ** (2.0 * self.sigma) * values

    def length_scale(self) -> float:
        return (self.gamma / self.omega) ** 0.25


@dataclass(frozen=True)
class SolverConfig:
    """
    Iteration controls shared by the stationary solvers

    Args:
        max_iterations: Iteration cap for a single solve
        residual_tolerance: Target relative residual
        petviashvili_exponent: Stabilizing exponent, p/(p-1) for degree p when None
        alpha_bracket: Multiplier range scanned by the shooting solver
        scan_points: Log-spaced samples of the multiplier range
        seed_profile: 'gaussian' or 'checkpoint'
        seed_checkpoint: Checkpoint path used when seed_profile is 'checkpoint'
    """

    max_iterations: int = 5000
    residual_tolerance: float = 1e-10
    petviashvili_exponent: Optional[float] = None
    alpha_bracket: Tuple[float, float] = (0.05, 50.0)
    scan_points: int = 13
    seed_profile: str = 'gaussian'
    seed_checkpoint: Optional[str] = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be positive, got {self.max_iterations}")
        if not self.residual_tolerance > 0:
            raise ConfigError(f"residual_tolerance must be positive, got {self.residual_tolerance}")
        low, high = self.alpha_bracket
        if not 0 < low < high:
            raise ConfigError(f"alpha_bracket must be ordered and positive, got {self.alpha_bracket}")
        if self.scan_points < 2:
            raise ConfigError(f"scan_points must be at least 2, got {self.scan_points}")
        if self.seed_profile not in SEED_PROFILES:
            raise ConfigError(f"Unknown seed_profile '{self.seed_profile}'")
        if self.seed_profile == 'checkpoint' and not self.seed_checkpoint:
            raise ConfigError("seed_profile 'checkpoint' needs seed_checkpoint")

    @classmethod
    def from_settings(cls, **overrides) -> 'SolverConfig':
        values = {
            'max_iterations': settings.SOLVER_MAX_ITERATIONS,
            'residual_tolerance': settings.SOLVER_RESIDUAL_TOLERANCE,
            'alpha_bracket': (settings.ALPHA_BRACKET_MIN, settings.ALPHA_BRACKET_MAX),
            'scan_points': settings.ALPHA_SCAN_POINTS,
        }
        values.update(overrides)
        return cls(**values)

    def exponent_for(self, problem: StationaryProblem) -> float:
        if self.petviashvili_exponent is not None:
            return self.petviashvili_exponent
        p = problem.degree
        return p / (p - 1.0)


@dataclass
class StationaryResult:
    field: Field
    iterations: int
    residual: float
    history: List[float] = field(default_factory=list)


def gaussian_seed(problem: StationaryProblem, grid: GridSpec) -> Field:
    """Even Gaussian with the linear length scale and the balancing amplitude"""
    width = min(problem.length_scale(), grid.extent / 10.0)
    amplitude = (problem.omega / problem.d) ** (1.0 / (2.0 * problem.sigma))
    return Field(grid, amplitude * np.exp(-(grid.radius / width) ** 2))


def load_seed(cfg: SolverConfig, grid: GridSpec) -> Optional[Field]:
    """Checkpointed seed when seed_profile is 'checkpoint', else None"""
    if cfg.seed_profile != 'checkpoint':
        return None
    seed, _ = read_checkpoint(cfg.seed_checkpoint, expected_grid=grid)
    if seed.grid != grid:
        raise ConfigError(f"Seed checkpoint {cfg.seed_checkpoint} has extent {seed.grid.extent}, expected {grid.extent}")
    logger.info("Seeding from checkpoint %s", cfg.seed_checkpoint)
    return seed


def _spectral_residual(symbol: np.ndarray, coefficients: np.ndarray, nonlinear: np.ndarray) -> float:
    norm = np.linalg.norm(coefficients)
    return float(np.linalg.norm(symbol * coefficients - nonlinear) / norm)


def _prepare_seed(problem: StationaryProblem, grid: GridSpec, seed: Optional[Field]):
    seed = seed if seed is not None else gaussian_seed(problem, grid)
    if seed.grid != grid:
        raise ConfigError("Seed field lives on a different grid")
    if not np.any(seed.values):
        raise ZeroSeed("The zero field is a trivial fixed point")
    return seed, seed.is_real()


def _realize(coefficients: np.ndarray, real: bool) -> np.ndarray:
    values = from_spectrum(coefficients)
    return values.real if real else values


def petviashvili(
    problem: StationaryProblem,
    grid: GridSpec,
    cfg: SolverConfig,
    seed: Optional[Field] = None,
) -> StationaryResult:
    """
    Stabilized fixed-point iteration F <- S^e N_hat / l

    S = sum l |F|^2 / Re sum conj(F) N_hat is the stabilizing factor and e
    the configured exponent. A real seed keeps every iterate real.

    Args:
        problem: Stationary equation
        grid: Grid to solve on
        cfg: Iteration controls
        seed: Initial field (Gaussian when None)

    Returns:
        StationaryResult with the converged field
    """
    seed, real = _prepare_seed(problem, grid, seed)
    symbol = problem.symbol(grid.k_squared)
    exponent = cfg.exponent_for(problem)
    coefficients = to_spectrum(seed.values)
    history: List[float] = []

    for iteration in range(1, cfg.max_iterations + 1):
        values = _realize(coefficients, real)
        nonlinear = to_spectrum(problem.nonlinearity(values))
        numerator = float(np.sum(symbol * np.abs(coefficients) ** 2))
        denominator = float(np.real(np.vdot(coefficients, nonlinear)))
        if not denominator > 0:
            raise DivergedToZero(f"Nonlinear pairing vanished at iteration {iteration}")

        residual = _spectral_residual(symbol, coefficients, nonlinear)
        history.append(residual)
        if not math.isfinite(residual):
            raise NonConvergence(f"Residual became non-finite at iteration {iteration}")
        if residual <= cfg.residual_tolerance:
            logger.debug(
                "Petviashvili converged in %d iterations (residual %.3e)", iteration, residual
            )
            return StationaryResult(Field(grid, values), iteration, residual, history)

        factor = numerator / denominator
        coefficients = factor ** exponent * nonlinear / symbol
        if float(np.sum(np.abs(coefficients) ** 2)) * grid.parseval_weight < COLLAPSE_MASS:
            raise DivergedToZero(f"Iterates collapsed to zero at iteration {iteration}")

        if iteration % 500 == 0:
            logger.debug("Petviashvili iteration %d: residual %.3e, S = %.12g", iteration, residual, factor)

    raise NonConvergence(
        f"Petviashvili did not reach residual {cfg.residual_tolerance:.1e} in "
        f"{cfg.max_iterations} iterations (last {history[-1]:.3e})"
    )


def nehari_gradient_flow(
    problem: StationaryProblem,
    grid: GridSpec,
    seed: Optional[Field] = None,
    time_step: Optional[float] = None,
    tolerance: float = 1e-9,
    max_iterations: int = 50000,
) -> StationaryResult:
    """
    Imaginary-time oracle for the stationary equation

    Each step is backward Euler in the linear part and explicit in the
    nonlinearity, F <- (F + dt N_hat)/(1 + dt l), followed by the real
    rescaling that puts the iterate back on the Nehari set
    sum l |F|^2 = Re sum conj(F) N_hat. Independent of the Petviashvili
    stabilization, so it serves as a cross-check.

    Args:
        problem: Stationary equation
        grid: Grid to solve on
        seed: Initial field (Gaussian when None)
        time_step: Pseudo-time step, 2/omega when None
        tolerance: Target relative residual
        max_iterations: Step cap

    Returns:
        StationaryResult with the converged field
    """
    seed, real = _prepare_seed(problem, grid, seed)
    symbol = problem.symbol(grid.k_squared)
    dt = time_step if time_step is not None else 2.0 / problem.omega
    coefficients = to_spectrum(seed.values)
    history: List[float] = []

    def project(coeffs):
        values = _realize(coeffs, real)
        nonlinear = to_spectrum(problem.nonlinearity(values))
        pairing = float(np.real(np.vdot(coeffs, nonlinear)))
        if not pairing > 0:
            raise DivergedToZero("Nonlinear pairing vanished during the gradient flow")
        scale = (float(np.sum(symbol * np.abs(coeffs) ** 2)) / pairing) ** (1.0 / (2.0 * problem.sigma))
        return coeffs * scale, nonlinear * scale ** problem.degree

    coefficients, nonlinear = project(coefficients)
    for iteration in range(1, max_iterations + 1):
        residual = _spectral_residual(symbol, coefficients, nonlinear)
        history.append(residual)
        if not math.isfinite(residual):
            raise NonConvergence(f"Gradient flow residual became non-finite at step {iteration}")
        if residual <= tolerance:
            logger.debug("Gradient flow converged in %d steps (residual %.3e)", iteration, residual)
            return StationaryResult(Field(grid, _realize(coefficients, real)), iteration, residual, history)

        coefficients = (coefficients + dt * nonlinear) / (1.0 + dt * symbol)
        coefficients, nonlinear = project(coefficients)
        if float(np.sum(np.abs(coefficients) ** 2)) * grid.parseval_weight < COLLAPSE_MASS:
            raise DivergedToZero(f"Gradient flow collapsed to zero at step {iteration}")

    raise NonConvergence(
        f"Gradient flow did not reach residual {tolerance:.1e} in {max_iterations} steps "
        f"(last {history[-1]:.3e})"
    )
