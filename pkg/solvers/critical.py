"""
Mass-critical extremizer and critical mass c_N*
"""
import logging
import threading
from dataclasses import dataclass
from typing import Dict, Tuple

from spectral.grid import Field, GridSpec
from solvers.stationary import SolverConfig, StationaryProblem, petviashvili
from variational.functionals import ModelParams, mass, weinstein_quotient
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CriticalExtremizer:
    """Solution U of Lap^2 U + U = |U|^{8/N} U and its Weinstein quotient"""

    field: Field
    sharp_constant: float
    iterations: int
    residual: float

    @property
    def dim(self) -> int:
        return self.field.grid.dim

    def critical_mass(self, gamma: float) -> float:
        """c_N* = (gamma (N+4)/(N B_N))^(N/4)"""
        n = self.dim
        return (gamma * (n + 4.0) / (n * self.sharp_constant)) ** (n / 4.0)


def extremizer_problem(dim: int) -> StationaryProblem:
    return StationaryProblem(gamma=1.0, mu=0.0, omega=1.0, d=1.0, sigma=4.0 / dim)


# Global extremizer cache (singleton pattern)
_extremizers: Dict[Tuple, CriticalExtremizer] = {}
_extremizers_lock = threading.Lock()


def get_critical_extremizer(grid: GridSpec, cfg: SolverConfig) -> CriticalExtremizer:
    """
    Get or compute the gamma = 1 critical extremizer on a grid

    Args:
        grid: Grid to solve on
        cfg: Solver controls; tolerance and iteration cap key the cache

    Returns:
        Cached CriticalExtremizer
    """
    key = (grid, cfg.residual_tolerance, cfg.max_iterations, cfg.petviashvili_exponent)
    with _extremizers_lock:
        cached = _extremizers.get(key)
        if cached is not None:
            return cached

        problem = extremizer_problem(grid.dim)
        result = petviashvili(problem, grid, cfg)
        params = ModelParams(gamma=1.0, sigma=problem.sigma, dim=grid.dim)
        extremizer = CriticalExtremizer(
            field=result.field,
            sharp_constant=weinstein_quotient(result.field, params),
            iterations=result.iterations,
            residual=result.residual,
        )
        logger.info(
            "Critical extremizer on %s: B_N = %.12g, ||U||^2 = %.12g (%d iterations)",
            grid.shape, extremizer.sharp_constant, mass(result.field), result.iterations,
        )
        _extremizers[key] = extremizer
        return extremizer


def clear_extremizer_cache():
    with _extremizers_lock:
        _extremizers.clear()


def critical_mass(p: ModelParams, grid: GridSpec, cfg: SolverConfig) -> float:
    """c_N* for the caller's gamma on the given grid"""
    if not p.is_critical:
        raise ConfigError(f"Critical mass is defined for sigma*N = 4, got {p.sigma_n:g}")
    return get_critical_extremizer(grid, cfg).critical_mass(p.gamma)


def lower_mass_threshold(p: ModelParams, grid: GridSpec, cfg: SolverConfig) -> float:
    """c_0: zero above the critical exponent, c_N* at it"""
    p.require_ground_state_regime()
    return critical_mass(p, grid, cfg) if p.is_critical else 0.0
