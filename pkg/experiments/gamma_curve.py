"""
The ground-state level c -> Gamma(c) over a mass sweep
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

from django.conf import settings

from spectral.grid import GridSpec
from solvers.critical import lower_mass_threshold
from solvers.minimax import GammaValue, solve_both
from solvers.stationary import SolverConfig
from variational.functionals import ModelParams
from utils.errors import ConfigError, InvariantViolation, LabError

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-6
STRICT_MARGIN = 1e-8

CSV_HEADER = 'mass,gamma,alpha,shooting_energy,minimax_energy,solver_gap,brackets,minimax_converged'


@dataclass
class GammaCurve:
    masses: List[float]
    gammas: List[float]
    alphas: List[float]
    monotone_ok: bool
    strictly_decreasing: bool
    points: List[GammaValue] = field(default_factory=list, repr=False)

    def rows(self) -> List[List[float]]:
        return [
            [c, g, a, pt.shooting.energy, pt.minimax.energy, pt.gap, pt.shooting.brackets, int(pt.minimax.converged)]
            for c, g, a, pt in zip(self.masses, self.gammas, self.alphas, self.points)
        ]


def is_monotone(gammas: List[float], slack: float = MONOTONE_SLACK) -> bool:
    """Nonincreasing within a relative slack; vacuous for fewer than two values"""
    return all(b <= a * (1.0 + slack) for a, b in zip(gammas, gammas[1:]))


def is_strictly_decreasing(gammas: List[float], margin: float = STRICT_MARGIN) -> bool:
    return all(a - b > margin for a, b in zip(gammas, gammas[1:]))


def gamma_curve(
    masses: List[float],
    p: ModelParams,
    grid: GridSpec,
    cfg: SolverConfig,
    workers: Optional[int] = None,
) -> GammaCurve:
    """
    Gamma(c) and alpha_c over an ascending mass sweep

    Masses are independent jobs and run on up to BINLS_THREADS threads.
    For N in {1, 2} the sweep must be strictly decreasing; at the critical
    exponent this is the growth of Gamma as masses approach c_N* from above.

    Args:
        masses: Ascending masses above the lower threshold
        p: Model parameters
        grid: Grid to solve on
        cfg: Solver controls
        workers: Thread count, BINLS_THREADS when None

    Returns:
        GammaCurve
    """
    if not masses:
        raise ConfigError("Mass sweep is empty")
    if any(b <= a for a, b in zip(masses, masses[1:])):
        raise ConfigError("Sweep masses must be strictly ascending")
    c0 = lower_mass_threshold(p, grid, cfg)
    if masses[0] <= c0:
        raise ConfigError(f"Sweep starts at {masses[0]:.10g}, not above c_0 = {c0:.10g}")

    def solve(c: float) -> GammaValue:
        try:
            return solve_both(c, p, grid, cfg)
        except LabError as e:
            e.args = (f"mass {c:.10g}: {str(e)}",)
            e.mass = c
            raise

    workers = workers or int(settings.BINLS_THREADS)
    if workers > 1 and len(masses) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(solve, masses))
    else:
        points = [solve(c) for c in masses]

    gammas = [pt.value for pt in points]
    curve = GammaCurve(
        masses=list(masses),
        gammas=gammas,
        alphas=[pt.shooting.alpha for pt in points],
        monotone_ok=is_monotone(gammas),
        strictly_decreasing=is_strictly_decreasing(gammas),
        points=points,
    )
    logger.info(
        "Gamma curve over %d masses: monotone=%s strict=%s", len(masses), curve.monotone_ok, curve.strictly_decreasing
    )
    if grid.dim <= 2 and len(masses) > 1 and not curve.strictly_decreasing:
        raise InvariantViolation(
            [f"Gamma is not strictly decreasing over the sweep: {gammas}"]
        )
    return curve
