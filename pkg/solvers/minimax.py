"""
Minimax descent on the Pohozaev manifold and the ground-state level Gamma(c)

F(u) = max over lambda of E(u_lambda) is minimized over the mass sphere.
Each iterate is moved onto the manifold by its optimal dilation, then
takes a preconditioned tangential gradient step with backtracking on F.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from spectral.grid import Field, GridSpec, apply_multiplier, dilate, integrate
from solvers.critical import critical_mass
from solvers.ground_state import GroundState, fixed_multiplier_problem, normalized_ground_state
from solvers.stationary import SolverConfig, gaussian_seed
from variational.functionals import (
    ModelParams,
    energy_gradient,
    optimal_dilation,
    rescale_to_mass,
    triple,
)
from utils.errors import (
    CrossValidationError,
    NonConvergence,
    SeedOutsideDomain,
    SubcriticalMass,
)

logger = logging.getLogger(__name__)

# F may rise by a few ulps between accepted steps once the gradient is tiny
ROUNDOFF_ALLOWANCE = 8.0 * np.finfo(float).eps
MAX_BACKTRACKS = 40
MAX_STEP = 4.0
LINE_SEARCH_SLACK = 1e3
CROSS_VALIDATION_RTOL = 1e-4


def _inner(f: np.ndarray, g: np.ndarray, grid: GridSpec) -> float:
    return integrate(grid, np.real(np.conj(f) * g))


def _in_domain(u: Field, p: ModelParams) -> bool:
    """Critical case: the fibering supremum is finite only when gamma A < C/(sigma+1)"""
    if not p.is_critical:
        return True
    t = triple(u, p)
    return p.gamma * t.A < t.C / (p.sigma + 1.0)


def _fibering_max(u: Field, p: ModelParams) -> Tuple[float, float]:
    result = optimal_dilation(triple(u, p), p, strict=False)
    return result.lambda_star, result.max_energy


def _descent_direction(w: Field, p: ModelParams) -> Tuple[np.ndarray, float]:
    """Preconditioned gradient projected onto the tangent space of the sphere"""
    grid = w.grid
    precondition = 1.0 / (p.gamma * grid.k_squared ** 2 + grid.k_squared + 1.0)
    pg = apply_multiplier(energy_gradient(w, p), precondition).values
    pw = apply_multiplier(w, precondition).values
    coefficient = _inner(w.values, pg, grid) / _inner(w.values, pw, grid)
    direction = pg - coefficient * pw
    norm = math.sqrt(_inner(direction, direction, grid) / _inner(w.values, w.values, grid))
    return direction, norm


def minimax_descent(
    c: float,
    p: ModelParams,
    grid: GridSpec,
    cfg: SolverConfig,
    seed: Optional[Field] = None,
) -> GroundState:
    """
    Minimize F(u) = max_lambda E(u_lambda) over the sphere of mass c

    Args:
        c: Prescribed mass
        p: Model parameters
        grid: Grid to solve on
        cfg: Iteration controls; residual_tolerance bounds the projected gradient
        seed: Initial field; a Gaussian when None

    Returns:
        Validated GroundState tagged minimax_descent, with the F history
    """
    p.require_ground_state_regime()
    if p.is_critical:
        c_star = critical_mass(p, grid, cfg)
        if c <= c_star:
            raise SubcriticalMass(f"Mass {c:.10g} is not above the critical mass {c_star:.10g}")

    if seed is None:
        seed = gaussian_seed(fixed_multiplier_problem(1.0, p), grid)
    u = rescale_to_mass(seed, c)
    if not _in_domain(u, p):
        raise SeedOutsideDomain("Seed has gamma*A >= C/(sigma+1); the fibering supremum is infinite")

    lam, value = _fibering_max(u, p)
    history: List[float] = [value]
    step = 1.0
    tolerance = cfg.residual_tolerance

    for iteration in range(1, cfg.max_iterations + 1):
        w = u if abs(lam - 1.0) <= 1e-14 else dilate(u, lam)
        direction, gradient_norm = _descent_direction(w, p)
        if gradient_norm <= tolerance:
            return _finish(w, p, iteration, history)

        accepted = False
        trial_step = min(2.0 * step, MAX_STEP)
        for _ in range(MAX_BACKTRACKS):
            trial = rescale_to_mass(w.with_values(w.values - trial_step * direction), c)
            if _in_domain(trial, p):
                trial_lam, trial_value = _fibering_max(trial, p)
                if trial_value <= value + ROUNDOFF_ALLOWANCE * abs(value):
                    accepted = True
                    break
            trial_step *= 0.5

        if not accepted:
            if gradient_norm <= LINE_SEARCH_SLACK * tolerance:
                logger.warning(
                    "Minimax line search stalled at projected gradient %.3e above %.1e; "
                    "returning an unconverged result", gradient_norm, tolerance,
                )
                return _finish(w, p, iteration, history, converged=False)
            raise NonConvergence(
                f"Line search failed at iteration {iteration} with projected gradient {gradient_norm:.3e}"
            )

        u, lam, value, step = trial, trial_lam, trial_value, trial_step
        history.append(value)
        if iteration % 200 == 0:
            logger.debug("Minimax iteration %d: F = %.15g, gradient %.3e", iteration, value, gradient_norm)

    raise NonConvergence(
        f"Minimax descent did not reach projected gradient {tolerance:.1e} in {cfg.max_iterations} iterations"
    )


def _finish(
    w: Field, p: ModelParams, iterations: int, history: List[float], converged: bool = True
) -> GroundState:
    t = triple(w, p)
    m = integrate(w.grid, np.abs(w.values) ** 2)
    # I identity: gamma A + B + alpha m = C
    alpha = (t.C - p.gamma * t.A - t.B) / m
    state = GroundState.from_field(
        w, alpha=alpha, p=p, solver_tag='minimax_descent', iterations=iterations,
        history=history, converged=converged,
    )
    logger.info(
        "Minimax descent at mass %.10g: energy = %.12g after %d iterations", state.mass, state.energy, iterations
    )
    return state.validate()


def cross_validate(shooting: GroundState, minimax: GroundState, rtol: float = CROSS_VALIDATION_RTOL) -> float:
    """Relative energy gap between the two solvers; raises when it exceeds rtol"""
    gap = abs(shooting.energy - minimax.energy) / max(abs(shooting.energy), abs(minimax.energy))
    if gap > rtol:
        raise CrossValidationError(
            f"Shooting energy {shooting.energy:.12g} and minimax energy {minimax.energy:.12g} "
            f"differ by {gap:.3e} (limit {rtol:.0e})"
        )
    return gap


@dataclass
class GammaValue:
    value: float
    shooting: GroundState
    minimax: GroundState
    gap: float


def _minimax_seed(shooting: GroundState, c: float, p: ModelParams, grid: GridSpec) -> Field:
    """Gaussian seed, blended with the shooting profile when it lies outside the domain"""
    gaussian = rescale_to_mass(gaussian_seed(fixed_multiplier_problem(shooting.alpha, p), grid), c)
    if _in_domain(gaussian, p):
        return gaussian
    blend = rescale_to_mass(gaussian.with_values(0.5 * (gaussian.values + shooting.field.values)), c)
    if _in_domain(blend, p):
        logger.info("Gaussian seed outside the domain at mass %.10g; using a blended seed", c)
        return blend
    logger.warning("Blended seed outside the domain at mass %.10g; seeding from the shooting profile", c)
    return shooting.field


def solve_both(c: float, p: ModelParams, grid: GridSpec, cfg: SolverConfig) -> GammaValue:
    """Run both solvers at mass c and cross-validate their energies"""
    shooting = normalized_ground_state(c, p, grid, cfg)
    minimax = minimax_descent(c, p, grid, cfg, seed=_minimax_seed(shooting, c, p, grid))
    if not minimax.converged:
        logger.warning("Minimax at mass %.10g stopped short of its tolerance", c)
    gap = cross_validate(shooting, minimax)
    value = min(shooting.energy, minimax.energy)
    logger.info("Gamma(%.10g) = %.12g (solver gap %.2e)", c, value, gap)
    return GammaValue(value=value, shooting=shooting, minimax=minimax, gap=gap)


def gamma_value(c: float, p: ModelParams, grid: GridSpec, cfg: SolverConfig) -> float:
    """
    Ground-state level Gamma(c), the smaller of the two solvers' energies

    Args:
        c: Mass above the lower threshold
        p: Model parameters
        grid: Grid to solve on
        cfg: Iteration controls

    Returns:
        Gamma(c)
    """
    return solve_both(c, p, grid, cfg).value
