"""
Normalized ground states by Petviashvili shooting on the multiplier
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize

from spectral.grid import Field, GridSpec
from solvers.critical import critical_mass
from solvers.stationary import (
    SolverConfig,
    StationaryProblem,
    StationaryResult,
    load_seed,
    petviashvili,
)
from variational.functionals import (
    IdentityResiduals,
    ModelParams,
    energy_from_triple,
    identity_residuals,
    mass,
    multiplier_from_identities,
    pohozaev_from_triple,
    triple,
)
from variational.rearrangement import rearrangement_distance
from utils.errors import (
    BracketNotFound,
    ConfigError,
    InvariantViolation,
    SolverError,
    SubcriticalMass,
)

logger = logging.getLogger(__name__)

SOLVER_TAGS = ('petviashvili_shooting', 'minimax_descent')
POHOZAEV_TOLERANCE = 1e-6
MULTIPLIER_TOLERANCE = 1e-5
MASS_TOLERANCE = 1e-8
MAX_BRACKET_EXPANSIONS = 4
EXPANSION_FACTOR = 8.0
MIN_POINTS_PER_WIDTH = 4.0


@dataclass
class GroundState:
    """
    Converged normalized solution of gamma Lap^2 u - Lap u + alpha u = |u|^{2 sigma} u

    Args:
        field: Real even profile u_c
        alpha: Lagrange multiplier reported by the solver
        mass: ||u_c||^2
        energy: E(u_c)
        pohozaev_residual: |Q(u_c)| / (gamma ||Lap u_c||^2)
        solver_tag: 'petviashvili_shooting' or 'minimax_descent'
        params: Model parameters
        iterations: Total solver iterations
        history: Residuals (shooting) or F values (minimax) per iteration
        brackets: Multiplier brackets that straddled the mass (shooting only)
        mass_curve: Scanned (alpha, mass, energy) points (shooting only)
        converged: False when the solver stopped short of its tolerance
    """

    field: Field
    alpha: float
    mass: float
    energy: float
    pohozaev_residual: float
    solver_tag: str
    params: ModelParams
    iterations: int = 0
    history: List[float] = field(default_factory=list)
    brackets: int = 0
    mass_curve: List["MassCurvePoint"] = field(default_factory=list, repr=False)
    converged: bool = True

    @classmethod
    def from_field(
        cls,
        u: Field,
        alpha: float,
        p: ModelParams,
        solver_tag: str,
        iterations: int = 0,
        history: Optional[List[float]] = None,
        brackets: int = 0,
        converged: bool = True,
    ) -> 'GroundState':
        if solver_tag not in SOLVER_TAGS:
            raise ConfigError(f"Unknown solver tag '{solver_tag}'")
        t = triple(u, p)
        return cls(
            field=u,
            alpha=float(alpha),
            mass=mass(u),
            energy=energy_from_triple(t, p),
            pohozaev_residual=abs(pohozaev_from_triple(t, p)) / (p.gamma * t.A),
            solver_tag=solver_tag,
            params=p,
            iterations=iterations,
            history=list(history or []),
            brackets=brackets,
            converged=converged,
        )

    def identities(self) -> IdentityResiduals:
        p = self.params
        return identity_residuals(self.field, p.gamma, 1.0, self.alpha, 1.0, p.sigma)

    def check_invariants(self) -> List[str]:
        """Return a description of every violated invariant"""
        violations = []
        if not self.pohozaev_residual <= POHOZAEV_TOLERANCE:
            violations.append(
                f"Pohozaev residual {self.pohozaev_residual:.3e} exceeds {POHOZAEV_TOLERANCE:.0e}"
            )
        if not self.alpha > 0:
            violations.append(f"multiplier {self.alpha:.6g} is not positive")
        if not self.energy > 0:
            violations.append(f"energy {self.energy:.6g} is not positive")
        if self.mass > 0:
            identity_alpha = multiplier_from_identities(triple(self.field, self.params), self.mass, self.params)
            if not abs(identity_alpha - self.alpha) <= MULTIPLIER_TOLERANCE * abs(self.alpha):
                violations.append(
                    f"multiplier identity gives {identity_alpha:.12g}, solver gave {self.alpha:.12g}"
                )
        else:
            violations.append("mass is not positive")
        return violations

    def validate(self) -> 'GroundState':
        violations = self.check_invariants()
        if violations:
            raise InvariantViolation(violations)
        return self

    def sign_changes(self) -> List[int]:
        """Sign changes of the real profile along each axis through the origin"""
        values = self.field.values.real
        center = self.field.grid.points // 2
        threshold = 1e-10 * float(np.max(np.abs(values), initial=0.0))
        counts = []
        for axis in range(self.field.grid.dim):
            index = [center] * self.field.grid.dim
            index[axis] = slice(None)
            line = values[tuple(index)]
            signs = np.sign(line[np.abs(line) > threshold])
            counts.append(int(np.count_nonzero(np.diff(signs))))
        return counts

    def rearrangement_distance(self) -> float:
        return rearrangement_distance(self.field)

    def to_record(self) -> Dict:
        return {
            'alpha': self.alpha,
            'mass': self.mass,
            'energy': self.energy,
            'pohozaev_residual': self.pohozaev_residual,
            'solver_tag': self.solver_tag,
            'iterations': self.iterations,
            'brackets': self.brackets,
            'converged': self.converged,
            'gamma': self.params.gamma,
            'sigma': self.params.sigma,
            'dim': self.params.dim,
        }

    @classmethod
    def from_record(cls, u: Field, record: Dict) -> 'GroundState':
        """Rebuild from a checkpoint and its sidecar, recomputing every derived value"""
        p = ModelParams(gamma=float(record['gamma']), sigma=float(record['sigma']), dim=int(record['dim']))
        state = cls.from_field(
            u,
            alpha=float(record['alpha']),
            p=p,
            solver_tag=str(record['solver_tag']),
            iterations=int(record.get('iterations', 0)),
            brackets=int(record.get('brackets', 0)),
            converged=bool(record.get('converged', True)),
        )
        for key in ('mass', 'energy'):
            stored = float(record[key])
            if not math.isclose(stored, getattr(state, key), rel_tol=1e-10, abs_tol=1e-14):
                raise InvariantViolation([f"stored {key} {stored!r} does not match the field"])
        return state.validate()


@dataclass
class MassCurvePoint:
    """Converged fixed-multiplier solution, or the error that stopped it"""

    alpha: float
    mass: float = math.nan
    energy: float = math.nan
    iterations: int = 0
    field: Optional[Field] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def fixed_multiplier_problem(alpha: float, p: ModelParams) -> StationaryProblem:
    return StationaryProblem(gamma=p.gamma, mu=1.0, omega=alpha, d=1.0, sigma=p.sigma)


def _solve(alpha: float, p: ModelParams, grid: GridSpec, cfg: SolverConfig, seed: Optional[Field]) -> StationaryResult:
    if not alpha > 0:
        raise ConfigError(f"Multiplier must be positive, got {alpha}")
    return petviashvili(fixed_multiplier_problem(alpha, p), grid, cfg, seed=seed)


def solve_fixed_multiplier(
    alpha: float,
    p: ModelParams,
    grid: GridSpec,
    cfg: SolverConfig,
    seed: Optional[Field] = None,
) -> Field:
    """
    Solve gamma Lap^2 u - Lap u + alpha u = |u|^{2 sigma} u

    Args:
        alpha: Multiplier, > 0
        p: Model parameters
        grid: Grid to solve on
        cfg: Iteration controls
        seed: Initial field; a Gaussian of the linear length scale when None

    Returns:
        Converged real field
    """
    return _solve(alpha, p, grid, cfg, seed).field


def _nearest_seed(solved: Dict[float, Field], alpha: float) -> Optional[Field]:
    if not solved:
        return None
    nearest = min(solved, key=lambda a: abs(math.log(a) - math.log(alpha)))
    return solved[nearest]


def mass_curve(
    alphas: List[float],
    p: ModelParams,
    grid: GridSpec,
    cfg: SolverConfig,
) -> List[MassCurvePoint]:
    """
    Fixed-multiplier solutions over a list of multipliers

    Distinct multipliers are solved in ascending order, each seeded from
    the previous converged neighbor. Errors are recorded per entry.

    Args:
        alphas: Multipliers, all > 0
        p: Model parameters
        grid: Grid to solve on
        cfg: Iteration controls

    Returns:
        One MassCurvePoint per input entry, in input order
    """
    if any(not a > 0 for a in alphas):
        raise ConfigError("All multipliers must be positive")

    points: Dict[float, MassCurvePoint] = {}
    previous: Optional[Field] = load_seed(cfg, grid)
    for alpha in sorted(set(float(a) for a in alphas)):
        try:
            result = _solve(alpha, p, grid, cfg, previous)
        except SolverError as e:
            if previous is None:
                points[alpha] = MassCurvePoint(alpha=alpha, error=f"{e.category}: {str(e)}")
                continue
            try:
                result = _solve(alpha, p, grid, cfg, None)
            except SolverError as retry_error:
                logger.warning("Mass curve entry alpha=%.6g failed: %s", alpha, retry_error)
                points[alpha] = MassCurvePoint(alpha=alpha, error=f"{retry_error.category}: {str(retry_error)}")
                continue
        t = triple(result.field, p)
        points[alpha] = MassCurvePoint(
            alpha=alpha,
            mass=mass(result.field),
            energy=energy_from_triple(t, p),
            iterations=result.iterations,
            field=result.field,
        )
        previous = result.field
    return [points[float(a)] for a in alphas]


def _straddles(a: MassCurvePoint, b: MassCurvePoint, c: float) -> bool:
    return a.ok and b.ok and (a.mass - c) * (b.mass - c) <= 0


def _scan(c: float, p: ModelParams, grid: GridSpec, cfg: SolverConfig) -> List[MassCurvePoint]:
    """Scan the multiplier range, widening it until some pair straddles c"""
    low, high = cfg.alpha_bracket
    alphas = list(np.geomspace(low, high, cfg.scan_points))
    curve = mass_curve(alphas, p, grid, cfg)
    finest_alpha = p.gamma * (MIN_POINTS_PER_WIDTH * grid.spacing) ** -4

    for _ in range(MAX_BRACKET_EXPANSIONS):
        if any(_straddles(a, b, c) for a, b in zip(curve, curve[1:])):
            return curve
        ok = [point for point in curve if point.ok]
        if not ok:
            break
        # mass decreases with alpha in this regime
        if all(point.mass > c for point in ok):
            if high * EXPANSION_FACTOR > finest_alpha:
                break
            extra = list(np.geomspace(high, high * EXPANSION_FACTOR, 4))[1:]
            high *= EXPANSION_FACTOR
        else:
            extra = list(np.geomspace(low / EXPANSION_FACTOR, low, 4))[:-1]
            low /= EXPANSION_FACTOR
        logger.info("Widening multiplier scan to [%.4g, %.4g] for mass %.10g", low, high, c)
        curve = sorted(curve + mass_curve(extra, p, grid, cfg), key=lambda point: point.alpha)

    if any(_straddles(a, b, c) for a, b in zip(curve, curve[1:])):
        return curve
    scanned = [(pt.alpha, pt.mass) for pt in curve if pt.ok]
    raise BracketNotFound(
        f"No multiplier in [{low:.4g}, {high:.4g}] gives mass {c:.10g}; scanned {scanned}"
    )


def _shoot(
    c: float,
    left: MassCurvePoint,
    right: MassCurvePoint,
    p: ModelParams,
    grid: GridSpec,
    cfg: SolverConfig,
) -> Tuple[float, StationaryResult]:
    """Root of mass(alpha) = c on one bracket, by Brent's method in log(alpha)"""
    solved: Dict[float, Field] = {left.alpha: left.field, right.alpha: right.field}
    results: Dict[float, StationaryResult] = {}

    def mismatch(log_alpha: float) -> float:
        alpha = math.exp(log_alpha)
        result = _solve(alpha, p, grid, cfg, _nearest_seed(solved, alpha))
        solved[alpha] = result.field
        results[alpha] = result
        return mass(result.field) - c

    for end in (left, right):
        if end.mass == c:
            return end.alpha, _solve(end.alpha, p, grid, cfg, end.field)

    log_alpha = optimize.brentq(
        mismatch, math.log(left.alpha), math.log(right.alpha), xtol=1e-14, rtol=1e-15, maxiter=100
    )
    alpha = math.exp(log_alpha)
    if alpha not in results:
        mismatch(log_alpha)
    return alpha, results[alpha]


def normalized_ground_state(
    c: float,
    p: ModelParams,
    grid: GridSpec,
    cfg: SolverConfig,
) -> GroundState:
    """
    Ground state of prescribed mass by shooting on the multiplier

    The multiplier range is scanned on a log grid; every consecutive pair
    that straddles c is refined by root finding and the lowest-energy
    solution wins. The number of straddling brackets is recorded.

    Args:
        c: Prescribed mass, above the lower threshold c_0
        p: Model parameters
        grid: Grid to solve on
        cfg: Iteration controls

    Returns:
        Validated GroundState tagged petviashvili_shooting
    """
    p.require_ground_state_regime()
    if not c > 0:
        raise ConfigError(f"Mass must be positive, got {c}")
    if p.is_critical:
        c_star = critical_mass(p, grid, cfg)
        if c <= c_star:
            raise SubcriticalMass(
                f"Mass {c:.10g} is not above the critical mass {c_star:.10g}; no ground state exists"
            )

    curve = _scan(c, p, grid, cfg)
    brackets = [(a, b) for a, b in zip(curve, curve[1:]) if _straddles(a, b, c)]
    if len(brackets) > 1:
        logger.warning("Mass %.10g is reached on %d multiplier brackets", c, len(brackets))

    candidates = []
    for left, right in brackets:
        try:
            alpha, result = _shoot(c, left, right, p, grid, cfg)
        except (SolverError, ValueError, RuntimeError) as e:
            logger.warning(
                "Shooting on [%.6g, %.6g] failed: %s", left.alpha, right.alpha, e
            )
            continue
        state = GroundState.from_field(
            result.field,
            alpha=alpha,
            p=p,
            solver_tag='petviashvili_shooting',
            iterations=result.iterations,
            history=result.history,
            brackets=len(brackets),
        )
        candidates.append(state)

    if not candidates:
        raise BracketNotFound(f"Every multiplier bracket for mass {c:.10g} failed to converge")
    best = min(candidates, key=lambda state: state.energy)
    if abs(best.mass - c) > MASS_TOLERANCE * c:
        raise SolverError(f"Shooting reached mass {best.mass:.12g}, wanted {c:.12g}")

    logger.info(
        "Ground state at mass %.10g: alpha = %.10g, energy = %.12g, Pohozaev residual %.2e",
        c, best.alpha, best.energy, best.pohozaev_residual,
    )
    best.mass_curve = curve
    return best.validate()

