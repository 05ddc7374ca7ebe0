"""
Concentration of ground states as the mass decreases to c_N*
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from spectral.grid import Field, GridSpec, apply_symbol, dilate, integrate, translate
from solvers.ground_state import normalized_ground_state
from solvers.stationary import SolverConfig
from experiments.critical import CriticalConstants
from variational.functionals import ModelParams, mass, triple
from utils.errors import ConfigError, ResolutionLimit

logger = logging.getLogger(__name__)

MIN_POINTS_PER_WIDTH = 8.0
MASS_RTOL = 1e-8
RESIDUAL_REDUCTION = 0.1

CSV_HEADER = 'n,c,epsilon,shift,pairwise_l2,limit_residual'


@dataclass
class ConcentrationReport:
    """
    Rescaled ground states w_n along c_n = c_star (1 + 2^-n)

    Args:
        c_sequence: Masses c_n
        epsilons: eps_n with eps_n^-4 = gamma ||Lap u_n||^2
        shifts: Mass centroids used to recenter u_n
        rescaled_fields: w_n
        pairwise_l2: ||w_{n+1} - w_n||
        limit_residuals: Relative residual of gamma Lap^2 w + w = |w|^{8/N} w
    """

    c_sequence: List[float]
    epsilons: List[float]
    shifts: List[Tuple[float, ...]]
    rescaled_fields: List[Field] = field(repr=False)
    pairwise_l2: List[float]
    limit_residuals: List[float]

    @property
    def violations(self) -> List[str]:
        found = []
        if not _strictly_decreasing(self.epsilons):
            found.append("epsilons are not strictly decreasing")
        if not _strictly_decreasing(self.pairwise_l2):
            found.append("pairwise distances are not strictly decreasing")
        if not _strictly_decreasing(self.limit_residuals):
            found.append("limit residuals are not strictly decreasing")
        elif self.limit_residuals[-1] > RESIDUAL_REDUCTION * self.limit_residuals[0]:
            found.append(
                f"last limit residual {self.limit_residuals[-1]:.3e} is above "
                f"{RESIDUAL_REDUCTION:g} x the first {self.limit_residuals[0]:.3e}"
            )
        for c, w in zip(self.c_sequence, self.rescaled_fields):
            if abs(mass(w) - c) > MASS_RTOL * c:
                found.append(f"rescaled mass {mass(w):.12g} differs from {c:.12g}")
        return found

    def rows(self) -> List[List[float]]:
        rows = []
        for i, c in enumerate(self.c_sequence):
            rows.append([
                i + 1,
                c,
                self.epsilons[i],
                float(np.linalg.norm(self.shifts[i])),
                self.pairwise_l2[i] if i < len(self.pairwise_l2) else math.nan,
                self.limit_residuals[i],
            ])
        return rows


def _strictly_decreasing(values: List[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def mass_centroid(u: Field) -> Tuple[float, ...]:
    density = np.abs(u.values) ** 2
    total = float(np.sum(density))
    return tuple(float(np.sum(x * density) / total) for x in u.grid.mesh)


def limit_residual(w: Field, p: ModelParams) -> float:
    """||gamma Lap^2 w + w - |w|^{8/N} w|| / ||w||"""
    linear = apply_symbol(w, lambda k2: p.gamma * k2 ** 2 + 1.0)
    residual = linear.values - np.abs(w.values) ** (8.0 / w.grid.dim) * w.values
    return math.sqrt(integrate(w.grid, np.abs(residual) ** 2) / mass(w))


def concentration_study(
    n_max: int,
    p: ModelParams,
    grid: GridSpec,
    cfg: SolverConfig,
    consts: CriticalConstants,
) -> ConcentrationReport:
    """
    Blow up the ground states u_n at scale s_n = eps_n^4 c_star N/4

    w_n(x) = s_n^(N/8) u_n(s_n^(1/4) x + y_n), a mass-preserving dilation
    by sqrt(s_n) of u_n recentered at its mass centroid y_n.

    Args:
        n_max: Last index of the mass sequence, at least 3
        p: Model parameters at the critical exponent
        grid: Grid to solve on
        cfg: Solver controls
        consts: Critical constants for p.gamma

    Returns:
        ConcentrationReport
    """
    if not p.is_critical:
        raise ConfigError(f"Concentration is studied at sigma*N = 4, got {p.sigma_n:g}")
    if n_max < 3:
        raise ConfigError(f"n_max must be at least 3, got {n_max}")

    n_dim = grid.dim
    c_sequence, epsilons, shifts, fields, residuals = [], [], [], [], []
    for n in range(1, n_max + 1):
        c_n = consts.c_star * (1.0 + 2.0 ** -n)
        state = normalized_ground_state(c_n, p, grid, cfg)
        A = triple(state.field, p).A
        epsilon = (p.gamma * A) ** -0.25
        scale = epsilon ** 4 * consts.c_star * n_dim / 4.0
        if scale ** 0.25 / grid.spacing < MIN_POINTS_PER_WIDTH:
            raise ResolutionLimit(
                f"At n = {n} the profile width {scale ** 0.25:.4g} spans fewer than "
                f"{MIN_POINTS_PER_WIDTH:g} grid points (dx = {grid.spacing:.4g})"
            )
        shift = mass_centroid(state.field)
        w = dilate(translate(state.field, shift), math.sqrt(scale))
        if state.field.is_real() and all(abs(y) < 1e-12 for y in shift):
            w = w.with_values(w.values.real)

        c_sequence.append(c_n)
        epsilons.append(epsilon)
        shifts.append(shift)
        fields.append(w)
        residuals.append(limit_residual(w, p))
        logger.info("n = %d: c = %.10g, eps = %.6g, limit residual %.3e", n, c_n, epsilon, residuals[-1])

    pairwise = [
        math.sqrt(integrate(grid, np.abs(b.values - a.values) ** 2))
        for a, b in zip(fields, fields[1:])
    ]
    return ConcentrationReport(
        c_sequence=c_sequence,
        epsilons=epsilons,
        shifts=shifts,
        rescaled_fields=fields,
        pairwise_l2=pairwise,
        limit_residuals=residuals,
    )
