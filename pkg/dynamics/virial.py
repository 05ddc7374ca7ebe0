"""
Localized virial functional M[psi] = 2 Im integral conj(psi) grad(phi_R) . grad(psi)

The radial weight phi is r^2/2 on [0, 1] and constant on [10, inf). On
[1, 10] it is a polynomial blend in s = (r - 1)/9 whose second derivative

    h(s) = 1 - 3 s^2 + 2 s^3 - (55/3) s^2 (1 - s)^2

matches 1 at s = 0 and 0 at s = 1, never exceeds 1, and integrates to
-1/9 so that phi' reaches zero exactly at r = 10.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from spectral.grid import Field, GridSpec, gradient, integrate
from utils.errors import ConfigError

INNER_RADIUS = 1.0
OUTER_RADIUS = 10.0
BLEND_WIDTH = OUTER_RADIUS - INNER_RADIUS
WELL = 55.0 / 3.0


def _blend_variable(rho: np.ndarray) -> np.ndarray:
    return np.clip((rho - INNER_RADIUS) / BLEND_WIDTH, 0.0, 1.0)


def _h(s):
    return 1.0 - 3.0 * s ** 2 + 2.0 * s ** 3 - WELL * s ** 2 * (1.0 - s) ** 2


def _h_integral(s):
    return s - s ** 3 + 0.5 * s ** 4 - WELL * (s ** 3 / 3.0 - 0.5 * s ** 4 + s ** 5 / 5.0)


def _h_double_integral(s):
    return (
        0.5 * s ** 2 - 0.25 * s ** 4 + 0.1 * s ** 5
        - WELL * (s ** 4 / 12.0 - 0.1 * s ** 5 + s ** 6 / 30.0)
    )


def profile(rho) -> np.ndarray:
    """phi(rho)"""
    rho = np.asarray(rho, dtype=float)
    s = _blend_variable(rho)
    blend = 0.5 + BLEND_WIDTH * s + BLEND_WIDTH ** 2 * _h_double_integral(s)
    return np.where(rho <= INNER_RADIUS, 0.5 * rho ** 2, blend)


def profile_derivative(rho) -> np.ndarray:
    """phi'(rho)"""
    rho = np.asarray(rho, dtype=float)
    s = _blend_variable(rho)
    blend = 1.0 + BLEND_WIDTH * _h_integral(s)
    return np.where(rho <= INNER_RADIUS, rho, np.where(rho >= OUTER_RADIUS, 0.0, blend))


def profile_second_derivative(rho) -> np.ndarray:
    """phi''(rho)"""
    rho = np.asarray(rho, dtype=float)
    s = _blend_variable(rho)
    return np.where(rho <= INNER_RADIUS, 1.0, np.where(rho >= OUTER_RADIUS, 0.0, _h(s)))


@dataclass(frozen=True)
class VirialConfig:
    """Localization radius R of phi_R(r) = R^2 phi(r/R)"""

    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ConfigError(f"Virial radius must be positive, got {self.R}")

    @classmethod
    def for_grid(cls, grid: GridSpec, R: Optional[float] = None) -> 'VirialConfig':
        return cls(R=R if R is not None else grid.extent / 4.0)

    def weight(self, r) -> np.ndarray:
        return self.R ** 2 * profile(np.asarray(r) / self.R)

    def weight_second_derivative(self, r) -> np.ndarray:
        return profile_second_derivative(np.asarray(r) / self.R)

    def weight_gradient(self, grid: GridSpec) -> Tuple[np.ndarray, ...]:
        """grad phi_R = R phi'(r/R) x/r, which is x itself for r <= R"""
        r = grid.radius
        with np.errstate(divide='ignore', invalid='ignore'):
            factor = np.where(
                r <= self.R, 1.0, self.R * profile_derivative(r / self.R) / np.where(r > 0, r, 1.0)
            )
        return tuple(factor * x for x in grid.mesh)


def localized_virial(psi: Field, vcfg: VirialConfig) -> float:
    """
    Truncated virial momentum M_phiR[psi]

    Args:
        psi: Field
        vcfg: Localization radius

    Returns:
        2 Im integral conj(psi) grad(phi_R) . grad(psi)
    """
    weights = vcfg.weight_gradient(psi.grid)
    components = gradient(psi)
    integrand = sum(w * np.imag(np.conj(psi.values) * d.values) for w, d in zip(weights, components))
    return 2.0 * integrate(psi.grid, integrand)
