"""
Energy, Pohozaev functional and the dilation algebra on (A, B, C)

All derivative norms are taken in frequency space through Parseval, so

    A = ||Lap u||^2,  B = ||grad u||^2,  C = ||u||_{2 sigma + 2}^{2 sigma + 2}

carry no differencing error. E(u_lambda) only needs the triple, never a
resampled field.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from spectral.grid import Field, apply_symbol, field_mass, integrate, to_spectrum
from utils.errors import ConfigError, Degenerate, NoMaximizer, ZeroField, ZeroMass

logger = logging.getLogger(__name__)

CRITICAL_TOLERANCE = 1e-12
LAMBDA_FLOOR = 1e-8
DILATION_RTOL = 1e-12
DILATION_MAXITER = 200


@dataclass(frozen=True)
class ModelParams:
    """
    Problem parameters of the mixed-dispersion equation

    Args:
        gamma: Fourth-order dispersion strength, > 0
        sigma: Nonlinearity power, > 0
        dim: Spatial dimension N, 1 or 2
        mass_target: Optional prescribed mass c
    """

    gamma: float
    sigma: float
    dim: int
    mass_target: Optional[float] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if self.mass_target is not None and not self.mass_target > 0:
            raise ConfigError(f"mass_target must be positive, got {self.mass_target}")

    @property
    def sigma_n(self) -> float:
        return self.sigma * self.dim

    @property
    def is_critical(self) -> bool:
        return abs(self.sigma_n - 4.0) <= CRITICAL_TOLERANCE

    @property
    def lebesgue_exponent(self) -> float:
        """2 sigma + 2"""
        return 2.0 * self.sigma + 2.0

    def require_ground_state_regime(self):
        if self.sigma_n < 4.0 - CRITICAL_TOLERANCE:
            raise ConfigError(
                f"sigma*N = {self.sigma_n:g} is below 4; ground states need sigma*N >= 4"
            )

    def with_gamma(self, gamma: float) -> 'ModelParams':
        return ModelParams(gamma=gamma, sigma=self.sigma, dim=self.dim, mass_target=self.mass_target)

    def with_mass(self, mass: float) -> 'ModelParams':
        return ModelParams(gamma=self.gamma, sigma=self.sigma, dim=self.dim, mass_target=mass)


@dataclass(frozen=True)
class ScalarTriple:
    """(A, B, C) = (||Lap u||^2, ||grad u||^2, ||u||_{2s+2}^{2s+2})"""

    A: float
    B: float
    C: float

    def satisfies_interpolation(self, mass: float, rtol: float = 1e-12) -> bool:
        """B^2 <= A * mass"""
        return self.B ** 2 <= self.A * mass * (1.0 + rtol) + 1e-300


@dataclass(frozen=True)
class DilationResult:
    lambda_star: float
    max_energy: float
    exists: bool


@dataclass(frozen=True)
class IdentityResiduals:
    """
    Multiply-and-integrate identities of gamma Lap^2 v - mu Lap v + omega v = d |v|^{2s} v

    Every stationary solution has I = P = Q = 0; scale is the sum of the
    absolute values of the terms and turns each value into a relative residual.
    """

    I: float
    P: float
    Q: float
    scale: float

    @property
    def relative(self) -> dict:
        scale = self.scale if self.scale > 0 else 1.0
        return {
            'I': abs(self.I) / scale,
            'P': abs(self.P) / scale,
            'Q': abs(self.Q) / scale,
        }

    @property
    def worst(self) -> float:
        return max(self.relative.values())


def _moments(u: Field):
    """Return (||Lap u||^2, ||grad u||^2) from one transform"""
    grid = u.grid
    power = np.abs(to_spectrum(u.values)) ** 2
    k2 = grid.k_squared
    A = float(np.sum(k2 ** 2 * power) * grid.parseval_weight)
    B = float(np.sum(k2 * power) * grid.parseval_weight)
    return A, B


def lebesgue_integral(u: Field, exponent: float) -> float:
    """Integral of |u|^exponent"""
    return integrate(u.grid, np.abs(u.values) ** exponent)


def mass(u: Field) -> float:
    return field_mass(u)


def triple(u: Field, p: ModelParams) -> ScalarTriple:
    A, B = _moments(u)
    return ScalarTriple(A=A, B=B, C=lebesgue_integral(u, p.lebesgue_exponent))


def energy_from_triple(t: ScalarTriple, p: ModelParams) -> float:
    return 0.5 * p.gamma * t.A + 0.5 * t.B - t.C / p.lebesgue_exponent


def pohozaev_from_triple(t: ScalarTriple, p: ModelParams) -> float:
    return p.gamma * t.A + 0.5 * t.B - p.sigma_n / (2.0 * p.lebesgue_exponent) * t.C


def energy(u: Field, p: ModelParams) -> float:
    """E(u) = (gamma/2) A + B/2 - C/(2 sigma + 2)"""
    return energy_from_triple(triple(u, p), p)


def pohozaev(u: Field, p: ModelParams) -> float:
    """Q(u) = gamma A + B/2 - sigma N C / (2 (2 sigma + 2))"""
    return pohozaev_from_triple(triple(u, p), p)


def energy_along_dilation(t: ScalarTriple, lam: float, p: ModelParams) -> float:
    """
    E(u_lambda) evaluated from the triple

    Args:
        t: Triple of u
        lam: Dilation parameter lambda > 0
        p: Model parameters

    Returns:
        (gamma lambda^2/2) A + (lambda/2) B - lambda^(sigma N/2) C/(2 sigma + 2)
    """
    if not lam > 0:
        raise ValueError(f"Dilation parameter must be positive, got {lam}")
    return (
        0.5 * p.gamma * lam ** 2 * t.A
        + 0.5 * lam * t.B
        - lam ** (0.5 * p.sigma_n) * t.C / p.lebesgue_exponent
    )


def pohozaev_along_dilation(t: ScalarTriple, lam: float, p: ModelParams) -> float:
    """Q(u_lambda) = lambda dE(u_lambda)/dlambda"""
    if not lam > 0:
        raise ValueError(f"Dilation parameter must be positive, got {lam}")
    return (
        p.gamma * lam ** 2 * t.A
        + 0.5 * lam * t.B
        - 0.5 * p.sigma_n * lam ** (0.5 * p.sigma_n) * t.C / p.lebesgue_exponent
    )


def _fibering_slope(t: ScalarTriple, p: ModelParams):
    """q(lambda) = Q(u_lambda)/lambda, whose positive root is lambda_u"""
    kappa = p.sigma_n / (2.0 * p.lebesgue_exponent)
    power = 0.5 * p.sigma_n - 1.0

    def q(lam: float) -> float:
        return p.gamma * lam * t.A + 0.5 * t.B - kappa * lam ** power * t.C

    return q


def optimal_dilation(t: ScalarTriple, p: ModelParams, strict: bool = True) -> DilationResult:
    """
    Find the unique maximizer lambda_u of lambda -> E(u_lambda)

    Args:
        t: Triple of u
        p: Model parameters with sigma N >= 4
        strict: Raise NoMaximizer instead of returning exists=False

    Returns:
        DilationResult; in the critical case without a maximizer the
        supremum is infinite and exists is False
    """
    p.require_ground_state_regime()
    if t.C <= 0:
        raise Degenerate("Nonlinear term vanishes; the fibering map has no maximum")
    if t.A <= 0 and t.B <= 0:
        raise Degenerate("Derivative norms vanish; the fibering map has no maximum")

    if p.is_critical:
        # E(u_lambda) = lambda^2 (gamma A - C/(sigma+1))/2 + lambda B/2
        curvature = t.C / (p.sigma + 1.0) - p.gamma * t.A
        if curvature <= 0 or t.B <= 0:
            if strict:
                raise NoMaximizer(
                    f"gamma*A = {p.gamma * t.A:.6g} is not below C/(sigma+1) = "
                    f"{t.C / (p.sigma + 1.0):.6g}" if curvature <= 0
                    else "Gradient norm vanishes; the supremum is not attained"
                )
            return DilationResult(lambda_star=math.inf, max_energy=math.inf, exists=False)
        lam = 0.5 * t.B / curvature
        return DilationResult(lambda_star=lam, max_energy=energy_along_dilation(t, lam, p), exists=True)

    q = _fibering_slope(t, p)
    low = LAMBDA_FLOOR
    while q(low) <= 0 and low > 1e-300:
        low *= 0.1
    high = 1.0
    while q(high) >= 0:
        high *= 2.0
        if high > 1e300:
            raise Degenerate("Could not bracket the fibering maximum")
    if high > 1.0:
        low = max(low, 0.5 * high)
    lam = optimize.bisect(
        q, low, high, xtol=np.finfo(float).tiny, rtol=DILATION_RTOL, maxiter=DILATION_MAXITER
    )
    return DilationResult(lambda_star=float(lam), max_energy=energy_along_dilation(t, lam, p), exists=True)


def weinstein_quotient(u: Field, p: ModelParams) -> float:
    """
    W(u) = C / (A^(sigma N/4) * m^((2 + 2 sigma - sigma N/2)/2))

    Args:
        u: Nonzero field
        p: Model parameters

    Returns:
        The Gagliardo-Nirenberg quotient, bounded above by its sharp constant
    """
    m = mass(u)
    if m <= 0:
        raise ZeroField("Weinstein quotient of the zero field")
    t = triple(u, p)
    if t.A <= 0:
        raise Degenerate("Weinstein quotient of a field with no curvature")
    mass_power = 0.5 * (2.0 + 2.0 * p.sigma - 0.5 * p.sigma_n)
    return t.C / (t.A ** (0.25 * p.sigma_n) * m ** mass_power)


def multiplier_from_identities(t: ScalarTriple, c: float, p: ModelParams) -> float:
    """alpha from c alpha = gamma((4s+4)/(sN) - 1) A + ((2s+2)/(sN) - 1) B"""
    if not c > 0:
        raise ZeroMass(f"Multiplier identity needs positive mass, got {c}")
    sn = p.sigma_n
    numerator = (
        p.gamma * ((4.0 * p.sigma + 4.0) / sn - 1.0) * t.A
        + ((2.0 * p.sigma + 2.0) / sn - 1.0) * t.B
    )
    return numerator / c


def reduced_energy(t: ScalarTriple, p: ModelParams) -> float:
    """E - (2/(sigma N)) Q, which has no nonlinear term"""
    sn = p.sigma_n
    return p.gamma * (sn - 4.0) / (2.0 * sn) * t.A + (sn - 2.0) / (2.0 * sn) * t.B


def identity_residuals(
    u: Field,
    gamma: float,
    mu: float,
    omega: float,
    d: float,
    sigma: float,
) -> IdentityResiduals:
    """
    Evaluate the I, P, Q identities for gamma Lap^2 v - mu Lap v + omega v = d |v|^{2s} v

    Args:
        u: Candidate solution
        gamma, mu, omega, d: Equation coefficients
        sigma: Nonlinearity power

    Returns:
        IdentityResiduals with absolute values and their common scale
    """
    n = u.grid.dim
    A, B = _moments(u)
    m = mass(u)
    exponent = 2.0 * sigma + 2.0
    C = lebesgue_integral(u, exponent)

    i_terms = [gamma * A, mu * B, omega * m, -d * C]
    p_terms = [
        0.5 * (n - 4) * gamma * A,
        0.5 * (n - 2) * mu * B,
        0.5 * n * omega * m,
        -d * n * C / exponent,
    ]
    q_terms = [gamma * A, 0.5 * mu * B, -d * sigma * n * C / (2.0 * exponent)]
    scale = sum(abs(x) for x in i_terms)
    return IdentityResiduals(I=sum(i_terms), P=sum(p_terms), Q=sum(q_terms), scale=scale)


def energy_gradient(u: Field, p: ModelParams) -> Field:
    """L2 gradient gamma Lap^2 u - Lap u - |u|^{2 sigma} u"""
    linear = apply_symbol(u, lambda k2: p.gamma * k2 ** 2 + k2)
    return linear.with_values(linear.values - np.abs(u.values) ** (2.0 * p.sigma) * u.values)


def stationary_residual(u: Field, alpha: float, p: ModelParams) -> float:
    """||gamma Lap^2 u - Lap u + alpha u - |u|^{2 sigma} u|| / ||u||"""
    m = mass(u)
    if m <= 0:
        raise ZeroField("Stationary residual of the zero field")
    g = energy_gradient(u, p)
    residual = g.values + alpha * u.values
    return math.sqrt(integrate(u.grid, np.abs(residual) ** 2) / m)


def rescale_to_mass(u: Field, c: float) -> Field:
    m = mass(u)
    if m <= 0:
        raise ZeroField("Cannot rescale the zero field to a prescribed mass")
    return u.scaled(math.sqrt(c / m))
