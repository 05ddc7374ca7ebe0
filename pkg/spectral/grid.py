"""
Periodic-box discretization of R^N with Fourier operators, quadrature and
band-limited dilation.

Transform convention (fixed): the forward transform is unscaled and taken
about the box center, i.e. coefficients are fftn(ifftshift(values)), so an
even real profile has real coefficients. The inverse divides by M^dim.
Parseval then reads

    sum |values|^2 * dx^dim = sum |coefficients|^2 * dx^dim / M^dim
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Tuple, Union

import numpy as np
from scipy import fft as sfft
from django.conf import settings

from utils.errors import InvalidGrid, NonFiniteField, OddPointCount, ResolutionLimit, SupportOverflow

logger = logging.getLogger(__name__)

MIN_POINTS = 8
SUPPORT_LEAK_LIMIT = 1e-8
RENORMALIZATION_WINDOW = 1e-6


# Global worker count (singleton pattern)
_fft_workers = None


def get_fft_workers() -> int:
    """Get the FFT worker count configured by BINLS_THREADS"""
    global _fft_workers
    if _fft_workers is None:
        _fft_workers = max(1, int(settings.BINLS_THREADS))
    return _fft_workers


@dataclass(frozen=True)
class GridSpec:
    """Square periodic box [-L/2, L/2)^dim sampled with M points per axis"""

    dim: int
    extent: float
    points: int

    @property
    def spacing(self) -> float:
        return self.extent / self.points

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def parseval_weight(self) -> float:
        """Weight turning sum |coefficients|^2 into the L2 norm squared"""
        return self.cell_volume / self.size

    @property
    def nyquist(self) -> float:
        """Largest resolved wavenumber pi*M/L"""
        return np.pi * self.points / self.extent

    @cached_property
    def axis_coordinates(self) -> np.ndarray:
        x = -0.5 * self.extent + self.spacing * np.arange(self.points)
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """k_j = 2*pi*j/L in transform order [0, ..., M/2-1, -M/2, ..., -1]"""
        k = 2.0 * np.pi * sfft.fftfreq(self.points, d=self.spacing)
        k.flags.writeable = False
        return k

    @cached_property
    def frequency_indices(self) -> np.ndarray:
        n = np.rint(sfft.fftfreq(self.points, d=1.0 / self.points)).astype(np.int64)
        n.flags.writeable = False
        return n

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, ...]:
        axes = [self.axis_coordinates] * self.dim
        return tuple(np.meshgrid(*axes, indexing='ij'))

    @cached_property
    def k_mesh(self) -> Tuple[np.ndarray, ...]:
        axes = [self.wavenumbers] * self.dim
        return tuple(np.meshgrid(*axes, indexing='ij'))

    @cached_property
    def k_squared(self) -> np.ndarray:
        k2 = sum(k ** 2 for k in self.k_mesh)
        k2.flags.writeable = False
        return k2

    @cached_property
    def radius(self) -> np.ndarray:
        r = np.sqrt(sum(x ** 2 for x in self.mesh))
        r.flags.writeable = False
        return r

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on every mode with a component at the unpaired frequency -M/2"""
        axes = [self.frequency_indices == -self.points // 2] * self.dim
        grids = np.meshgrid(*axes, indexing='ij')
        mask = np.logical_or.reduce(grids)
        mask.flags.writeable = False
        return mask


def make_grid(dim: int, extent: float, points: int) -> GridSpec:
    """
    Build a validated periodic grid

    Args:
        dim: Spatial dimension, 1 or 2
        extent: Box side L
        points: Samples per axis M (even, at least 8)

    Returns:
        GridSpec with derived spacing and wavenumbers
    """
    if dim not in (1, 2):
        raise InvalidGrid(f"dim must be 1 or 2, got {dim}")
    if not extent > 0 or not np.isfinite(extent):
        raise InvalidGrid(f"extent must be positive, got {extent}")
    if int(points) != points or points % 2 != 0:
        raise OddPointCount(f"points must be an even integer, got {points}")
    if points < MIN_POINTS:
        raise InvalidGrid(f"points must be at least {MIN_POINTS}, got {points}")
    if points & (points - 1):
        logger.debug("Grid with %d points is not a power of two", points)
    return GridSpec(dim=int(dim), extent=float(extent), points=int(points))


@dataclass(frozen=True, eq=False)
class Field:
    """Immutable complex grid function in row-major layout"""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            if values.size != self.grid.size:
                raise ValueError(
                    f"Field of {values.size} samples does not fit grid {self.grid.shape}"
                )
            values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise NonFiniteField("Field contains NaN or Inf samples")
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_function(cls, grid: GridSpec, function: Callable[..., np.ndarray]) -> 'Field':
        """Sample function(x) or function(x, y) on the grid nodes"""
        return cls(grid, function(*grid.mesh))

    @classmethod
    def zeros(cls, grid: GridSpec) -> 'Field':
        return cls(grid, np.zeros(grid.shape))

    def is_real(self, tolerance: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.values.imag), initial=0.0) <= tolerance)

    def scaled(self, factor: complex) -> 'Field':
        return Field(self.grid, self.values * factor)

    def with_values(self, values: np.ndarray) -> 'Field':
        return Field(self.grid, values)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Centered Fourier coefficients, ordered like GridSpec.wavenumbers"""

    grid: GridSpec
    coefficients: np.ndarray

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2) * self.grid.parseval_weight)


def to_spectrum(values: np.ndarray) -> np.ndarray:
    """Raw centered forward transform of a sample array"""
    return sfft.fftn(sfft.ifftshift(values), workers=get_fft_workers())


def from_spectrum(coefficients: np.ndarray) -> np.ndarray:
    """Raw inverse of to_spectrum"""
    return sfft.fftshift(sfft.ifftn(coefficients, workers=get_fft_workers()))


def forward(f: Field) -> SpectralField:
    return SpectralField(f.grid, to_spectrum(f.values))


def inverse(s: SpectralField) -> Field:
    return Field(s.grid, from_spectrum(s.coefficients))


def apply_multiplier(f: Field, multiplier: np.ndarray) -> Field:
    """Multiply the spectrum by an array laid out like the coefficients"""
    values = from_spectrum(to_spectrum(f.values) * multiplier)
    if f.is_real() and np.all(np.isreal(multiplier)):
        values = values.real
    return Field(f.grid, values)


def apply_symbol(f: Field, symbol: Callable[[np.ndarray], np.ndarray]) -> Field:
    """
    Apply an operator diagonal in frequency space

    Args:
        f: Field to transform
        symbol: Real function of |k|^2, e.g. lambda k2: -k2 for the Laplacian

    Returns:
        inverse(symbol(|k|^2) * forward(f))
    """
    multiplier = np.broadcast_to(np.asarray(symbol(f.grid.k_squared), dtype=float), f.grid.shape)
    if not np.all(np.isfinite(multiplier)):
        raise ValueError("Symbol is not finite on the grid wavenumbers")
    return apply_multiplier(f, multiplier)


def laplacian(f: Field) -> Field:
    return apply_symbol(f, lambda k2: -k2)


def bilaplacian(f: Field) -> Field:
    return apply_symbol(f, lambda k2: k2 ** 2)


def gradient(f: Field) -> List[Field]:
    """Partial derivatives along each axis, Nyquist mode removed"""
    coefficients = to_spectrum(f.values)
    coefficients[f.grid.nyquist_mask] = 0.0
    real = f.is_real()
    components = []
    for k in f.grid.k_mesh:
        values = from_spectrum(1j * k * coefficients)
        components.append(Field(f.grid, values.real if real else values))
    return components


def integrate(grid: GridSpec, g: Union[np.ndarray, Field]) -> float:
    """Box quadrature sum g(x_j) * dx^dim of a real grid function"""
    values = g.values if isinstance(g, Field) else np.asarray(g)
    return float(np.real(np.sum(values)) * grid.cell_volume)


def field_mass(f: Field) -> float:
    return integrate(f.grid, np.abs(f.values) ** 2)


def _interpolation_matrix(grid: GridSpec, stretch: float) -> np.ndarray:
    """
    Rows evaluate the trigonometric interpolant at stretch * x_j

    Fields vanish outside the box, so nodes stretched past L/2 get zero rows
    instead of sampling the periodic extension.
    """
    points = stretch * grid.axis_coordinates
    matrix = np.exp(1j * np.outer(points, grid.wavenumbers)) / grid.points
    matrix[np.abs(points) >= 0.5 * grid.extent] = 0.0
    return matrix


def dilate_with_factor(f: Field, lam: float) -> Tuple[Field, float]:
    """
    Mass-preserving dilation u_lambda(x) = lambda^(N/4) u(sqrt(lambda) x)

    The truncated Fourier series of f (Nyquist mode removed) is evaluated
    directly at the stretched nodes, then rescaled by one real factor so
    the mass matches f exactly.

    Args:
        f: Field to dilate
        lam: Dilation parameter lambda > 0

    Returns:
        Tuple of (dilated field, applied renormalization factor)
    """
    if not lam > 0:
        raise ValueError(f"Dilation parameter must be positive, got {lam}")
    grid = f.grid
    if lam == 1.0:
        return Field(grid, f.values), 1.0

    density = np.abs(f.values) ** 2
    total = float(np.sum(density))
    if total == 0.0:
        return Field(grid, f.values), 1.0

    stretch = np.sqrt(lam)
    if lam < 1.0:
        # only |x_i| <= sqrt(lam) L/2 is sampled after stretching
        reach = stretch * 0.5 * grid.extent
        inside = np.logical_and.reduce([np.abs(x) <= reach for x in grid.mesh])
        leaked = float(np.sum(density[~inside])) / total
        if leaked > SUPPORT_LEAK_LIMIT:
            raise SupportOverflow(
                f"{leaked:.3e} of the mass lies outside the region mapped into the box "
                f"by lambda={lam}"
            )

    coefficients = to_spectrum(f.values)
    coefficients[grid.nyquist_mask] = 0.0
    matrix = _interpolation_matrix(grid, stretch)
    values = coefficients
    for axis in range(grid.dim):
        values = np.moveaxis(np.tensordot(matrix, values, axes=(1, axis)), 0, axis)
    values = values * lam ** (grid.dim / 4.0)
    if f.is_real():
        values = values.real

    new_total = float(np.sum(np.abs(values) ** 2))
    factor = float(np.sqrt(total / new_total)) if new_total > 0 else 1.0
    if abs(factor - 1.0) > RENORMALIZATION_WINDOW:
        logger.warning(
            "Dilation by %.6g renormalized by %.12g; field may be under-resolved", lam, factor
        )
    return Field(grid, values * factor), factor


def dilate(f: Field, lam: float) -> Field:
    """
    Mass-preserving dilation; see dilate_with_factor

    Raises ResolutionLimit when the renormalization factor leaves
    [1 - RENORMALIZATION_WINDOW, 1 + RENORMALIZATION_WINDOW].
    """
    dilated, factor = dilate_with_factor(f, lam)
    if abs(factor - 1.0) > RENORMALIZATION_WINDOW:
        raise ResolutionLimit(
            f"Dilation by {lam:.6g} needed renormalization factor {factor:.12g}; "
            f"the field is under-resolved on this grid"
        )
    return dilated


def translate(f: Field, shift: Tuple[float, ...]) -> Field:
    """Spectral translation u(x + shift)"""
    phase = np.exp(1j * sum(k * s for k, s in zip(f.grid.k_mesh, shift)))
    coefficients = to_spectrum(f.values)
    coefficients[f.grid.nyquist_mask] = 0.0
    return Field(f.grid, from_spectrum(coefficients * phase))
