"""
Band-limited Gaussian random fields for certification sampling
"""
from typing import Iterator, Optional

import numpy as np
from django.conf import settings

from spectral.grid import Field, GridSpec, from_spectrum

SPECTRAL_DECAY = 4.0
BAND_FRACTION = 0.5


def get_rng(seed: Optional[int] = None) -> np.random.Generator:
    """Generator seeded by RANDOM_FIELD_SEED unless a seed is given"""
    return np.random.default_rng(settings.RANDOM_FIELD_SEED if seed is None else seed)


def random_smooth_field(grid: GridSpec, rng: np.random.Generator, real: bool = False) -> Field:
    """
    Complex Gaussian coefficients with amplitude (1 + |k|^2)^(-2)

    Modes above half the Nyquist wavenumber and the Nyquist mode itself
    are zero, so every sample is resolved and its derivatives are exact.
    """
    shape = grid.shape
    coefficients = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    coefficients *= (1.0 + grid.k_squared) ** (-0.5 * SPECTRAL_DECAY)
    coefficients[np.sqrt(grid.k_squared) > BAND_FRACTION * grid.nyquist] = 0.0
    coefficients[grid.nyquist_mask] = 0.0
    values = from_spectrum(coefficients * grid.size)
    return Field(grid, values.real if real else values)


def random_fields(grid: GridSpec, count: int, seed: Optional[int] = None, real: bool = False) -> Iterator[Field]:
    rng = get_rng(seed)
    for _ in range(count):
        yield random_smooth_field(grid, rng, real=real)
