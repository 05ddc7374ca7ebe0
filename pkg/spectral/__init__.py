"""
Periodic spectral discretization
"""
from spectral.grid import (
    Field,
    GridSpec,
    SpectralField,
    apply_symbol,
    bilaplacian,
    dilate,
    dilate_with_factor,
    field_mass,
    forward,
    gradient,
    integrate,
    inverse,
    laplacian,
    make_grid,
    translate,
)

__all__ = [
    'Field',
    'GridSpec',
    'SpectralField',
    'apply_symbol',
    'bilaplacian',
    'dilate',
    'dilate_with_factor',
    'field_mass',
    'forward',
    'gradient',
    'integrate',
    'inverse',
    'laplacian',
    'make_grid',
    'translate',
]
