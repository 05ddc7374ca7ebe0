"""
Fourier rearrangement on the grid
"""
import logging
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from spectral.grid import Field, GridSpec, from_spectrum, to_spectrum

logger = logging.getLogger(__name__)


@lru_cache(maxsize=16)
def _rearrangement_units(grid: GridSpec) -> Tuple[Tuple[int, ...], ...]:
    """
    Frequency positions in rearrangement order, grouped into mirror units

    Positions are ordered by integer |n|^2, ties broken lexicographically on
    the integer frequency tuple. Each position is grouped with its mirror
    -n (mod M) so that the assigned spectrum stays conjugate-symmetric;
    self-mirrored positions (zero and Nyquist combinations) form singletons.
    Entries are flat indices into the coefficient array.
    """
    n = grid.frequency_indices
    axes = np.meshgrid(*([n] * grid.dim), indexing='ij')
    tuples = np.stack([a.ravel() for a in axes], axis=1)
    norms = np.sum(tuples ** 2, axis=1)
    keys = [norms] + [tuples[:, j] for j in reversed(range(grid.dim))]
    order = np.lexsort(keys)

    mirrors = np.ravel_multi_index(
        tuple((-tuples[:, j]) % grid.points for j in range(grid.dim)), grid.shape
    )
    flat_of = np.ravel_multi_index(
        tuple(tuples[:, j] % grid.points for j in range(grid.dim)), grid.shape
    )

    seen = np.zeros(grid.size, dtype=bool)
    units: List[Tuple[int, ...]] = []
    for position in order:
        flat = int(flat_of[position])
        if seen[flat]:
            continue
        mirror = int(mirrors[position])
        seen[flat] = True
        if mirror == flat:
            units.append((flat,))
        else:
            seen[mirror] = True
            units.append((flat, mirror))
    return tuple(units)


def fourier_rearrangement(u: Field) -> Field:
    """
    Symmetric-decreasing rearrangement of the Fourier modulus

    Magnitudes |u_hat| are sorted in descending order and handed out along
    the rearrangement order. A mirror pair receives the root mean square
    of its two magnitudes on both positions, which keeps the multiset of
    squared magnitudes (hence mass and every derivative norm of the strict
    assignment) while making the output real and even. All phases are zero.

    Args:
        u: Field to rearrange

    Returns:
        u_sharp, real and even under x -> -x
    """
    grid = u.grid
    magnitudes = np.sort(np.abs(to_spectrum(u.values)).ravel())[::-1]
    assigned = np.zeros(grid.size)
    cursor = 0
    for unit in _rearrangement_units(grid):
        width = len(unit)
        chunk = magnitudes[cursor:cursor + width]
        assigned[list(unit)] = np.sqrt(np.mean(chunk ** 2))
        cursor += width
    values = from_spectrum(assigned.reshape(grid.shape))
    return Field(grid, values.real)


def rearrangement_distance(u: Field) -> float:
    """L2 distance between u and its Fourier rearrangement"""
    sharp = fourier_rearrangement(u)
    diff = np.abs(u.values - sharp.values) ** 2
    return float(np.sqrt(np.sum(diff) * u.grid.cell_volume))
