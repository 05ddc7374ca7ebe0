"""
Binary field checkpoints
"""
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from spectral.grid import Field, GridSpec, make_grid
from utils.keyvalue import atomic_write_bytes
from utils.errors import BadMagic, ConfigError, DimensionMismatch, LabIoError, TruncatedFile

logger = logging.getLogger(__name__)

MAGIC = b"B4NLS1\0\0"
HEADER = struct.Struct('<8sIIddd')
SAMPLE_DTYPE = np.dtype('<c16')


@dataclass(frozen=True)
class CheckpointHeader:
    """Grid and model metadata stored in front of the samples"""

    dim: int
    points: int
    extent: float
    gamma: float
    sigma: float

    def grid(self) -> GridSpec:
        return make_grid(self.dim, self.extent, self.points)


def write_checkpoint(field: Field, gamma: float, sigma: float, path: Union[str, Path]) -> Path:
    """
    Write a field in the little-endian checkpoint format

    Args:
        field: Field to store
        gamma: Fourth-order dispersion coefficient recorded in the header
        sigma: Nonlinearity power recorded in the header
        path: Destination file

    Returns:
        The destination path
    """
    grid = field.grid
    header = HEADER.pack(MAGIC, grid.dim, grid.points, grid.extent, float(gamma), float(sigma))
    samples = np.ascontiguousarray(field.values, dtype=SAMPLE_DTYPE)
    written = atomic_write_bytes(path, header + samples.tobytes(order='C'))
    logger.debug("Wrote checkpoint %s (%s samples)", written, samples.size)
    return written


def read_checkpoint(
    path: Union[str, Path],
    expected_grid: Optional[GridSpec] = None,
) -> Tuple[Field, CheckpointHeader]:
    """
    Read a checkpoint written by write_checkpoint

    Args:
        path: Checkpoint file
        expected_grid: When given, the stored grid must match it

    Returns:
        Tuple of (field, header)
    """
    try:
        payload = Path(path).read_bytes()
    except OSError as e:
        raise LabIoError(f"Error reading {path}: {str(e)}") from e

    if len(payload) < len(MAGIC) or payload[:len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path} is not a field checkpoint")
    if len(payload) < HEADER.size:
        raise TruncatedFile(f"{path} ends inside the header")

    _, dim, points, extent, gamma, sigma = HEADER.unpack_from(payload)
    header = CheckpointHeader(dim=dim, points=points, extent=extent, gamma=gamma, sigma=sigma)

    if expected_grid is not None and (
        expected_grid.dim != dim or expected_grid.points != points
    ):
        raise DimensionMismatch(
            f"{path} holds a {dim}-dimensional grid with {points} points per axis, "
            f"expected {expected_grid.dim} and {expected_grid.points}"
        )

    try:
        grid = header.grid()
    except ConfigError as e:
        raise DimensionMismatch(f"{path} has an invalid grid header: {str(e)}") from e

    expected_bytes = HEADER.size + grid.size * SAMPLE_DTYPE.itemsize
    if len(payload) < expected_bytes:
        raise TruncatedFile(
            f"{path} holds {len(payload)} bytes, expected {expected_bytes}"
        )
    if len(payload) > expected_bytes:
        raise DimensionMismatch(
            f"{path} holds {len(payload) - expected_bytes} bytes beyond the declared grid"
        )

    samples = np.frombuffer(payload, dtype=SAMPLE_DTYPE, offset=HEADER.size, count=grid.size)
    field = Field(grid, samples.astype(np.complex128).reshape(grid.shape))
    return field, header
