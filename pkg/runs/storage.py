"""
Run artifacts: reports, CSV tables, checkpoints with sidecars and manifests
"""
import io
import json
import logging
import platform
import time
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
from django.conf import settings

from spectral.checkpoint import read_checkpoint, write_checkpoint
from spectral.grid import Field, GridSpec
from solvers.ground_state import GroundState
from utils.errors import LabIoError, exit_code_for
from utils.keyvalue import atomic_write_bytes, atomic_write_text, format_document, read_document

logger = logging.getLogger(__name__)

CSV_FORMAT = '%.17g'
SIDECAR_SUFFIX = '.txt'
VERSIONED_PACKAGES = ('numpy', 'scipy', 'Django', 'djangorestframework')


def package_versions() -> Dict[str, str]:
    versions = {'python': platform.python_version()}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name.lower()] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name.lower()] = 'unknown'
    return versions


def default_output_dir(command: str) -> Path:
    """LAB_OUTPUT_DIR/<command>-<UTC timestamp>"""
    stamp = time.strftime('%Y%m%dT%H%M%SZ', time.gmtime())
    return Path(settings.LAB_OUTPUT_DIR) / f"{command}-{stamp}"


def sidecar_path(checkpoint: Union[str, Path]) -> Path:
    return Path(checkpoint).with_suffix(SIDECAR_SUFFIX)


def format_table(header: str, rows: Union[np.ndarray, Sequence[Sequence[float]]]) -> bytes:
    """CSV bytes with a bare header line and 17 significant digits"""
    table = np.asarray(rows, dtype=float)
    if table.size == 0:
        return (header + '\n').encode('utf-8')
    if table.ndim == 1:
        table = table.reshape(1, -1)
    buffer = io.BytesIO()
    np.savetxt(buffer, table, fmt=CSV_FORMAT, delimiter=',', header=header, comments='')
    return buffer.getvalue()


class RunArtifacts:
    """Writes everything a run leaves behind into one output directory"""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self.written = []
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise LabIoError(f"Cannot create output directory {self.directory}: {str(e)}") from e

    def path(self, name: str) -> Path:
        return self.directory / name

    def _track(self, path: Path) -> Path:
        self.written.append(path.name)
        logger.debug("Wrote %s", path)
        return path

    def write_report(self, values: Dict[str, Any], header: str = '', name: str = 'report.txt') -> Path:
        return self._track(atomic_write_text(self.path(name), format_document(values, header)))

    def write_table(self, name: str, header: str, rows) -> Path:
        return self._track(atomic_write_bytes(self.path(name), format_table(header, rows)))

    def write_field(
        self,
        name: str,
        field: Field,
        gamma: float,
        sigma: float,
        record: Optional[Dict[str, Any]] = None,
    ) -> Path:
        """Checkpoint plus an optional structured-text sidecar"""
        path = self._track(write_checkpoint(field, gamma, sigma, self.path(f"{name}.bin")))
        if record is not None:
            self._track(atomic_write_text(sidecar_path(path), format_document(record)))
        return path

    def write_ground_state(self, name: str, state: GroundState) -> Path:
        p = state.params
        return self.write_field(name, state.field, p.gamma, p.sigma, state.to_record())

    def write_manifest(
        self,
        command: str,
        config_text: str,
        config: Dict[str, Any],
        grid: GridSpec,
        rng_seed: int,
        wall_time: float,
        exit_status: int,
    ) -> Path:
        manifest = {
            'command': command,
            'config': config,
            'config_text': config_text,
            'versions': package_versions(),
            'wall_time': wall_time,
            'grid': {'dim': grid.dim, 'extent': grid.extent, 'points': grid.points},
            'seeds': {'rng_seed': rng_seed},
            'exit_status': exit_status,
            'fft_workers': int(settings.BINLS_THREADS),
            'artifacts': sorted(self.written),
        }
        text = json.dumps(manifest, sort_keys=True, indent=2, default=str)
        return atomic_write_text(self.path('manifest.json'), text + '\n')

    def write_error(self, error: BaseException) -> Path:
        record = {
            'category': getattr(error, 'category', type(error).__name__),
            'type': type(error).__name__,
            'message': str(error),
            'exit_code': exit_code_for(error),
        }
        violations = getattr(error, 'violations', None) or getattr(error, 'errors', None)
        if violations:
            record['details'] = list(violations)
        text = json.dumps(record, sort_keys=True, indent=2)
        return self._track(atomic_write_text(self.path('error.json'), text + '\n'))


def read_ground_state(path: Union[str, Path], expected_grid: Optional[GridSpec] = None) -> GroundState:
    """
    Load a ground-state checkpoint and its sidecar

    Every derived quantity is recomputed from the field and the invariants
    are checked again, so a stale or edited sidecar fails loudly.

    Args:
        path: Checkpoint file
        expected_grid: When given, the stored grid must match it

    Returns:
        Validated GroundState
    """
    field, header = read_checkpoint(path, expected_grid)
    record = read_document(sidecar_path(path))
    record.setdefault('gamma', header.gamma)
    record.setdefault('sigma', header.sigma)
    record.setdefault('dim', header.dim)
    return GroundState.from_record(field, record)

