"""
Resolution monitor, O_c membership and the virial rate check
"""
import logging
from typing import List

import numpy as np

from spectral.grid import Field, to_spectrum
from variational.functionals import ModelParams, energy, pohozaev

logger = logging.getLogger(__name__)

TAIL_CUTOFF_RATIO = 5.0 / 6.0


def tail_fraction(psi: Field, cutoff_ratio: float = TAIL_CUTOFF_RATIO) -> float:
    """Fraction of spectral power at |k| >= cutoff_ratio * pi M/L"""
    grid = psi.grid
    power = np.abs(to_spectrum(psi.values)) ** 2
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    tail = np.sqrt(grid.k_squared) >= cutoff_ratio * grid.nyquist
    return float(np.sum(power[tail])) / total


def classify_oc(psi: Field, gamma_c: float, p: ModelParams) -> bool:
    """True iff E(psi) < gamma_c and Q(psi) > 0, both strict"""
    return energy(psi, p) < gamma_c and pohozaev(psi, p) > 0


def virial_rate_excess(times: List[float], virial: List[float], q_series: List[float]) -> List[float]:
    """
    Centered differences of the virial series minus 8 Q at interior output times

    Positive entries are where dM/dt exceeds 8 Q; the remainder terms of
    the localized identity make small positive values admissible.
    """
    t = np.asarray(times)
    m = np.asarray(virial)
    q = np.asarray(q_series)
    if t.size < 3:
        return []
    rate = (m[2:] - m[:-2]) / (t[2:] - t[:-2])
    return list(rate - 8.0 * q[1:-1])
