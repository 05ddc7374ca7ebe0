"""
Strang split-step integration of i psi_t - gamma Lap^2 psi + Lap psi + |psi|^{2 sigma} psi = 0
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
from django.conf import settings

from spectral.grid import Field, GridSpec, from_spectrum, to_spectrum
from dynamics.diagnostics import TAIL_CUTOFF_RATIO, tail_fraction
from dynamics.virial import VirialConfig, localized_virial
from variational.functionals import (
    ModelParams,
    energy_from_triple,
    mass,
    pohozaev_from_triple,
    triple,
)
from utils.errors import ConfigError

logger = logging.getLogger(__name__)

TRACE_HEADER = 't,mass,energy,bilap,grad,Q,virial'
DEFAULT_OUTPUT_COUNT = 200


class Verdict(str, Enum):
    COMPLETED = 'completed'
    BLOW_UP_DETECTED = 'blow_up_detected'
    RESOLUTION_EXHAUSTED = 'resolution_exhausted'


@dataclass(frozen=True)
class MonitorConfig:
    """
    Early-termination thresholds of evolve

    Args:
        growth_factor: Blow-up verdict when ||Lap psi|| exceeds this multiple of its initial value
        tail_fraction: Resolution alarm when the spectral tail holds more than this share of mass
        tail_cutoff_ratio: Tail starts at this fraction of the Nyquist wavenumber
        max_restarts: Time-step halvings allowed after resolution alarms
    """

    growth_factor: float = 50.0
    tail_fraction: float = 1e-4
    tail_cutoff_ratio: float = TAIL_CUTOFF_RATIO
    max_restarts: int = 1

    @classmethod
    def from_settings(cls, **overrides) -> 'MonitorConfig':
        values = {
            'growth_factor': settings.BLOWUP_GROWTH_FACTOR,
            'tail_fraction': settings.RESOLUTION_TAIL_FRACTION,
        }
        values.update(overrides)
        return cls(**values)


@dataclass
class EvolutionTrace:
    times: List[float] = field(default_factory=list)
    mass_series: List[float] = field(default_factory=list)
    energy_series: List[float] = field(default_factory=list)
    bilap_norm_series: List[float] = field(default_factory=list)
    grad_norm_series: List[float] = field(default_factory=list)
    q_series: List[float] = field(default_factory=list)
    virial_series: List[float] = field(default_factory=list)
    verdict: Verdict = Verdict.COMPLETED
    final_state: Optional[Field] = None
    tau: float = 0.0
    steps: int = 0
    restarts: int = 0

    def record(self, t: float, psi: Field, p: ModelParams, vcfg: VirialConfig):
        tr = triple(psi, p)
        self.times.append(t)
        self.mass_series.append(mass(psi))
        self.energy_series.append(energy_from_triple(tr, p))
        self.bilap_norm_series.append(math.sqrt(tr.A))
        self.grad_norm_series.append(math.sqrt(tr.B))
        self.q_series.append(pohozaev_from_triple(tr, p))
        self.virial_series.append(localized_virial(psi, vcfg))

    def truncate(self, length: int):
        for name in ('times', 'mass_series', 'energy_series', 'bilap_norm_series',
                     'grad_norm_series', 'q_series', 'virial_series'):
            del getattr(self, name)[length:]

    def rows(self) -> np.ndarray:
        """Columns in TRACE_HEADER order"""
        return np.column_stack([
            self.times, self.mass_series, self.energy_series, self.bilap_norm_series,
            self.grad_norm_series, self.q_series, self.virial_series,
        ])

    def mass_deviation(self) -> float:
        m = np.asarray(self.mass_series)
        return float(np.max(np.abs(m - m[0])) / m[0]) if m.size and m[0] > 0 else 0.0

    def energy_deviation(self) -> float:
        e = np.asarray(self.energy_series)
        return float(np.max(np.abs(e - e[0]))) if e.size else 0.0

    def bilap_growth(self) -> float:
        b = np.asarray(self.bilap_norm_series)
        return float(np.max(b) / b[0]) if b.size and b[0] > 0 else 0.0

    def to_record(self) -> dict:
        """Sidecar of the final-state checkpoint"""
        return {
            'verdict': self.verdict.value,
            'final_time': self.times[-1] if self.times else 0.0,
            'tau': self.tau,
            'steps': self.steps,
            'restarts': self.restarts,
            'mass_deviation': self.mass_deviation(),
            'bilap_growth': self.bilap_growth(),
        }


def default_time_step(grid: GridSpec, gamma: float) -> float:
    """tau = 0.25 dx^2 / max(1, sqrt(gamma))"""
    return 0.25 * grid.spacing ** 2 / max(1.0, math.sqrt(gamma))


def _linear_propagator(grid: GridSpec, tau: float, gamma: float) -> np.ndarray:
    k2 = grid.k_squared
    return np.exp(-1j * tau * (gamma * k2 ** 2 + k2))


def _strang(values: np.ndarray, propagator: np.ndarray, half_tau: float, sigma: float, coupling: float) -> np.ndarray:
    values = values * np.exp(1j * half_tau * coupling * np.abs(values) ** (2.0 * sigma))
    values = from_spectrum(to_spectrum(values) * propagator)
    return values * np.exp(1j * half_tau * coupling * np.abs(values) ** (2.0 * sigma))


def step_strang(psi: Field, tau: float, p: ModelParams, nonlinear_coefficient: float = 1.0) -> Field:
    """
    One Strang step: half nonlinear phase, exact linear flow, half nonlinear phase

    Args:
        psi: Current state
        tau: Time step; negative values step backwards
        p: Model parameters
        nonlinear_coefficient: Multiplies |psi|^{2 sigma}; zero gives the linear flow

    Returns:
        State after one step
    """
    propagator = _linear_propagator(psi.grid, tau, p.gamma)
    return Field(psi.grid, _strang(psi.values, propagator, 0.5 * tau, p.sigma, nonlinear_coefficient))


def evolve(
    psi0: Field,
    horizon: float,
    tau: Optional[float],
    p: ModelParams,
    vcfg: VirialConfig,
    monitor: Optional[MonitorConfig] = None,
    output_interval: Optional[float] = None,
) -> EvolutionTrace:
    """
    Integrate to the horizon, recording diagnostics at every output time

    The step is shrunk so that a whole number of steps reaches the horizon.
    Evolution stops early with blow_up_detected when ||Lap psi|| grows past
    the monitor's factor, and with resolution_exhausted when the spectral
    tail alarm persists after the allowed time-step halvings. A halving
    restarts from the last recorded state.

    Args:
        psi0: Initial state
        horizon: Final time, > 0
        tau: Time step, default_time_step when None
        p: Model parameters
        vcfg: Virial localization
        monitor: Termination thresholds, from settings when None
        output_interval: Time between records, horizon/200 when None

    Returns:
        EvolutionTrace with verdict and final state
    """
    if not horizon > 0:
        raise ConfigError(f"Horizon must be positive, got {horizon}")
    grid = psi0.grid
    tau = tau if tau is not None else default_time_step(grid, p.gamma)
    if not tau > 0:
        raise ConfigError(f"Time step must be positive, got {tau}")
    monitor = monitor or MonitorConfig.from_settings()
    interval = output_interval if output_interval is not None else horizon / DEFAULT_OUTPUT_COUNT
    interval = min(max(interval, tau), horizon)

    trace = EvolutionTrace()
    trace.record(0.0, psi0, p, vcfg)
    initial_bilap = trace.bilap_norm_series[0]
    threshold = monitor.growth_factor * initial_bilap

    snapshot_time, snapshot = 0.0, psi0.values
    total_steps = 0
    while True:
        remaining = horizon - snapshot_time
        steps = max(1, math.ceil(remaining / tau - 1e-9))
        tau_eff = remaining / steps
        record_every = max(1, int(round(interval / tau_eff)))
        propagator = _linear_propagator(grid, tau_eff, p.gamma)
        trace.tau = tau_eff
        values = snapshot
        alarm = False

        for n in range(1, steps + 1):
            values = _strang(values, propagator, 0.5 * tau_eff, p.sigma, 1.0)
            total_steps += 1
            if n % record_every != 0 and n != steps:
                continue
            t = snapshot_time + n * tau_eff
            psi = Field(grid, values)
            trace.record(t, psi, p, vcfg)
            if trace.bilap_norm_series[-1] > threshold:
                logger.info("Blow-up detected at t = %.6g: ||Lap psi|| = %.6g", t, trace.bilap_norm_series[-1])
                return _finish(trace, psi, Verdict.BLOW_UP_DETECTED, total_steps)
            fraction = tail_fraction(psi, monitor.tail_cutoff_ratio)
            if fraction > monitor.tail_fraction:
                alarm = True
                break
            snapshot_time, snapshot = t, values

        if not alarm:
            return _finish(trace, Field(grid, values), Verdict.COMPLETED, total_steps)

        if trace.restarts >= monitor.max_restarts:
            logger.warning(
                "Resolution exhausted at t = %.6g (tail fraction %.3e)", trace.times[-1], fraction
            )
            return _finish(trace, Field(grid, values), Verdict.RESOLUTION_EXHAUSTED, total_steps)

        trace.restarts += 1
        tau = 0.5 * tau_eff
        trace.truncate(trace.times.index(snapshot_time) + 1)
        logger.warning(
            "Resolution alarm (tail fraction %.3e); restarting from t = %.6g with tau = %.3e",
            fraction, snapshot_time, tau,
        )


def _finish(trace: EvolutionTrace, psi: Field, verdict: Verdict, steps: int) -> EvolutionTrace:
    trace.final_state = psi
    trace.verdict = verdict
    trace.steps = steps
    return trace
