"""
Global existence from O_c data and instability of ground states by blow-up
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from spectral.grid import Field, GridSpec, dilate
from dynamics.diagnostics import classify_oc, virial_rate_excess
from dynamics.integrator import EvolutionTrace, MonitorConfig, Verdict, evolve
from dynamics.virial import VirialConfig
from solvers.ground_state import GroundState, normalized_ground_state
from solvers.stationary import SolverConfig
from variational.functionals import ModelParams, energy, pohozaev
from utils.errors import InvariantViolation

logger = logging.getLogger(__name__)

GLOBAL_DILATION = 0.5
INSTABILITY_DILATION = 1.05
BOUNDED_GROWTH = 2.0
BLOWUP_GROWTH = 10.0
# dM/dt - 8Q allowance, as a share of the largest 8|Q| while resolved
VIRIAL_BUDGET_RATIO = 0.1


@dataclass
class StabilityReport:
    """
    Outcome of one trajectory started from a dilated ground state

    Args:
        mass: Prescribed mass c
        dilation: lambda used to build psi_0 = (u_c)_lambda
        ground_energy: E(u_c), the level Gamma(c)
        initial_energy: E(psi_0)
        initial_pohozaev: Q(psi_0)
        in_oc: Whether psi_0 lies in O_c
        beta: E(u_c) - E(psi_0), instability runs only
        q_tolerance: Slack on the bound Q(psi(t)) <= -beta
        virial_excess: Largest dM/dt - 8Q over interior output times
        virial_budget: Allowance on virial_excess, VIRIAL_BUDGET_RATIO of max 8|Q|
        trace: Trajectory diagnostics
    """

    mass: float
    dilation: float
    ground_energy: float
    initial_energy: float
    initial_pohozaev: float
    in_oc: bool
    trace: EvolutionTrace = field(repr=False)
    beta: float = 0.0
    q_tolerance: float = 0.0
    virial_excess: float = float('nan')
    virial_budget: float = float('nan')
    violations: List[str] = field(default_factory=list)

    @property
    def verdict(self) -> Verdict:
        return self.trace.verdict

    def to_record(self) -> dict:
        return {
            'mass': self.mass,
            'dilation': self.dilation,
            'ground_energy': self.ground_energy,
            'initial_energy': self.initial_energy,
            'initial_pohozaev': self.initial_pohozaev,
            'in_oc': self.in_oc,
            'beta': self.beta,
            'q_tolerance': self.q_tolerance,
            'virial_excess': self.virial_excess,
            'virial_budget': self.virial_budget,
            'virial_within_budget': self.virial_within_budget,
            'verdict': self.trace.verdict.value,
            'bilap_growth': self.trace.bilap_growth(),
            'mass_deviation': self.trace.mass_deviation(),
            'energy_deviation': self.trace.energy_deviation(),
            'steps': self.trace.steps,
            'restarts': self.trace.restarts,
            'violations': len(self.violations),
        }

    @property
    def virial_within_budget(self) -> bool:
        return bool(self.virial_excess <= self.virial_budget)

    def raise_on_violations(self) -> 'StabilityReport':
        if self.violations:
            raise InvariantViolation(self.violations)
        return self


def _ground_state(c: float, p: ModelParams, grid: GridSpec, cfg: Optional[SolverConfig], state: Optional[GroundState]):
    if state is not None:
        return state
    return normalized_ground_state(c, p, grid, cfg or SolverConfig.from_settings())


def global_existence_experiment(
    c: float,
    p: ModelParams,
    grid: GridSpec,
    horizon: float,
    cfg: Optional[SolverConfig] = None,
    tau: Optional[float] = None,
    vcfg: Optional[VirialConfig] = None,
    monitor: Optional[MonitorConfig] = None,
    dilation: float = GLOBAL_DILATION,
    state: Optional[GroundState] = None,
) -> StabilityReport:
    """
    Evolve psi_0 = (u_c)_lambda with small lambda, which lies in O_c

    Expected: the run completes, Q(psi(t)) stays positive and ||Lap psi||
    stays within twice its initial value.
    """
    gs = _ground_state(c, p, grid, cfg, state)
    psi0 = dilate(gs.field, dilation)
    in_oc = classify_oc(psi0, gs.energy, p)
    vcfg = vcfg or VirialConfig.for_grid(grid)
    trace = evolve(psi0, horizon, tau, p, vcfg, monitor=monitor)

    report = StabilityReport(
        mass=gs.mass,
        dilation=dilation,
        ground_energy=gs.energy,
        initial_energy=energy(psi0, p),
        initial_pohozaev=pohozaev(psi0, p),
        in_oc=in_oc,
        trace=trace,
    )
    if not in_oc:
        report.violations.append("initial datum is not in O_c")
    if trace.verdict is not Verdict.COMPLETED:
        report.violations.append(f"verdict {trace.verdict.value}, expected completed")
    if not all(q > 0 for q in trace.q_series):
        report.violations.append(f"Q reached {min(trace.q_series):.6g}")
    bilap = np.asarray(trace.bilap_norm_series)
    if not np.max(bilap) <= BOUNDED_GROWTH * bilap[0]:
        report.violations.append(f"||Lap psi|| grew by {np.max(bilap) / bilap[0]:.4g}")
    logger.info(
        "Global existence run at mass %.10g: verdict %s, %d violations",
        gs.mass, trace.verdict.value, len(report.violations),
    )
    return report


def instability_experiment(
    c: float,
    lambda_perturb: float,
    p: ModelParams,
    grid: GridSpec,
    horizon: float,
    cfg: Optional[SolverConfig] = None,
    tau: Optional[float] = None,
    vcfg: Optional[VirialConfig] = None,
    monitor: Optional[MonitorConfig] = None,
    state: Optional[GroundState] = None,
) -> StabilityReport:
    """
    Evolve psi_0 = (u_c)_lambda with lambda > 1, just past the fibering maximum

    Expected: E(psi_0) < E(u_c), Q(psi_0) < 0, Q(psi(t)) <= -beta while the
    run is resolved, and ||Lap psi|| grows at least tenfold before the run
    stops on a blow-up or resolution verdict. The virial rate excess is
    reported, not asserted.
    """
    if not lambda_perturb > 1.0:
        raise ValueError(f"Perturbing dilation must exceed 1, got {lambda_perturb}")
    gs = _ground_state(c, p, grid, cfg, state)
    psi0 = dilate(gs.field, lambda_perturb)
    e0 = energy(psi0, p)
    q0 = pohozaev(psi0, p)
    beta = gs.energy - e0
    vcfg = vcfg or VirialConfig.for_grid(grid)
    trace = evolve(psi0, horizon, tau, p, vcfg, monitor=monitor)

    # the bound follows from energy conservation, so its slack is the measured drift
    q_tolerance = max(1e-8 * abs(gs.energy), 10.0 * trace.energy_deviation())
    resolved = len(trace.q_series)
    if trace.verdict is Verdict.RESOLUTION_EXHAUSTED:
        resolved -= 1
    excess = virial_rate_excess(trace.times[:resolved], trace.virial_series[:resolved], trace.q_series[:resolved])
    q_peak = max((abs(q) for q in trace.q_series[:resolved]), default=0.0)

    report = StabilityReport(
        mass=gs.mass,
        dilation=lambda_perturb,
        ground_energy=gs.energy,
        initial_energy=e0,
        initial_pohozaev=q0,
        in_oc=classify_oc(psi0, gs.energy, p),
        trace=trace,
        beta=beta,
        q_tolerance=q_tolerance,
        virial_excess=max(excess) if excess else float('nan'),
        virial_budget=VIRIAL_BUDGET_RATIO * 8.0 * q_peak,
    )
    if not e0 < gs.energy:
        report.violations.append(f"E(psi_0) = {e0:.12g} is not below E(u_c) = {gs.energy:.12g}")
    if not q0 < 0:
        report.violations.append(f"Q(psi_0) = {q0:.6g} is not negative")
    worst_q = max(trace.q_series[:resolved], default=-np.inf)
    if worst_q > -beta + q_tolerance:
        report.violations.append(f"Q reached {worst_q:.6g} above -beta = {-beta:.6g}")
    if trace.verdict is Verdict.COMPLETED:
        report.violations.append("run completed without a blow-up or resolution verdict")
    if trace.bilap_growth() < BLOWUP_GROWTH:
        report.violations.append(f"||Lap psi|| grew only {trace.bilap_growth():.4g}x")
    logger.info(
        "Instability run at mass %.10g: beta = %.6g, verdict %s, growth %.4g",
        gs.mass, beta, trace.verdict.value, trace.bilap_growth(),
    )
    return report
