"""
Run configuration documents: parsing, validation and serialization
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from spectral.grid import GridSpec, make_grid
from dynamics.integrator import MonitorConfig
from dynamics.virial import VirialConfig
from solvers.stationary import SolverConfig
from variational.functionals import ModelParams
from utils.errors import ConfigParseError, ConfigValidationError
from utils.keyvalue import coerce_value, format_document, parse_lines

from .serializers import RunConfigSerializer

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = ('command', 'output_dir', 'rng_seed')
SECTIONS = ('model', 'grid', 'solver', 'dynamics', 'sweep')
LIST_KEYS = ('sweep.masses', 'sweep.mass_factors')

# Bare keys accepted for the most common settings
ALIASES = {
    'gamma': 'model.gamma',
    'sigma': 'model.sigma',
    'dim': 'model.dim',
    'mass': 'model.mass',
    'mass_factor': 'model.mass_factor',
    'extent': 'grid.extent',
    'points': 'grid.points',
    'horizon': 'dynamics.horizon',
    'tau': 'dynamics.tau',
    'masses': 'sweep.masses',
    'seed': 'rng_seed',
    'output': 'output_dir',
}


def known_keys() -> List[str]:
    """Every dotted key a document may set"""
    fields = RunConfigSerializer().fields
    keys = list(TOP_LEVEL_KEYS)
    for section in SECTIONS:
        keys.extend(f"{section}.{name}" for name in fields[section].fields)
    return keys


@dataclass(frozen=True)
class DynamicsConfig:
    horizon: float = 50.0
    tau: Optional[float] = None
    virial_radius: Optional[float] = None
    output_interval: Optional[float] = None
    lambda_global: float = 0.5
    lambda_perturb: float = 1.05
    growth_factor: float = 50.0
    tail_fraction: float = 1e-4
    max_restarts: int = 1
    initial_checkpoint: Optional[str] = None

    def monitor(self) -> MonitorConfig:
        return MonitorConfig(
            growth_factor=self.growth_factor,
            tail_fraction=self.tail_fraction,
            max_restarts=self.max_restarts,
        )

    def virial(self, grid: GridSpec) -> VirialConfig:
        return VirialConfig.for_grid(grid, self.virial_radius)


@dataclass(frozen=True)
class SweepConfig:
    masses: Optional[List[float]] = None
    mass_factors: Optional[List[float]] = None
    n_max: int = 4
    certify_samples: int = 200
    threshold_samples: int = 100


@dataclass(frozen=True)
class RunConfig:
    """
    Fully validated run configuration

    Args:
        command: Subcommand to dispatch
        model: Model parameters (mass_target set when the mass is absolute)
        mass_factor: Mass as a multiple of c_N*, resolved at run time
        grid: Grid
        solver: Solver controls
        dynamics: Time-integration settings
        sweep: Sweep and sampling settings
        output_dir: Artifact directory, derived from LAB_OUTPUT_DIR when None
        rng_seed: Random-field seed
    """

    command: str
    model: ModelParams
    grid: GridSpec
    solver: SolverConfig
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    mass_factor: Optional[float] = None
    output_dir: Optional[str] = None
    rng_seed: int = 0


def _canonical_key(key: str, valid: set, line: Optional[int] = None) -> str:
    canonical = ALIASES.get(key, key)
    if canonical not in valid:
        raise ConfigParseError("unknown key", line=line, key=key)
    return canonical


def flatten_errors(errors: Any, prefix: str = '') -> List[str]:
    """Turn nested serializer errors into 'dotted.key: message' strings"""
    messages = []
    if isinstance(errors, dict):
        for key, value in errors.items():
            name = prefix if key == 'non_field_errors' else (f"{prefix}.{key}" if prefix else str(key))
            messages.extend(flatten_errors(value, name))
    elif isinstance(errors, (list, tuple)):
        for item in errors:
            messages.extend(flatten_errors(item, prefix))
    else:
        messages.append(f"{prefix}: {errors}" if prefix else str(errors))
    return messages


def _nest(flat: Dict[str, Any]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        if key in LIST_KEYS and value is not None and not isinstance(value, list):
            value = [value]
        if '.' in key:
            section, name = key.split('.', 1)
            nested.setdefault(section, {})[name] = value
        else:
            nested[key] = value
    return nested


def parse_config(text: str, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Parse and validate a configuration document

    Args:
        text: Flat key-value document with dotted namespaces
        overrides: Values applied on top of the document (command-line flags);
            strings are interpreted like document values

    Returns:
        RunConfig with every default applied
    """
    valid = set(known_keys())
    flat: Dict[str, Any] = {}
    origin: Dict[str, int] = {}
    for line, key, value in parse_lines(text):
        canonical = _canonical_key(key, valid, line)
        if canonical in flat:
            raise ConfigParseError(f"also set on line {origin[canonical]}", line=line, key=key)
        flat[canonical] = value
        origin[canonical] = line

    for key, value in (overrides or {}).items():
        canonical = _canonical_key(key.strip().lower(), valid)
        flat[canonical] = coerce_value(value) if isinstance(value, str) else value

    serializer = RunConfigSerializer(data=_nest(flat))
    if not serializer.is_valid():
        raise ConfigValidationError(flatten_errors(serializer.errors))
    return _build(serializer.validated_data)


def _build(data: Dict[str, Any]) -> RunConfig:
    model = data['model']
    grid = data['grid']
    solver = data['solver']
    dynamics = data['dynamics']
    sweep = data['sweep']
    return RunConfig(
        command=data['command'],
        model=ModelParams(
            gamma=float(model['gamma']),
            sigma=float(model['sigma']),
            dim=int(model['dim']),
            mass_target=model.get('mass'),
        ),
        mass_factor=model.get('mass_factor'),
        grid=make_grid(int(model['dim']), float(grid['extent']), int(grid['points'])),
        solver=SolverConfig(
            max_iterations=int(solver['max_iterations']),
            residual_tolerance=float(solver['residual_tolerance']),
            petviashvili_exponent=solver.get('petviashvili_exponent'),
            alpha_bracket=(float(solver['alpha_min']), float(solver['alpha_max'])),
            scan_points=int(solver['scan_points']),
            seed_profile=solver['seed_profile'],
            seed_checkpoint=solver.get('seed_checkpoint'),
        ),
        dynamics=DynamicsConfig(**{k: v for k, v in dynamics.items()}),
        sweep=SweepConfig(
            masses=list(sweep['masses']) if sweep.get('masses') is not None else None,
            mass_factors=list(sweep['mass_factors']) if sweep.get('mass_factors') is not None else None,
            n_max=sweep['n_max'],
            certify_samples=sweep['certify_samples'],
            threshold_samples=sweep['threshold_samples'],
        ),
        output_dir=data.get('output_dir'),
        rng_seed=int(data['rng_seed']),
    )


def config_to_dict(cfg: RunConfig) -> Dict[str, Any]:
    """Flat dotted-key view of a RunConfig, None values omitted"""
    values = {
        'command': cfg.command,
        'model.gamma': cfg.model.gamma,
        'model.sigma': cfg.model.sigma,
        'model.dim': cfg.model.dim,
        'model.mass': cfg.model.mass_target,
        'model.mass_factor': cfg.mass_factor,
        'grid.extent': cfg.grid.extent,
        'grid.points': cfg.grid.points,
        'solver.max_iterations': cfg.solver.max_iterations,
        'solver.residual_tolerance': cfg.solver.residual_tolerance,
        'solver.petviashvili_exponent': cfg.solver.petviashvili_exponent,
        'solver.alpha_min': cfg.solver.alpha_bracket[0],
        'solver.alpha_max': cfg.solver.alpha_bracket[1],
        'solver.scan_points': cfg.solver.scan_points,
        'solver.seed_profile': cfg.solver.seed_profile,
        'solver.seed_checkpoint': cfg.solver.seed_checkpoint,
    }
    for name, value in vars(cfg.dynamics).items():
        values[f"dynamics.{name}"] = value
    for name, value in vars(cfg.sweep).items():
        values[f"sweep.{name}"] = value
    values['output_dir'] = cfg.output_dir
    values['rng_seed'] = cfg.rng_seed
    return {key: value for key, value in values.items() if value is not None}


def serialize_config(cfg: RunConfig) -> str:
    """Document that parse_config turns back into an equal RunConfig"""
    return format_document(config_to_dict(cfg))
