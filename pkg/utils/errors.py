"""
Error hierarchy shared by the numerical packages and the command line
"""
from typing import List, Optional


class LabError(Exception):
    """Base class for every error raised by the lab"""

    category = 'LabError'


class ConfigError(LabError, ValueError):
    """Invalid parameters, grids or configuration documents"""

    category = 'ConfigError'


class SolverError(LabError, RuntimeError):
    """A solver or functional could not produce a valid result"""

    category = 'SolverError'


class ResolutionError(LabError, RuntimeError):
    """The discretization can no longer represent the requested object"""

    category = 'ResolutionError'


class LabIoError(LabError, OSError):
    """Checkpoint and artifact input/output failures"""

    category = 'IoError'


# Grid and field construction

class OddPointCount(ConfigError):
    pass


class InvalidGrid(ConfigError):
    pass


class NonFiniteField(ConfigError):
    pass


# Functionals

class ZeroField(SolverError):
    pass


class ZeroMass(SolverError):
    pass


class Degenerate(SolverError):
    pass


class NoMaximizer(SolverError):
    pass


# Solvers

class ZeroSeed(SolverError):
    pass


class NonConvergence(SolverError):
    pass


class DivergedToZero(SolverError):
    pass


class SubcriticalMass(SolverError):
    pass


class BracketNotFound(SolverError):
    pass


class SeedOutsideDomain(SolverError):
    pass


class CrossValidationError(SolverError):
    pass


class InvariantViolation(SolverError):
    """A stored or computed ground state fails one of its invariants"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__('; '.join(self.violations))


# Resolution

class SupportOverflow(ResolutionError):
    pass


class ResolutionLimit(ResolutionError):
    pass


# Checkpoints

class BadMagic(LabIoError):
    pass


class TruncatedFile(LabIoError):
    pass


class DimensionMismatch(LabIoError):
    pass


# Configuration documents

class ConfigParseError(ConfigError):
    """Malformed structured-text document"""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        context = []
        if line is not None:
            context.append(f"line {line}")
        if key is not None:
            context.append(f"key '{key}'")
        prefix = f"{', '.join(context)}: " if context else ''
        super().__init__(prefix + message)


class ConfigValidationError(ConfigError):
    """Every violated constraint of a configuration document"""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__('Invalid configuration: ' + '; '.join(self.errors))


EXIT_CODES = {
    'ConfigError': 2,
    'SolverError': 3,
    'ResolutionError': 4,
    'IoError': 5,
}


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the command-line exit status of its category"""
    if isinstance(error, LabError):
        return EXIT_CODES.get(error.category, 1)
    if isinstance(error, OSError):
        return EXIT_CODES['IoError']
    return 1
