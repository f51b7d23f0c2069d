"""Exception hierarchy shared by the simulation engines and the CLI.

Every error carries a human-readable ``detail`` and the process ``exit_code``
the CLI returns for it.
"""

from __future__ import annotations


class SimulationError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class CheckFailure(SimulationError):
    exit_code = 1


class ConfigSchemaError(SimulationError):
    """Malformed config: unknown/missing keys or wrong value types."""

    exit_code = 2

    def __init__(self, field_path: str, detail: str):
        super().__init__(f"{field_path}: {detail}")
        self.field_path = field_path


class PhysicsError(SimulationError):
    """Well-formed input that describes an unphysical system."""

    exit_code = 3


class ModeMisuseError(SimulationError):
    exit_code = 4


class DecompositionError(SimulationError):
    exit_code = 1
