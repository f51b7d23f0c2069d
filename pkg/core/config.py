"""Scenario config ingestion, validation and canonical echo.

The config is a sectioned TOML file. Ingestion converts everything to SI
(wavelengths become angular frequencies, η becomes Q_C) and applies the
documented defaults. ``SimulationConfig.to_toml`` writes the resolved
values back so a dump reproduces the same results when parsed again.
"""

from __future__ import annotations

import logging
import math
import os
import tomllib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional

from core.errors import ConfigSchemaError, PhysicsError
from core.physics import (
    CONSTANTS,
    SCHEME_ROLES,
    PumpKind,
    ResonatorMode,
    RingResonator,
    Role,
    Scheme,
    escape_efficiency,
    half_linewidth,
    linewidth_wavenumber,
)
from core.rates import ProcessConfig, vacuum_power
from core.wavefunction import (
    DEFAULT_BIPHOTON_POINTS,
    DEFAULT_COVERAGE_THRESHOLD,
    DEFAULT_HALF_WIDTH,
    DEFAULT_TRIPHOTON_POINTS,
    KGrid,
    PumpEnvelope,
)

logger = logging.getLogger(__name__)

# ============================================================
# SCHEMA
# ============================================================
SECTION_KEYS = {
    "ring": {"length", "a_eff", "chi3"},
    "process": {
        "scheme", "lambda_nl", "p_pump", "p_seed", "pump_kind",
        "delta_kappa", "upsilon_offset", "energy_tolerance",
    },
    "pump": {"kind", "fwhm", "carrier_detuning"},
    "grid": {"half_width", "points", "triphoton_points", "coverage_threshold", "memory_budget_mb"},
    "seed": {"offset"},
}
MODE_KEYS = {
    "wavelength_nm", "omega", "q_loaded", "q_coupling", "eta", "group_index",
    "v_group", "n_char", "k_res", "kappa_ring", "identical_waveguide",
}

SWEEP_PARAMETERS = ("pump_fwhm", "q_pump", "q_generated", "upsilon", "k_seed")

DEFAULT_ENERGY_TOLERANCE = 1e-6
DEFAULT_MEMORY_BUDGET_MB = 256.0


def check_grid_points(n: int, field_path: str, allow_single: bool = False) -> int:
    """Grid sizes are odd so the resonance sits on a grid point."""
    if allow_single and n == 1:
        return n
    if n < 3 or n % 2 == 0:
        lowest = "1 or an odd integer >= 3" if allow_single else "an odd integer >= 3"
        raise ConfigSchemaError(field_path, f"expected {lowest}, got {n}")
    return n


def resolve_n_jobs() -> int:
    """Worker count from TOPDC_THREADS; 0 means one per core."""
    raw = os.getenv("TOPDC_THREADS", "0")
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigSchemaError("TOPDC_THREADS", f"expected an integer, got {raw!r}") from None
    if threads < 0:
        raise ConfigSchemaError("TOPDC_THREADS", "must be >= 0")
    return -1 if threads == 0 else threads


# ============================================================
# RESOLVED CONFIG
# ============================================================
@dataclass(frozen=True)
class PumpSettings:
    kind: PumpKind = PumpKind.GAUSSIAN
    fwhm: Optional[float] = None
    carrier_detuning: float = 0.0  # units of Γ̄_P


@dataclass(frozen=True)
class GridSettings:
    half_width: float = DEFAULT_HALF_WIDTH  # linewidths
    points: int = DEFAULT_BIPHOTON_POINTS
    triphoton_points: int = DEFAULT_TRIPHOTON_POINTS
    coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD
    memory_budget_mb: float = DEFAULT_MEMORY_BUDGET_MB


@dataclass(frozen=True)
class SimulationConfig:
    ring: RingResonator
    scheme: Scheme
    lambda_nl: Optional[float] = None
    p_pump: float = 0.0
    p_seed: Optional[float] = None
    pump_kind: PumpKind = PumpKind.CW
    delta_kappa: Optional[float] = None
    upsilon_offset: float = 0.0
    energy_tolerance: float = DEFAULT_ENERGY_TOLERANCE
    pump: PumpSettings = PumpSettings()
    grid: GridSettings = GridSettings()
    seed_offset: float = 0.0  # units of Γ̄_S / v_S

    def __post_init__(self) -> None:
        _check_energy(self.ring, self.energy_tolerance)
        # validates the scheme's mode set and resolves Λ
        self.process()

    # --- derived objects ---
    def process(self, scheme: Optional[Scheme] = None) -> ProcessConfig:
        return ProcessConfig(
            scheme=scheme or self.scheme,
            ring=self.ring,
            lambda_nl=self.lambda_nl,
            p_pump=self.p_pump,
            p_seed=self.p_seed,
            pump_kind=self.pump_kind,
            delta_kappa=self.delta_kappa,
        )

    def has_modes(self, scheme: Scheme) -> bool:
        return all(role in self.ring.modes for role in SCHEME_ROLES[scheme])

    def envelope(self) -> PumpEnvelope:
        if self.pump.kind is PumpKind.GAUSSIAN and self.pump.fwhm is None:
            raise ConfigSchemaError("pump.fwhm", "required key is missing for a gaussian pump")
        p_mode = self.ring.mode(Role.P)
        k_center = p_mode.k_res + self.pump.carrier_detuning * linewidth_wavenumber(p_mode)
        return PumpEnvelope(kind=self.pump.kind, k_center=k_center, fwhm_intensity_time=self.pump.fwhm)

    def pair_grid(self, points: Optional[int] = None) -> KGrid:
        n = self.grid.points if points is None else check_grid_points(points, "--pair-points")
        return KGrid.around(self.ring.mode(Role.G), self.grid.half_width, n)

    def seed_grid(self, points: Optional[int] = None, half_width: Optional[float] = None) -> KGrid:
        if points is None:
            n = self.grid.triphoton_points
        else:
            n = check_grid_points(points, "--seed-points", allow_single=True)
        if n == 1:
            return KGrid.point(self.ring.mode(Role.S).k_res)
        width = self.grid.half_width if half_width is None else half_width
        return KGrid.around(self.ring.mode(Role.S), width, n)

    def seed_detuning(self, offset: Optional[float] = None) -> float:
        value = self.seed_offset if offset is None else offset
        return value * linewidth_wavenumber(self.ring.mode(Role.S))

    @property
    def memory_budget_bytes(self) -> int:
        return int(self.grid.memory_budget_mb * 1024 * 1024)

    # --- sweeps ---
    def with_parameter(self, parameter: str, value: float) -> "SimulationConfig":
        if parameter == "pump_fwhm":
            return replace(self, pump=replace(self.pump, fwhm=float(value)))
        if parameter == "q_pump":
            return replace(self, ring=_with_q(self.ring, Role.P, value))
        if parameter == "q_generated":
            return replace(self, ring=_with_q(self.ring, Role.G, value))
        if parameter == "upsilon":
            return replace(self, upsilon_offset=float(value))
        if parameter == "k_seed":
            return replace(self, seed_offset=float(value))
        raise ConfigSchemaError("sweep.parameter", f"unknown parameter {parameter!r}; choose from {SWEEP_PARAMETERS}")

    # --- echo ---
    def to_toml(self) -> str:
        lines = ["[ring]", f"length = {_fmt(self.ring.length)}"]
        if self.ring.a_eff is not None:
            lines.append(f"a_eff = {_fmt(self.ring.a_eff)}")
        if self.ring.chi3 is not None:
            lines.append(f"chi3 = {_fmt(self.ring.chi3)}")

        for role in Role:
            mode = self.ring.modes.get(role)
            if mode is None:
                continue
            lines += [
                "",
                f"[modes.{role.value}]",
                f"# derived: eta = {_fmt(escape_efficiency(mode))}, "
                f"half_linewidth = {_fmt(half_linewidth(mode))} rad/s, "
                f"linewidth_wavenumber = {_fmt(linewidth_wavenumber(mode))} rad/m",
                f"omega = {_fmt(mode.omega)}",
                f"q_loaded = {_fmt(mode.q_loaded)}",
                f"q_coupling = {_fmt(mode.q_coupling)}",
                f"v_group = {_fmt(mode.v_group)}",
                f"n_char = {_fmt(mode.n_char)}",
                f"k_res = {_fmt(mode.k_res)}",
                f"identical_waveguide = {'true' if mode.identical_waveguide else 'false'}",
            ]
            if not mode.identical_waveguide:
                lines.append(f"kappa_ring = {_fmt(mode.kappa_ring)}")

        process = self.process()
        lines += ["", "[process]", f'scheme = "{self.scheme.value}"']
        if self.lambda_nl is not None:
            lines.append(f"lambda_nl = {_fmt(self.lambda_nl)}")
        else:
            lines.append(f"# derived: lambda_nl = {_fmt(process.lambda_nl)} (computed from chi3 and a_eff)")
        if self.has_modes(Scheme.NON_DEGENERATE):
            p_vac = vacuum_power(self.ring.mode(Role.G), self.ring.mode(Role.S))
            lines.append(f"# derived: p_vac = {_fmt(p_vac)} W")
        lines.append(f"p_pump = {_fmt(self.p_pump)}")
        if self.p_seed is not None:
            lines.append(f"p_seed = {_fmt(self.p_seed)}")
        lines.append(f'pump_kind = "{self.pump_kind.value}"')
        if self.delta_kappa is not None:
            lines.append(f"delta_kappa = {_fmt(self.delta_kappa)}")
        lines += [
            f"upsilon_offset = {_fmt(self.upsilon_offset)}",
            f"energy_tolerance = {_fmt(self.energy_tolerance)}",
        ]
        # an unset gaussian pump stays unset so the echo parses again
        if not (self.pump.kind is PumpKind.GAUSSIAN and self.pump.fwhm is None):
            lines += ["", "[pump]", f'kind = "{self.pump.kind.value}"']
            if self.pump.fwhm is not None:
                lines.append(f"fwhm = {_fmt(self.pump.fwhm)}")
            lines.append(f"carrier_detuning = {_fmt(self.pump.carrier_detuning)}")
        lines += [
            "",
            "[grid]",
            f"half_width = {_fmt(self.grid.half_width)}",
            f"points = {self.grid.points}",
            f"triphoton_points = {self.grid.triphoton_points}",
            f"coverage_threshold = {_fmt(self.grid.coverage_threshold)}",
            f"memory_budget_mb = {_fmt(self.grid.memory_budget_mb)}",
            "",
            "[seed]",
            f"offset = {_fmt(self.seed_offset)}",
        ]
        return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    # repr is the shortest string that round-trips exactly
    return repr(float(value))


def _with_q(ring: RingResonator, role: Role, q_loaded: float) -> RingResonator:
    mode = ring.mode(role)
    eta = escape_efficiency(mode)
    updated = replace(mode, q_loaded=float(q_loaded), q_coupling=float(q_loaded) / eta)
    modes = dict(ring.modes)
    modes[role] = updated
    return replace(ring, modes=modes)


def _check_energy(ring: RingResonator, tolerance: float) -> None:
    modes = ring.modes
    if all(r in modes for r in (Role.G, Role.S, Role.P)):
        g, s, p = modes[Role.G], modes[Role.S], modes[Role.P]
        mismatch = abs(p.omega - s.omega - 2 * g.omega)
        if mismatch > tolerance * p.omega:
            raise PhysicsError(
                f"energy conservation violated: |omega_P - omega_S - 2 omega_G| = {mismatch:.6e} rad/s "
                f"exceeds {tolerance:g} x omega_P"
            )
    if all(r in modes for r in (Role.F, Role.T)):
        f, t = modes[Role.F], modes[Role.T]
        mismatch = abs(t.omega - 3 * f.omega)
        if mismatch > tolerance * t.omega:
            raise PhysicsError(
                f"energy conservation violated: |omega_T - 3 omega_F| = {mismatch:.6e} rad/s "
                f"exceeds {tolerance:g} x omega_T"
            )


# ============================================================
# PARSING
# ============================================================
def _number(section: dict, key: str, path: str, default: Any = None, required: bool = False):
    if key not in section:
        if required:
            raise ConfigSchemaError(f"{path}.{key}", "required key is missing")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigSchemaError(f"{path}.{key}", f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigSchemaError(f"{path}.{key}", f"expected a finite number, got {value!r}")
    return float(value)


def _integer(section: dict, key: str, path: str, default: int) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigSchemaError(f"{path}.{key}", f"expected an integer, got {value!r}")
    return value


def _choice(section: dict, key: str, path: str, enum_type, default=None):
    if key not in section:
        if default is None:
            raise ConfigSchemaError(f"{path}.{key}", "required key is missing")
        return default
    try:
        return enum_type(section[key])
    except ValueError:
        allowed = ", ".join(e.value for e in enum_type)
        raise ConfigSchemaError(f"{path}.{key}", f"expected one of {allowed}, got {section[key]!r}") from None


def _exactly_one(section: dict, keys: tuple[str, str], path: str) -> str:
    present = [k for k in keys if k in section]
    if len(present) != 1:
        raise ConfigSchemaError(path, f"exactly one of {keys[0]!r} or {keys[1]!r} is required")
    return present[0]


def _check_keys(section: Any, allowed: set[str], path: str) -> dict:
    if not isinstance(section, dict):
        raise ConfigSchemaError(path, "expected a table")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigSchemaError(f"{path}.{unknown[0]}", "unknown key")
    return section


def _parse_mode(role: Role, block: Any) -> ResonatorMode:
    path = f"modes.{role.value}"
    block = _check_keys(block, MODE_KEYS, path)

    if _exactly_one(block, ("wavelength_nm", "omega"), path) == "omega":
        omega = _number(block, "omega", path)
    else:
        wavelength = _number(block, "wavelength_nm", path) * 1e-9
        if not wavelength > 0:
            raise PhysicsError(f"{path}: wavelength must be positive")
        omega = 2 * math.pi * CONSTANTS.c / wavelength

    q_loaded = _number(block, "q_loaded", path, required=True)
    if _exactly_one(block, ("q_coupling", "eta"), path) == "eta":
        eta = _number(block, "eta", path)
        if not 0 < eta <= 1:
            raise PhysicsError(f"{path}: escape efficiency eta must lie in (0, 1], got {eta}")
        q_coupling = q_loaded / eta
    else:
        q_coupling = _number(block, "q_coupling", path)

    n_char = _number(block, "n_char", path, default=1.0)
    if "v_group" in block and "group_index" in block:
        raise ConfigSchemaError(path, "give at most one of 'v_group' or 'group_index'")
    if "v_group" in block:
        v_group = _number(block, "v_group", path)
    elif "group_index" in block:
        v_group = CONSTANTS.c / _number(block, "group_index", path)
    else:
        v_group = CONSTANTS.c / n_char

    k_res = _number(block, "k_res", path, default=n_char * omega / CONSTANTS.c)
    identical = block.get("identical_waveguide", True)
    if not isinstance(identical, bool):
        raise ConfigSchemaError(f"{path}.identical_waveguide", "expected a boolean")
    if identical:
        if "kappa_ring" in block:
            raise ConfigSchemaError(f"{path}.kappa_ring", "not allowed with identical_waveguide = true")
        kappa_ring = k_res
    else:
        kappa_ring = _number(block, "kappa_ring", path, default=k_res)

    return ResonatorMode(
        label=role,
        omega=omega,
        q_loaded=q_loaded,
        q_coupling=q_coupling,
        v_group=v_group,
        k_res=k_res,
        kappa_ring=kappa_ring,
        n_char=n_char,
        identical_waveguide=identical,
    )


def config_from_dict(data: dict) -> SimulationConfig:
    _check_keys(data, set(SECTION_KEYS) | {"modes"}, "config")
    ring_block = _check_keys(data.get("ring", {}), SECTION_KEYS["ring"], "ring")
    modes_block = _check_keys(data.get("modes", {}), {r.value for r in Role}, "modes")
    process_block = _check_keys(data.get("process", {}), SECTION_KEYS["process"], "process")
    pump_block = _check_keys(data.get("pump", {}), SECTION_KEYS["pump"], "pump")
    grid_block = _check_keys(data.get("grid", {}), SECTION_KEYS["grid"], "grid")
    seed_block = _check_keys(data.get("seed", {}), SECTION_KEYS["seed"], "seed")

    modes = {Role(name): _parse_mode(Role(name), block) for name, block in modes_block.items()}

    lambda_nl = _number(process_block, "lambda_nl", "process")
    has_material = "chi3" in ring_block or "a_eff" in ring_block
    if lambda_nl is not None and has_material:
        raise ConfigSchemaError("process.lambda_nl", "give either lambda_nl or ring.chi3/ring.a_eff, not both")
    if lambda_nl is None and not ("chi3" in ring_block and "a_eff" in ring_block):
        raise ConfigSchemaError("process.lambda_nl", "missing; give lambda_nl or both ring.chi3 and ring.a_eff")

    ring = RingResonator(
        length=_number(ring_block, "length", "ring", required=True),
        modes=modes,
        a_eff=_number(ring_block, "a_eff", "ring"),
        chi3=_number(ring_block, "chi3", "ring"),
    )

    scheme = _choice(process_block, "scheme", "process", Scheme)
    pump_kind = _choice(pump_block, "kind", "pump", PumpKind, default=PumpKind.GAUSSIAN)
    # a degenerate scenario may omit [pump]; it never builds a wavefunction
    needs_fwhm = pump_kind is PumpKind.GAUSSIAN and ("pump" in data or scheme is Scheme.NON_DEGENERATE)
    pump = PumpSettings(
        kind=pump_kind,
        fwhm=_number(pump_block, "fwhm", "pump", required=needs_fwhm),
        carrier_detuning=_number(pump_block, "carrier_detuning", "pump", default=0.0),
    )
    grid = GridSettings(
        half_width=_number(grid_block, "half_width", "grid", default=DEFAULT_HALF_WIDTH),
        points=_integer(grid_block, "points", "grid", DEFAULT_BIPHOTON_POINTS),
        triphoton_points=_integer(grid_block, "triphoton_points", "grid", DEFAULT_TRIPHOTON_POINTS),
        coverage_threshold=_number(grid_block, "coverage_threshold", "grid", default=DEFAULT_COVERAGE_THRESHOLD),
        memory_budget_mb=_number(grid_block, "memory_budget_mb", "grid", default=DEFAULT_MEMORY_BUDGET_MB),
    )
    for key in ("points", "triphoton_points"):
        check_grid_points(getattr(grid, key), f"grid.{key}")

    return SimulationConfig(
        ring=ring,
        scheme=scheme,
        lambda_nl=lambda_nl,
        p_pump=_number(process_block, "p_pump", "process", default=0.0),
        p_seed=_number(process_block, "p_seed", "process"),
        pump_kind=_choice(process_block, "pump_kind", "process", PumpKind, default=PumpKind.CW),
        delta_kappa=_number(process_block, "delta_kappa", "process"),
        upsilon_offset=_number(process_block, "upsilon_offset", "process", default=0.0),
        energy_tolerance=_number(process_block, "energy_tolerance", "process", default=DEFAULT_ENERGY_TOLERANCE),
        pump=pump,
        grid=grid,
        seed_offset=_number(seed_block, "offset", "seed", default=0.0),
    )


def parse_config(path: str | Path) -> SimulationConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigSchemaError(str(path), "config file not found")
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigSchemaError(str(path), f"malformed TOML: {exc}") from None

    config = config_from_dict(data)
    modes = ",".join(r.value for r in config.ring.modes)
    logger.info(f"✅ Config loaded: {path.name} | scheme={config.scheme.value} | modes={modes}")
    return config
