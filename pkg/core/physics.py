"""Resonator-mode physics: linewidths, dispersion, field enhancement, coupling rate.

Everything here is a pure function of immutable inputs. Units are strict SI,
angular frequencies in rad/s and wavenumbers in rad/m.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import TYPE_CHECKING, Mapping, Optional

import numpy as np
from scipy import constants as sc

from core.errors import ConfigSchemaError, PhysicsError

if TYPE_CHECKING:
    from core.rates import ProcessConfig

logger = logging.getLogger(__name__)


# ============================================================
# CONSTANTS & ENUMS
# ============================================================
@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = sc.hbar
    c: float = sc.c
    eps0: float = sc.epsilon_0


# CODATA values, fixed for the whole package
CONSTANTS = PhysicalConstants()


class Role(str, Enum):
    F = "F"  # degenerate fundamental (generated)
    T = "T"  # degenerate third-harmonic pump
    G = "G"  # non-degenerate generated pair mode
    S = "S"  # non-degenerate seed mode
    P = "P"  # non-degenerate pump


class Scheme(str, Enum):
    DEGENERATE = "degenerate"
    NON_DEGENERATE = "non_degenerate"


class Direction(str, Enum):
    INCOMING = "incoming"
    OUTGOING = "outgoing"


class PumpKind(str, Enum):
    CW = "cw"
    GAUSSIAN = "gaussian"


SCHEME_ROLES = {
    Scheme.DEGENERATE: (Role.F, Role.T),
    Scheme.NON_DEGENERATE: (Role.G, Role.S, Role.P),
}


# ============================================================
# DOMAIN TYPES
# ============================================================
@dataclass(frozen=True)
class ResonatorMode:
    """One ring resonance.

    ``k_res`` is the resonant wavenumber in the channel, ``kappa_ring`` the
    wavenumber in the ring. With ``identical_waveguide`` set the two must agree.
    """

    label: Role
    omega: float
    q_loaded: float
    q_coupling: float
    v_group: float
    k_res: float
    kappa_ring: float
    n_char: float = 1.0
    identical_waveguide: bool = True

    def __post_init__(self) -> None:
        where = f"mode {self.label.value}"
        if not self.omega > 0:
            raise PhysicsError(f"{where}: omega must be positive, got {self.omega}")
        if not self.q_loaded > 0:
            raise PhysicsError(f"{where}: q_loaded must be positive, got {self.q_loaded}")
        if not self.q_coupling >= self.q_loaded:
            raise PhysicsError(
                f"{where}: q_coupling={self.q_coupling} < q_loaded={self.q_loaded} "
                "would give an escape efficiency above 1"
            )
        if not self.v_group > 0:
            raise PhysicsError(f"{where}: v_group must be positive, got {self.v_group}")
        if not self.n_char >= 1:
            raise PhysicsError(f"{where}: n_char must be >= 1, got {self.n_char}")
        if not (math.isfinite(self.k_res) and math.isfinite(self.kappa_ring)):
            raise PhysicsError(f"{where}: wavenumbers must be finite")
        if self.identical_waveguide and self.kappa_ring != self.k_res:
            raise PhysicsError(f"{where}: identical waveguide requires kappa_ring == k_res")


@dataclass(frozen=True)
class RingResonator:
    length: float
    modes: Mapping[Role, ResonatorMode] = field(default_factory=dict)
    a_eff: Optional[float] = None
    chi3: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise PhysicsError(f"ring length must be positive, got {self.length}")
        if self.a_eff is not None and not self.a_eff > 0:
            raise PhysicsError(f"a_eff must be positive, got {self.a_eff}")
        if self.chi3 is not None and not math.isfinite(self.chi3):
            raise PhysicsError(f"chi3 must be finite, got {self.chi3}")
        for role, mode in self.modes.items():
            if mode.label != role:
                raise PhysicsError(f"mode keyed {role.value} is labelled {mode.label.value}")
        object.__setattr__(self, "modes", MappingProxyType(dict(self.modes)))

    def mode(self, role: Role) -> ResonatorMode:
        try:
            return self.modes[role]
        except KeyError:
            raise ConfigSchemaError(f"modes.{role.value}", "mode is required but not configured") from None

    def modes_for(self, scheme: Scheme) -> tuple[ResonatorMode, ...]:
        return tuple(self.mode(role) for role in SCHEME_ROLES[scheme])


@dataclass(frozen=True)
class CouplingConstantGamma:
    magnitude_sq: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not self.magnitude_sq >= 0:
            raise PhysicsError(f"|gamma|^2 must be non-negative, got {self.magnitude_sq}")
        object.__setattr__(self, "phase", self.phase % (2 * math.pi))

    @property
    def value(self) -> complex:
        return math.sqrt(self.magnitude_sq) * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class PhaseMismatch:
    delta_kappa: float
    sinc_sq: float


# ============================================================
# SINGLE-MODE OPERATIONS
# ============================================================
def half_linewidth(mode: ResonatorMode) -> float:
    """Γ̄ = ω / (2Q), the loaded half linewidth in rad/s."""
    return mode.omega / (2 * mode.q_loaded)


def coupling_half_linewidth(mode: ResonatorMode) -> float:
    return mode.omega / (2 * mode.q_coupling)


def escape_efficiency(mode: ResonatorMode) -> float:
    if mode.q_coupling < mode.q_loaded:
        raise PhysicsError(f"mode {mode.label.value}: escape efficiency would exceed 1")
    return mode.q_loaded / mode.q_coupling


def mode_frequency_at(mode: ResonatorMode, k):
    """Linear dispersion around the resonance: ω_J + v_J (k − K_J)."""
    return mode.omega + mode.v_group * (k - mode.k_res)


def linewidth_wavenumber(mode: ResonatorMode) -> float:
    """Half linewidth expressed as a wavenumber detuning, Γ̄/v."""
    return half_linewidth(mode) / mode.v_group


def coupling_constant(mode: ResonatorMode) -> CouplingConstantGamma:
    # |γ|² = 2 v Γ̄_C, zero phase
    return CouplingConstantGamma(magnitude_sq=2 * mode.v_group * coupling_half_linewidth(mode))


def enhancement_at_frequency(
    mode: ResonatorMode,
    gamma: CouplingConstantGamma,
    nu,
    direction: Direction,
    ring_length: float,
):
    """Field enhancement at the angular-frequency detuning ν = v_J (k − K_J)."""
    if not ring_length > 0:
        raise PhysicsError(f"ring length must be positive, got {ring_length}")
    sign = 1.0 if direction is Direction.INCOMING else -1.0
    numerator = np.conj(gamma.value) / math.sqrt(ring_length)
    return numerator / (-np.asarray(nu) + sign * 1j * half_linewidth(mode))


def enhancement_at_detuning(
    mode: ResonatorMode,
    gamma: CouplingConstantGamma,
    detuning,
    direction: Direction,
    ring_length: float,
):
    """Field enhancement evaluated at q = k − K_J.

    Working in detunings keeps full precision on grids a few linewidths wide
    around wavenumbers of order 1e7 rad/m.
    """
    return enhancement_at_frequency(
        mode, gamma, mode.v_group * np.asarray(detuning), direction, ring_length
    )


def field_enhancement(
    mode: ResonatorMode,
    gamma: CouplingConstantGamma,
    k,
    direction: Direction,
    ring_length: float,
):
    return enhancement_at_detuning(mode, gamma, np.asarray(k) - mode.k_res, direction, ring_length)


# ============================================================
# PROCESS-LEVEL OPERATIONS
# ============================================================
def sinc_sq(x: float) -> float:
    # unnormalized sinc, sin(x)/x
    return float(np.sinc(x / np.pi) ** 2)


def phase_mismatch(process: "ProcessConfig") -> PhaseMismatch:
    ring = process.ring
    if process.scheme is Scheme.DEGENERATE:
        f_mode, t_mode = ring.modes_for(Scheme.DEGENERATE)
        computed = t_mode.kappa_ring - 3 * f_mode.kappa_ring
    else:
        g_mode, s_mode, p_mode = ring.modes_for(Scheme.NON_DEGENERATE)
        computed = p_mode.kappa_ring - s_mode.kappa_ring - 2 * g_mode.kappa_ring

    delta_kappa = computed if process.delta_kappa is None else process.delta_kappa
    return PhaseMismatch(delta_kappa=delta_kappa, sinc_sq=sinc_sq(delta_kappa * ring.length / 2))


def nonlinear_coupling_rate(
    ring: RingResonator,
    high_mode: ResonatorMode,
    low_mode: ResonatorMode,
    seed_mode: Optional[ResonatorMode] = None,
) -> float:
    """Λ from the ring's χ̄₃ and A_eff.

    The generated modes are (low, low, low) for the degenerate process and
    (low, low, seed) for the non-degenerate one, with the same structural form.
    """
    if ring.a_eff is None or ring.chi3 is None:
        raise ConfigSchemaError("ring", "a_eff and chi3 are required to compute lambda_nl")
    third = seed_mode or low_mode
    lows = (low_mode, low_mode, third)

    omega_product = high_mode.omega * math.prod(m.omega for m in lows)
    velocity_ratio = (high_mode.v_group * math.prod(m.v_group for m in lows)) / (
        high_mode.n_char * math.prod(m.n_char for m in lows)
    )
    prefactor = CONSTANTS.hbar * math.sqrt(omega_product) / (4 * CONSTANTS.eps0 * CONSTANTS.c**2)
    return prefactor * math.sqrt(velocity_ratio) * ring.chi3 / (ring.length * ring.a_eff)
