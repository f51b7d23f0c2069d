"""Pump envelopes and the normalized triphoton / seeded-biphoton wavefunctions.

Amplitudes are built on wavenumber grids centred on the resonances. All
arithmetic is done in detunings q = k − K_J and in the pump-frequency
detuning ν = v_G (q₁ + q₂) + v_S q₃ + Δ, where Δ collects the energy mismatch
2ω_G + ω_S − ω_P and any user offset of Υ.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np
from joblib import Parallel, delayed

from core.errors import ModeMisuseError, PhysicsError
from core.physics import (
    Direction,
    PumpKind,
    ResonatorMode,
    RingResonator,
    Role,
    Scheme,
    coupling_constant,
    enhancement_at_detuning,
    enhancement_at_frequency,
    linewidth_wavenumber,
    mode_frequency_at,
)

logger = logging.getLogger(__name__)

DEFAULT_HALF_WIDTH = 12.0
DEFAULT_BIPHOTON_POINTS = 401
DEFAULT_TRIPHOTON_POINTS = 101
DEFAULT_COVERAGE_THRESHOLD = 0.9


# ============================================================
# DOMAIN TYPES
# ============================================================
@dataclass(frozen=True)
class PumpEnvelope:
    """Classical pump spectral amplitude.

    ``fwhm_intensity_time`` is the FWHM of the temporal intensity profile.
    """

    kind: PumpKind
    k_center: float
    fwhm_intensity_time: Optional[float] = None
    amplitude_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind is PumpKind.GAUSSIAN:
            if self.fwhm_intensity_time is None or not self.fwhm_intensity_time > 0:
                raise PhysicsError(f"gaussian pump needs fwhm > 0, got {self.fwhm_intensity_time}")

    @property
    def sigma_t(self) -> float:
        if self.kind is not PumpKind.GAUSSIAN:
            raise ModeMisuseError("a CW pump has no temporal width")
        return self.fwhm_intensity_time / (2 * math.sqrt(math.log(2)))

    @property
    def sigma_omega(self) -> float:
        """Standard deviation of the spectral amplitude, 1/σ_t."""
        return 1.0 / self.sigma_t


@dataclass(frozen=True)
class KGrid:
    """Uniform wavenumber grid symmetric about ``center``.

    ``n_points`` is odd so the centre is a grid point. A single-point grid
    (``half_width`` 0) samples one wavenumber and carries unit weight.
    """

    center: float
    half_width: float
    n_points: int

    def __post_init__(self) -> None:
        if self.n_points % 2 != 1:
            raise PhysicsError(f"grid needs an odd number of points, got {self.n_points}")
        if self.n_points == 1:
            if self.half_width != 0:
                raise PhysicsError("a single-point grid has zero half width")
        elif self.n_points < 3 or not self.half_width > 0:
            raise PhysicsError(
                f"grid needs >= 3 points and a positive half width, got {self.n_points}, {self.half_width}"
            )

    @classmethod
    def around(cls, mode: ResonatorMode, half_width_linewidths: float, n_points: int) -> "KGrid":
        return cls(mode.k_res, half_width_linewidths * linewidth_wavenumber(mode), n_points)

    @classmethod
    def point(cls, center: float) -> "KGrid":
        return cls(center, 0.0, 1)

    @property
    def spacing(self) -> float:
        if self.n_points == 1:
            return 1.0
        return 2 * self.half_width / (self.n_points - 1)

    @property
    def k_min(self) -> float:
        return self.center - self.half_width

    @property
    def k_max(self) -> float:
        return self.center + self.half_width

    @property
    def center_index(self) -> int:
        return (self.n_points - 1) // 2

    @property
    def offsets(self) -> np.ndarray:
        """Detunings from the centre; exactly antisymmetric with an exact zero."""
        if self.n_points == 1:
            return np.zeros(1)
        return (np.arange(self.n_points) - self.center_index) * self.spacing

    @property
    def axis(self) -> np.ndarray:
        return self.center + self.offsets

    def refined(self) -> "KGrid":
        # nested: every coarse point is an even-index fine point
        return KGrid(self.center, self.half_width, 2 * self.n_points - 1)


@dataclass(frozen=True)
class PhaseMatchOffset:
    upsilon: float
    energy_mismatch: float
    extra_offset: float = 0.0

    @property
    def pump_offset(self) -> float:
        """Δ entering ν; zero for energy-matched resonances and no user offset."""
        return self.energy_mismatch + self.extra_offset


@dataclass(frozen=True)
class BiphotonAmplitude:
    grid: KGrid
    values: np.ndarray
    k_seed: float
    seed_detuning: float
    norm_constant: complex
    warnings: tuple[str, ...] = ()
    rebuild: Optional[Callable[[KGrid], "BiphotonAmplitude"]] = field(
        default=None, compare=False, repr=False
    )


@dataclass(frozen=True)
class TriphotonAmplitude:
    grids: tuple[KGrid, KGrid, KGrid]
    values: np.ndarray
    norm_constant: complex
    warnings: tuple[str, ...] = ()

    def pair_marginal(self) -> np.ndarray:
        """∫|φ|² dk₃ on the (k₁, k₂) grid."""
        return np.sum(np.abs(self.values) ** 2, axis=2) * self.grids[2].spacing

    def seed_marginal(self) -> np.ndarray:
        """∫∫|φ|² dk₁dk₂ along k₃."""
        g1, g2, _ = self.grids
        return np.sum(np.abs(self.values) ** 2, axis=(0, 1)) * g1.spacing * g2.spacing


# ============================================================
# PUMP
# ============================================================
def _pump_profile(env: PumpEnvelope, v_pump: float, k_res_pump: float, nu) -> np.ndarray:
    if env.kind is not PumpKind.GAUSSIAN:
        raise ModeMisuseError("a CW envelope is a point mass and cannot be sampled on a grid")
    nu_center = v_pump * (env.k_center - k_res_pump)
    return env.amplitude_scale * np.exp(-(env.sigma_t**2) * (np.asarray(nu) - nu_center) ** 2 / 2)


def pump_spectral_amplitude(env: PumpEnvelope, v_pump: float, k):
    """α_P(k) = exp(−σ_t² v_P² (k − K_P)² / 2) for a Gaussian pulse."""
    return _pump_profile(env, v_pump, env.k_center, v_pump * (np.asarray(k) - env.k_center))


def phase_match_offset(ring: RingResonator, upsilon_offset: float = 0.0) -> PhaseMatchOffset:
    g_mode, s_mode, p_mode = ring.modes_for(Scheme.NON_DEGENERATE)
    upsilon = p_mode.v_group * p_mode.k_res - s_mode.v_group * s_mode.k_res - 2 * g_mode.v_group * g_mode.k_res
    mismatch = 2 * g_mode.omega + s_mode.omega - p_mode.omega
    return PhaseMatchOffset(upsilon=upsilon, energy_mismatch=mismatch, extra_offset=upsilon_offset)


def pump_response(ring: RingResonator, env: PumpEnvelope) -> Callable[[np.ndarray], np.ndarray]:
    """F_{P−}·α_P as a function of the pump-frequency detuning ν."""
    p_mode = ring.mode(Role.P)
    gamma_p = coupling_constant(p_mode)

    def response(nu: np.ndarray) -> np.ndarray:
        enhancement = enhancement_at_frequency(p_mode, gamma_p, nu, Direction.OUTGOING, ring.length)
        return enhancement * _pump_profile(env, p_mode.v_group, p_mode.k_res, nu)

    return response


# ============================================================
# AMPLITUDE CONSTRUCTION
# ============================================================
def _generated_factor(ring: RingResonator, role: Role, offsets: np.ndarray) -> np.ndarray:
    mode = ring.mode(role)
    return np.conj(enhancement_at_detuning(mode, coupling_constant(mode), offsets, Direction.INCOMING, ring.length))


def _pair_kernel(
    ring: RingResonator,
    pair_offsets: np.ndarray,
    pump_shift: float,
    response: Callable[[np.ndarray], np.ndarray],
) -> np.ndarray:
    """F*_{G+}(q₁) F*_{G+}(q₂) · response(v_G (q₁+q₂) + shift), unnormalized."""
    g_mode = ring.mode(Role.G)
    f_g = _generated_factor(ring, Role.G, pair_offsets)
    nu = g_mode.v_group * (pair_offsets[:, None] + pair_offsets[None, :]) + pump_shift
    return (f_g[:, None] * f_g[None, :]) * response(nu)


def _normalize(raw: np.ndarray, cell: float, center: tuple[int, ...]) -> tuple[np.ndarray, complex]:
    if not np.all(np.isfinite(raw)):
        raise PhysicsError("amplitude has non-finite entries")
    norm_sq = float(np.sum(np.abs(raw) ** 2)) * cell
    if not norm_sq > 0:
        raise PhysicsError("amplitude vanishes on the grid")
    pivot = raw[center]
    phase = pivot / abs(pivot) if abs(pivot) > 0 else 1.0
    norm_constant = complex(np.conj(phase) / math.sqrt(norm_sq))
    values = raw * norm_constant
    # k₁ ↔ k₂ symmetry and a real centre hold exactly, not just to rounding
    values = 0.5 * (values + np.swapaxes(values, 0, 1))
    values[center] = values[center].real
    return values, norm_constant


def lorentzian_coverage(mode: ResonatorMode, grid: KGrid) -> float:
    """Fraction of a Lorentzian |F|² weight that falls inside the grid."""
    if grid.n_points == 1:
        return 0.0
    return (2 / math.pi) * math.atan(grid.half_width / linewidth_wavenumber(mode))


def _coverage_warnings(ring: RingResonator, axes: dict[Role, KGrid], threshold: float) -> tuple[str, ...]:
    notes = []
    for role, grid in axes.items():
        if grid.n_points == 1:
            continue
        coverage = lorentzian_coverage(ring.mode(role), grid)
        if coverage < threshold:
            note = f"grid for mode {role.value} holds {coverage:.4f} of the marginal weight (< {threshold})"
            logger.warning(note)
            notes.append(note)
    return tuple(notes)


def _require_pulsed(env: PumpEnvelope) -> None:
    if env.kind is not PumpKind.GAUSSIAN:
        raise ModeMisuseError("wavefunctions need a pulsed (gaussian) pump envelope")


def _require_centered(grid: KGrid, mode: ResonatorMode) -> None:
    if grid.center != mode.k_res:
        raise PhysicsError(f"grid must be centred on K_{mode.label.value}={mode.k_res}, got {grid.center}")


def seeded_biphoton(
    ring: RingResonator,
    env: PumpEnvelope,
    seed_detuning: float,
    grid: KGrid,
    *,
    upsilon_offset: float = 0.0,
    coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD,
) -> BiphotonAmplitude:
    """Seeded biphoton with the CW seed given as a detuning q_S = k_S − K_S."""
    _require_pulsed(env)
    _require_centered(grid, ring.mode(Role.G))
    s_mode = ring.mode(Role.S)
    offset = phase_match_offset(ring, upsilon_offset)

    raw = _pair_kernel(
        ring, grid.offsets, s_mode.v_group * seed_detuning + offset.pump_offset, pump_response(ring, env)
    )
    values, norm_constant = _normalize(raw, grid.spacing**2, (grid.center_index, grid.center_index))

    return BiphotonAmplitude(
        grid=grid,
        values=values,
        k_seed=s_mode.k_res + seed_detuning,
        seed_detuning=seed_detuning,
        norm_constant=norm_constant,
        warnings=_coverage_warnings(ring, {Role.G: grid}, coverage_threshold),
        rebuild=partial(
            seeded_biphoton, ring, env, seed_detuning,
            upsilon_offset=upsilon_offset, coverage_threshold=coverage_threshold,
        ),
    )


def biphoton_amplitude(
    ring: RingResonator,
    env: PumpEnvelope,
    k_seed: float,
    grid: KGrid,
    *,
    upsilon_offset: float = 0.0,
    coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD,
) -> BiphotonAmplitude:
    seed_detuning = k_seed - ring.mode(Role.S).k_res
    return seeded_biphoton(
        ring, env, seed_detuning, grid,
        upsilon_offset=upsilon_offset, coverage_threshold=coverage_threshold,
    )


def triphoton_amplitude(
    ring: RingResonator,
    env: PumpEnvelope,
    pair_grid: KGrid,
    seed_grid: KGrid,
    *,
    upsilon_offset: float = 0.0,
    coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD,
    n_jobs: int = 1,
) -> TriphotonAmplitude:
    """Triphoton amplitude φ(k₁, k₂, k₃), built one k₃ plane at a time."""
    _require_pulsed(env)
    _require_centered(pair_grid, ring.mode(Role.G))
    _require_centered(seed_grid, ring.mode(Role.S))
    s_mode = ring.mode(Role.S)
    offset = phase_match_offset(ring, upsilon_offset)
    response = pump_response(ring, env)
    seed_offsets = seed_grid.offsets
    f_s = _generated_factor(ring, Role.S, seed_offsets)

    def plane(j: int) -> np.ndarray:
        shift = s_mode.v_group * seed_offsets[j] + offset.pump_offset
        return _pair_kernel(ring, pair_grid.offsets, shift, response) * f_s[j]

    planes = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(plane)(j) for j in range(seed_grid.n_points)
    )
    raw = np.stack(planes, axis=2)
    cell = pair_grid.spacing**2 * seed_grid.spacing
    center = (pair_grid.center_index, pair_grid.center_index, seed_grid.center_index)
    values, norm_constant = _normalize(raw, cell, center)

    return TriphotonAmplitude(
        grids=(pair_grid, pair_grid, seed_grid),
        values=values,
        norm_constant=norm_constant,
        warnings=_coverage_warnings(ring, {Role.G: pair_grid, Role.S: seed_grid}, coverage_threshold),
    )


def pair_frequency_axis(ring: RingResonator, grid: KGrid) -> np.ndarray:
    """ω_G + v_G q along a pair-grid axis."""
    return mode_frequency_at(ring.mode(Role.G), grid.axis)


def grid_memory_bytes(pair_grid: KGrid, seed_grid: KGrid) -> int:
    return pair_grid.n_points**2 * seed_grid.n_points * np.dtype(np.complex128).itemsize
