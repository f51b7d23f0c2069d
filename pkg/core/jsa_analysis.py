"""Joint spectral intensity, Schmidt decomposition, SET slice scans and sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import linalg

from core.config import SWEEP_PARAMETERS, SimulationConfig
from core.errors import ConfigSchemaError, DecompositionError, SimulationError
from core.physics import (
    Direction,
    PumpKind,
    RingResonator,
    Role,
    Scheme,
    coupling_constant,
    enhancement_at_detuning,
    linewidth_wavenumber,
)
from core.rates import rate_spontaneous, rate_stimulated
from core.wavefunction import (
    DEFAULT_COVERAGE_THRESHOLD,
    DEFAULT_HALF_WIDTH,
    BiphotonAmplitude,
    KGrid,
    PumpEnvelope,
    grid_memory_bytes,
    pair_frequency_axis,
    seeded_biphoton,
    triphoton_amplitude,
)

logger = logging.getLogger(__name__)

CONVERGENCE_TOLERANCE = 1e-3
RANK_ONE_TOLERANCE = 1e-10


# ============================================================
# DOMAIN TYPES
# ============================================================
@dataclass(frozen=True)
class JsiMatrix:
    grid: KGrid
    values: np.ndarray
    frequency_axis: Optional[np.ndarray] = None

    @property
    def norm_residual(self) -> float:
        return abs(float(np.sum(self.values)) * self.grid.spacing**2 - 1.0)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.values, self.values.T))


@dataclass(frozen=True)
class SchmidtResult:
    coefficients: np.ndarray
    schmidt_number: float
    converged: bool
    refinement_delta: float
    singular_values: np.ndarray

    @property
    def rank_one(self) -> bool:
        s = self.singular_values
        return len(s) < 2 or s[1] <= RANK_ONE_TOLERANCE * s[0]


@dataclass(frozen=True)
class SetScanResult:
    seed_wavenumbers: tuple[float, ...]
    slices: tuple[JsiMatrix, ...]
    proportionality_residuals: tuple[Optional[float], ...]
    schmidt_results: tuple[SchmidtResult, ...]
    reconstructed_marginal: np.ndarray
    direct_marginal: Optional[np.ndarray]
    marginal_distance: Optional[float]
    warnings: tuple[str, ...] = ()

    @property
    def residuals_skipped(self) -> bool:
        return self.direct_marginal is None


# ============================================================
# JSI & SCHMIDT
# ============================================================
def jsi(amp: BiphotonAmplitude, ring: Optional[RingResonator] = None) -> JsiMatrix:
    """|φ(k₁, k₂)|², annotated with ω_G + v_G q when the ring is given."""
    axis = pair_frequency_axis(ring, amp.grid) if ring is not None else None
    return JsiMatrix(grid=amp.grid, values=np.abs(amp.values) ** 2, frequency_axis=axis)


def schmidt_coefficients(values: np.ndarray, spacing: float) -> tuple[np.ndarray, float, np.ndarray]:
    """Schmidt weights p_i, K = 1/Σp_i² and singular values of the matrix φΔk."""
    matrix = np.asarray(values) * spacing
    if not np.all(np.isfinite(matrix)):
        raise DecompositionError("amplitude matrix has non-finite entries")
    try:
        singular = linalg.svd(matrix, compute_uv=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise DecompositionError(f"SVD failed: {exc}") from exc

    weights = singular**2
    total = float(np.sum(weights))
    if not total > 0:
        raise DecompositionError("amplitude matrix is identically zero")
    coefficients = weights / total
    return coefficients, float(1.0 / np.sum(coefficients**2)), singular


def schmidt(amp: BiphotonAmplitude, tolerance: float = CONVERGENCE_TOLERANCE) -> SchmidtResult:
    coefficients, k_coarse, singular = schmidt_coefficients(amp.values, amp.grid.spacing)

    if amp.rebuild is None:
        logger.warning("⚠️ No rebuild available for the amplitude; convergence not certified")
        return SchmidtResult(coefficients, k_coarse, False, math.nan, singular)

    fine = amp.rebuild(amp.grid.refined())
    _, k_fine, _ = schmidt_coefficients(fine.values, fine.grid.spacing)
    delta = abs(k_fine - k_coarse)
    converged = delta <= tolerance
    logger.debug(f"Schmidt K={k_coarse:.12f} (fine {k_fine:.12f}, |dK|={delta:.3e})")
    if not converged:
        logger.warning(f"⚠️ Schmidt number not converged: |dK|={delta:.3e} > {tolerance:.1e} on grid refinement")
    return SchmidtResult(coefficients, k_coarse, converged, delta, singular)


def reduced_state_schmidt_number(values: np.ndarray, spacing: float) -> float:
    """K = 1/tr(ρ²) from the one-photon correlation matrix, summed explicitly.

    Independent of the SVD route; meant for small grids.
    """
    matrix = np.asarray(values, dtype=complex) * spacing
    n = matrix.shape[0]
    rho = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for k in range(n):
            total = 0j
            for j in range(matrix.shape[1]):
                total += matrix[i, j] * np.conj(matrix[k, j])
            rho[i, k] = total
    trace = sum(rho[i, i].real for i in range(n))
    purity = sum(abs(rho[i, k]) ** 2 for i in range(n) for k in range(n)) / trace**2
    return 1.0 / purity


# ============================================================
# SINGLE RUNS
# ============================================================
def run_jsi(config: SimulationConfig, points: Optional[int] = None) -> tuple[BiphotonAmplitude, JsiMatrix, SchmidtResult]:
    """The seeded biphoton of a config, its JSI and Schmidt decomposition."""
    amp = seeded_biphoton(
        config.ring,
        config.envelope(),
        config.seed_detuning(),
        config.pair_grid(points),
        upsilon_offset=config.upsilon_offset,
        coverage_threshold=config.grid.coverage_threshold,
    )
    return amp, jsi(amp, config.ring), schmidt(amp)


def run_rates(config: SimulationConfig) -> dict[str, float]:
    if config.pump_kind is not PumpKind.CW:
        return {"rate_spontaneous": math.nan, "rate_stimulated": math.nan}
    process = config.process()
    row = {"rate_spontaneous": rate_spontaneous(process).value, "rate_stimulated": math.nan}
    if process.p_seed is not None and process.scheme is Scheme.NON_DEGENERATE:
        row["rate_stimulated"] = rate_stimulated(process).value
    return row


# ============================================================
# SET SCAN
# ============================================================
def _aligned_slice(plane: np.ndarray, spacing: float, center: int) -> np.ndarray:
    norm = math.sqrt(float(np.sum(np.abs(plane) ** 2)) * spacing**2)
    pivot = plane[center, center]
    phase = pivot / abs(pivot) if abs(pivot) > 0 else 1.0
    return plane * (np.conj(phase) / norm)


def _relative_deviation(direct: np.ndarray, seeded: np.ndarray) -> float:
    mask = np.abs(seeded) > 0
    return float(np.max(np.abs(direct[mask] - seeded[mask]) / np.abs(seeded[mask])))


def set_scan(
    ring: RingResonator,
    env: PumpEnvelope,
    seed_grid: KGrid,
    pair_grid: KGrid,
    *,
    upsilon_offset: float = 0.0,
    coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD,
    band_half_width: Optional[float] = None,
    memory_budget_bytes: int = 256 * 1024 * 1024,
    n_jobs: int = 1,
) -> SetScanResult:
    """Seeded biphoton JSIs across a seed scan, checked against the direct triphoton.

    ``band_half_width`` (rad/m) bounds the seed detunings that carry appreciable
    amplitude; it defaults to the standard grid half width around the S mode.
    """
    s_mode = ring.mode(Role.S)
    band = band_half_width if band_half_width is not None else DEFAULT_HALF_WIDTH * linewidth_wavenumber(s_mode)
    detunings = seed_grid.offsets
    notes: list[str] = []

    for q in detunings:
        if abs(q) > band:
            note = (
                f"seed detuning {q / linewidth_wavenumber(s_mode):+.3f} linewidths lies outside the "
                f"{band / linewidth_wavenumber(s_mode):.3f}-linewidth band; slice amplitude is negligible"
            )
            logger.warning(note)
            notes.append(note)

    def one_slice(q: float):
        amp = seeded_biphoton(
            ring, env, float(q), pair_grid,
            upsilon_offset=upsilon_offset, coverage_threshold=coverage_threshold,
        )
        return amp, schmidt(amp)

    results = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(one_slice)(q) for q in detunings)
    amplitudes = [amp for amp, _ in results]
    if amplitudes:
        notes.extend(amplitudes[0].warnings)

    # slice weight |F_{S+}(q)|² / |𝒩′(q)|²
    f_s = enhancement_at_detuning(s_mode, coupling_constant(s_mode), detunings, Direction.INCOMING, ring.length)
    inverse_norm_sq = np.array([1.0 / abs(amp.norm_constant) ** 2 for amp in amplitudes])
    reconstructed = np.abs(f_s) ** 2 * inverse_norm_sq
    reconstructed = reconstructed / (np.sum(reconstructed) * seed_grid.spacing)

    needed = grid_memory_bytes(pair_grid, seed_grid)
    direct_marginal: Optional[np.ndarray] = None
    distance: Optional[float] = None
    residuals: list[Optional[float]] = [None] * len(amplitudes)

    if needed > memory_budget_bytes:
        note = (
            f"triphoton grid needs {needed / 2**20:.1f} MB > budget {memory_budget_bytes / 2**20:.1f} MB; "
            "proportionality residuals skipped"
        )
        logger.warning(note)
        notes.append(note)
    else:
        tri = triphoton_amplitude(
            ring, env, pair_grid, seed_grid,
            upsilon_offset=upsilon_offset, coverage_threshold=coverage_threshold, n_jobs=n_jobs,
        )
        center = pair_grid.center_index
        for j, amp in enumerate(amplitudes):
            direct = _aligned_slice(tri.values[:, :, j], pair_grid.spacing, center)
            residuals[j] = _relative_deviation(direct, amp.values)

        direct_marginal = tri.seed_marginal()
        direct_marginal = direct_marginal / (np.sum(direct_marginal) * seed_grid.spacing)
        distance = float(np.sum(np.abs(direct_marginal - reconstructed)) * seed_grid.spacing)
        logger.info(
            f"✅ SET scan: {len(amplitudes)} slices | max residual {max(residuals):.3e} | marginal L1 {distance:.3e}"
        )

    return SetScanResult(
        seed_wavenumbers=tuple(float(s_mode.k_res + q) for q in detunings),
        slices=tuple(jsi(amp, ring) for amp in amplitudes),
        proportionality_residuals=tuple(residuals),
        schmidt_results=tuple(s for _, s in results),
        reconstructed_marginal=reconstructed,
        direct_marginal=direct_marginal,
        marginal_distance=distance,
        warnings=tuple(notes),
    )


# ============================================================
# SWEEPS
# ============================================================
def _sweep_row(config: SimulationConfig, parameter: str, value: float) -> dict:
    row = {
        "parameter": parameter,
        "value": float(value),
        "schmidt_number": math.nan,
        "converged": False,
        "refinement_delta": math.nan,
        "rate_spontaneous": math.nan,
        "rate_stimulated": math.nan,
        "error": "",
    }
    try:
        variant = config.with_parameter(parameter, value)
        _, _, result = run_jsi(variant)
        row.update(
            schmidt_number=result.schmidt_number,
            converged=result.converged,
            refinement_delta=result.refinement_delta,
        )
        row.update(run_rates(variant))
    except SimulationError as exc:
        logger.warning(f"⚠️ Sweep row {parameter}={value!r} failed: {exc.detail}")
        row["error"] = f"{type(exc).__name__}: {exc.detail}"
    return row


def sweep(parameter: str, values: Sequence[float], base: SimulationConfig, n_jobs: int = 1) -> pd.DataFrame:
    """One row per value, in input order; failing rows carry an ``error`` and the sweep continues."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigSchemaError("sweep.parameter", f"unknown parameter {parameter!r}; choose from {SWEEP_PARAMETERS}")
    for value in values:
        if not math.isfinite(value):
            raise ConfigSchemaError("sweep.values", f"values must be finite, got {value!r}")

    rows = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_sweep_row)(base, parameter, value) for value in values
    )
    table = pd.DataFrame(rows)
    failed = int((table["error"] != "").sum())
    logger.info(f"Sweep {parameter}: {len(table)} rows, {failed} failed")
    return table
