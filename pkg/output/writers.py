"""CSV emission for matrices, axes and summary tables.

Matrix files carry a ``# key: value`` metadata header followed by the
row-major matrix, k₁ along rows ascending. Floats are written with
``%.16e`` and ``\\n`` line endings so repeated runs are byte-identical.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
import pandas as pd

from core.jsa_analysis import JsiMatrix, SchmidtResult, SetScanResult
from core.physics import RingResonator, Role, linewidth_wavenumber
from core.wavefunction import TriphotonAmplitude

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.16e"


def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def _write_frame(path: Path, frame: pd.DataFrame, metadata: Optional[Mapping] = None, header: bool = True) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        for key, value in (metadata or {}).items():
            handle.write(f"# {key}: {_format_value(value)}\n")
        frame.to_csv(handle, index=False, header=header, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {path}")
    return path


def write_matrix(path: Path, matrix: np.ndarray, metadata: Mapping) -> Path:
    return _write_frame(Path(path), pd.DataFrame(np.asarray(matrix)), metadata, header=False)


def write_table(path: Path, table: pd.DataFrame) -> Path:
    return _write_frame(Path(path), table)


def format_table(table: pd.DataFrame) -> str:
    """Aligned text rendering for stdout."""
    return table.to_string(index=False, float_format=lambda v: f"{v:.6e}")


# ============================================================
# JSI
# ============================================================
def jsi_metadata(matrix: JsiMatrix, schmidt: SchmidtResult, k_seed: float) -> dict:
    grid = matrix.grid
    return {
        "k_min": grid.k_min,
        "k_max": grid.k_max,
        "points": grid.n_points,
        "dk": grid.spacing,
        "k_seed": k_seed,
        "schmidt_number": schmidt.schmidt_number,
        "converged": schmidt.converged,
        "refinement_delta": schmidt.refinement_delta,
        "norm_residual": matrix.norm_residual,
    }


def write_jsi(prefix: Path, matrix: JsiMatrix, schmidt: SchmidtResult, k_seed: float) -> list[Path]:
    prefix = Path(prefix)
    meta = jsi_metadata(matrix, schmidt, k_seed)

    axes = pd.DataFrame({
        "index": np.arange(matrix.grid.n_points),
        "k": matrix.grid.axis,
        "detuning": matrix.grid.offsets,
    })
    if matrix.frequency_axis is not None:
        axes["omega"] = matrix.frequency_axis

    coefficients = pd.DataFrame({
        "index": np.arange(len(schmidt.coefficients)),
        "coefficient": schmidt.coefficients,
    })
    schmidt_meta = {
        "schmidt_number": schmidt.schmidt_number,
        "converged": schmidt.converged,
        "refinement_delta": schmidt.refinement_delta,
    }
    return [
        write_matrix(prefix.with_name(f"{prefix.name}_jsi.csv"), matrix.values, meta),
        write_table(prefix.with_name(f"{prefix.name}_axes.csv"), axes),
        _write_frame(prefix.with_name(f"{prefix.name}_schmidt.csv"), coefficients, schmidt_meta),
    ]


# ============================================================
# TRIPHOTON
# ============================================================
def write_triphoton(prefix: Path, tri: TriphotonAmplitude, ring: RingResonator) -> list[Path]:
    prefix = Path(prefix)
    pair_grid, _, seed_grid = tri.grids
    s_mode = ring.mode(Role.S)
    pair_meta = {
        "k_min": pair_grid.k_min,
        "k_max": pair_grid.k_max,
        "points": pair_grid.n_points,
        "dk": pair_grid.spacing,
        "norm_residual": abs(float(np.sum(tri.pair_marginal())) * pair_grid.spacing**2 - 1.0),
    }
    seed = pd.DataFrame({
        "index": np.arange(seed_grid.n_points),
        "k3": seed_grid.axis,
        "detuning_linewidths": seed_grid.offsets / linewidth_wavenumber(s_mode),
        "marginal": tri.seed_marginal(),
    })
    return [
        write_matrix(prefix.with_name(f"{prefix.name}_pair_marginal.csv"), tri.pair_marginal(), pair_meta),
        write_table(prefix.with_name(f"{prefix.name}_k3_marginal.csv"), seed),
    ]


# ============================================================
# SET SCAN
# ============================================================
def residual_table(result: SetScanResult) -> pd.DataFrame:
    n = len(result.seed_wavenumbers)
    direct = result.direct_marginal if result.direct_marginal is not None else np.full(n, np.nan)
    return pd.DataFrame({
        "index": np.arange(n),
        "k_seed": result.seed_wavenumbers,
        "residual": [np.nan if r is None else r for r in result.proportionality_residuals],
        "status": ["skipped" if r is None else "ok" for r in result.proportionality_residuals],
        "schmidt_number": [s.schmidt_number for s in result.schmidt_results],
        "reconstructed_marginal": result.reconstructed_marginal,
        "direct_marginal": direct,
    })


def write_set_scan(prefix: Path, result: SetScanResult) -> list[Path]:
    prefix = Path(prefix)
    paths = [
        write_matrix(
            prefix.with_name(f"{prefix.name}_slice_{i}.csv"),
            matrix.values,
            jsi_metadata(matrix, schmidt, k_seed),
        )
        for i, (matrix, schmidt, k_seed) in enumerate(
            zip(result.slices, result.schmidt_results, result.seed_wavenumbers)
        )
    ]
    summary = {
        "marginal_l1_distance": "skipped" if result.marginal_distance is None else result.marginal_distance,
    }
    paths.append(_write_frame(prefix.with_name(f"{prefix.name}_residuals.csv"), residual_table(result), summary))
    return paths
