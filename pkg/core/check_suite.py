"""Self-check suites run by ``topdc-sim check``.

Four suites over randomized configurations drawn from a fixed, announced seed:

- identity: stimulated rate == spontaneous rate × P_S/P_vac, and the quoted
  coefficient reproduces the quoted pair count exactly
- scaling: linearity in the powers, Λ² dependence, Q/Γ̄ scaling and the
  degenerate ↔ non-degenerate reduction
- symmetry: k₁ ↔ k₂ symmetry, normalization and phase/scale invariance of
  the Schmidt spectrum
- oracle: SVD Schmidt numbers against explicit reduced-state purity and
  closed-form toy amplitudes
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np
import pandas as pd

from core.errors import CheckFailure
from core.jsa_analysis import reduced_state_schmidt_number, schmidt_coefficients
from core.physics import (
    CONSTANTS,
    Direction,
    PumpKind,
    ResonatorMode,
    RingResonator,
    Role,
    Scheme,
    coupling_constant,
    enhancement_at_detuning,
    half_linewidth,
)
from core.rates import (
    NON_DEGENERATE_PREFACTOR,
    STIMULATED_PREFACTOR,
    ProcessConfig,
    rate_spontaneous_degenerate,
    rate_spontaneous_nondegenerate,
    rate_stimulated,
    stimulated_pairs,
    vacuum_power,
)
from core.wavefunction import KGrid, PumpEnvelope, seeded_biphoton

logger = logging.getLogger(__name__)

CHECK_SEED = 20240917
IDENTITY_CASES = 1000
SCALING_CASES = 200
SYMMETRY_CASES = 12
ORACLE_CASES = 40

RATE_TOLERANCE = 1e-12
ORACLE_TOLERANCE = 1e-10

QUOTED_STIMULATED_COEFFICIENT = 1.5e8
QUOTED_PUMP_POWER = 0.1
QUOTED_SEED_POWER = 0.01
QUOTED_STIMULATED_PAIRS = 1.5e5


# ============================================================
# DOMAIN TYPES
# ============================================================
@dataclass(frozen=True)
class CheckCase:
    suite: str
    name: str
    passed: bool
    detail: str = ""
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CheckReport:
    seed: int
    cases: tuple[CheckCase, ...]

    @property
    def failures(self) -> tuple[CheckCase, ...]:
        return tuple(c for c in self.cases if not c.passed)

    @property
    def ok(self) -> bool:
        return not self.failures

    def counts(self) -> pd.DataFrame:
        frame = pd.DataFrame([{"suite": c.suite, "passed": c.passed} for c in self.cases])
        table = frame.groupby("suite", sort=False)["passed"].agg(total="count", passed="sum")
        table["failed"] = table["total"] - table["passed"]
        return table.reset_index()

    def raise_for_failure(self) -> None:
        if self.ok:
            return
        first = self.failures[0]
        config = "\n".join(f"  {key} = {value!r}" for key, value in first.params.items())
        raise CheckFailure(
            f"{len(self.failures)} check(s) failed; first: [{first.suite}] {first.name}: {first.detail}\n"
            f"failing config (seed {self.seed}):\n{config}"
        )


def _relative_error(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b != 0 else abs(a)


# ============================================================
# RANDOM CONFIGURATIONS
# ============================================================
def _log_uniform(rng: np.random.Generator, low: float, high: float) -> float:
    return float(math.exp(rng.uniform(math.log(low), math.log(high))))


def random_parameters(rng: np.random.Generator) -> dict:
    """Parameters of a valid non-degenerate process; η is drawn from (0.05, 1]."""
    return {
        "lambda_g_nm": float(rng.uniform(1200.0, 1700.0)),
        "lambda_s_nm": float(rng.uniform(1200.0, 1700.0)),
        "q_g": _log_uniform(rng, 1e4, 1e7),
        "q_s": _log_uniform(rng, 1e4, 1e7),
        "q_p": _log_uniform(rng, 1e3, 1e6),
        "eta_g": float(1.0 - rng.uniform(0.0, 0.95)),
        "eta_s": float(1.0 - rng.uniform(0.0, 0.95)),
        "eta_p": float(1.0 - rng.uniform(0.0, 0.95)),
        "n_char": float(rng.uniform(1.0, 3.5)),
        "ring_radius_um": float(rng.uniform(10.0, 200.0)),
        "lambda_nl": _log_uniform(rng, 0.1, 100.0),
        "p_pump": _log_uniform(rng, 1e-3, 1.0),
        "p_seed": _log_uniform(rng, 1e-5, 0.1),
        "delta_kappa": float(rng.uniform(-1e3, 1e3)),
    }


def _mode(role: Role, omega: float, q_loaded: float, eta: float, n_char: float) -> ResonatorMode:
    k_res = n_char * omega / CONSTANTS.c
    return ResonatorMode(
        label=role,
        omega=omega,
        q_loaded=q_loaded,
        q_coupling=q_loaded / eta,
        v_group=CONSTANTS.c / n_char,
        k_res=k_res,
        kappa_ring=k_res,
        n_char=n_char,
    )


def build_process(params: dict, pump_kind: PumpKind = PumpKind.CW) -> ProcessConfig:
    omega_g = 2 * math.pi * CONSTANTS.c / (params["lambda_g_nm"] * 1e-9)
    omega_s = 2 * math.pi * CONSTANTS.c / (params["lambda_s_nm"] * 1e-9)
    n = params["n_char"]
    ring = RingResonator(
        length=2 * math.pi * params["ring_radius_um"] * 1e-6,
        modes={
            Role.G: _mode(Role.G, omega_g, params["q_g"], params["eta_g"], n),
            Role.S: _mode(Role.S, omega_s, params["q_s"], params["eta_s"], n),
            Role.P: _mode(Role.P, 2 * omega_g + omega_s, params["q_p"], params["eta_p"], n),
        },
    )
    return ProcessConfig(
        scheme=Scheme.NON_DEGENERATE,
        ring=ring,
        lambda_nl=params["lambda_nl"],
        p_pump=params["p_pump"],
        p_seed=params["p_seed"],
        pump_kind=pump_kind,
        delta_kappa=params["delta_kappa"],
    )


def degenerate_counterpart(params: dict) -> ProcessConfig:
    """Degenerate process with ω_F = ω_G, ω_T = ω_P and the G-mode Q and η everywhere."""
    omega = 2 * math.pi * CONSTANTS.c / (params["lambda_g_nm"] * 1e-9)
    n = params["n_char"]
    ring = RingResonator(
        length=2 * math.pi * params["ring_radius_um"] * 1e-6,
        modes={
            Role.F: _mode(Role.F, omega, params["q_g"], params["eta_g"], n),
            Role.T: _mode(Role.T, 3 * omega, params["q_p"], params["eta_g"], n),
        },
    )
    return ProcessConfig(
        scheme=Scheme.DEGENERATE,
        ring=ring,
        lambda_nl=params["lambda_nl"],
        p_pump=params["p_pump"],
        delta_kappa=params["delta_kappa"],
    )


def symmetric_parameters(params: dict) -> dict:
    """ω_S = ω_G, Q_S = Q_G and equal η for the three-fold reduction."""
    return {
        **params,
        "lambda_s_nm": params["lambda_g_nm"],
        "q_s": params["q_g"],
        "eta_s": params["eta_g"],
        "eta_p": params["eta_g"],
    }


# ============================================================
# SUITES
# ============================================================
def identity_suite(rng: np.random.Generator, stimulated_prefactor: float) -> Iterator[CheckCase]:
    for i in range(IDENTITY_CASES):
        params = random_parameters(rng)
        process = build_process(params)
        g_mode, s_mode, _ = process.ring.modes_for(Scheme.NON_DEGENERATE)
        expected = rate_spontaneous_nondegenerate(process).value * process.p_seed / vacuum_power(g_mode, s_mode)
        stimulated = rate_stimulated(process, prefactor=stimulated_prefactor).value
        error = _relative_error(stimulated, expected)
        yield CheckCase(
            "identity", f"stimulation_gain[{i}]", error <= RATE_TOLERANCE,
            f"relative error {error:.3e}", params,
        )

    pairs = stimulated_pairs(QUOTED_STIMULATED_COEFFICIENT, QUOTED_PUMP_POWER, QUOTED_SEED_POWER)
    yield CheckCase(
        "identity", "quoted_pair_count", pairs == QUOTED_STIMULATED_PAIRS,
        f"{pairs!r} pairs/s", {
            "coefficient": QUOTED_STIMULATED_COEFFICIENT,
            "p_pump": QUOTED_PUMP_POWER,
            "p_seed": QUOTED_SEED_POWER,
        },
    )


def scaling_suite(rng: np.random.Generator, stimulated_prefactor: float) -> Iterator[CheckCase]:
    for i in range(SCALING_CASES):
        params = random_parameters(rng)
        process = build_process(params)
        base_spon = rate_spontaneous_nondegenerate(process).value
        base_stim = rate_stimulated(process, prefactor=stimulated_prefactor).value

        doubled_pump = replace(process, p_pump=2 * process.p_pump)
        error = _relative_error(rate_spontaneous_nondegenerate(doubled_pump).value, 2 * base_spon)
        yield CheckCase("scaling", f"linear_in_pump[{i}]", error <= RATE_TOLERANCE, f"relative error {error:.3e}", params)

        tripled_seed = replace(process, p_seed=3 * process.p_seed)
        error = _relative_error(rate_stimulated(tripled_seed, prefactor=stimulated_prefactor).value, 3 * base_stim)
        yield CheckCase("scaling", f"linear_in_seed[{i}]", error <= RATE_TOLERANCE, f"relative error {error:.3e}", params)

        scaled_lambda = replace(process, lambda_nl=2 * process.lambda_nl)
        error = _relative_error(rate_spontaneous_nondegenerate(scaled_lambda).value, 4 * base_spon)
        yield CheckCase("scaling", f"lambda_squared[{i}]", error <= RATE_TOLERANCE, f"relative error {error:.3e}", params)

        g_mode = process.ring.mode(Role.G)
        doubled_q = replace(g_mode, q_loaded=2 * g_mode.q_loaded, q_coupling=2 * g_mode.q_coupling)
        error = _relative_error(half_linewidth(doubled_q), half_linewidth(g_mode) / 2)
        yield CheckCase("scaling", f"linewidth_halves[{i}]", error <= RATE_TOLERANCE, f"relative error {error:.3e}", params)

        symmetric = symmetric_parameters(params)
        non_degenerate = rate_spontaneous_nondegenerate(build_process(symmetric)).value
        degenerate = rate_spontaneous_degenerate(degenerate_counterpart(symmetric)).value
        error = _relative_error(non_degenerate, 3 * degenerate)
        yield CheckCase("scaling", f"threefold_reduction[{i}]", error <= RATE_TOLERANCE, f"relative error {error:.3e}", symmetric)


def symmetry_suite(rng: np.random.Generator) -> Iterator[CheckCase]:
    for i in range(SYMMETRY_CASES):
        params = random_parameters(rng)
        params["q_p"] = params["q_g"] / float(rng.uniform(2.0, 20.0))
        ring = build_process(params).ring
        p_mode = ring.mode(Role.P)
        env = PumpEnvelope(
            kind=PumpKind.GAUSSIAN,
            k_center=p_mode.k_res,
            fwhm_intensity_time=float(rng.uniform(0.3, 3.0)) / half_linewidth(p_mode),
        )
        grid = KGrid.around(ring.mode(Role.G), 8.0, 21)
        seed = float(rng.uniform(-2.0, 2.0)) * half_linewidth(ring.mode(Role.S)) / ring.mode(Role.S).v_group
        amp = seeded_biphoton(ring, env, seed, grid, coverage_threshold=0.0)

        symmetric = bool(np.array_equal(amp.values, amp.values.T))
        yield CheckCase("symmetry", f"pair_exchange[{i}]", symmetric, "phi(k1,k2) == phi(k2,k1)", params)

        norm = float(np.sum(np.abs(amp.values) ** 2)) * grid.spacing**2
        yield CheckCase("symmetry", f"normalized[{i}]", abs(norm - 1) <= ORACLE_TOLERANCE, f"norm {norm!r}", params)

        theta = float(rng.uniform(0, 2 * math.pi))
        p_base, k_base, _ = schmidt_coefficients(amp.values, grid.spacing)
        p_scaled, k_scaled, _ = schmidt_coefficients(2 * np.exp(1j * theta) * amp.values, grid.spacing)
        spread = float(np.max(np.abs(p_base - p_scaled)))
        yield CheckCase(
            "symmetry", f"phase_scale_invariance[{i}]",
            spread <= ORACLE_TOLERANCE and _relative_error(k_scaled, k_base) <= ORACLE_TOLERANCE,
            f"max |dp| {spread:.3e}", {**params, "theta": theta},
        )

        g_mode = ring.mode(Role.G)
        gamma = coupling_constant(g_mode)
        incoming = enhancement_at_detuning(g_mode, gamma, grid.offsets, Direction.INCOMING, ring.length)
        outgoing = enhancement_at_detuning(g_mode, gamma, grid.offsets, Direction.OUTGOING, ring.length)
        yield CheckCase(
            "symmetry", f"enhancement_conjugate[{i}]",
            bool(np.array_equal(outgoing, np.conj(incoming))), "F_- == conj(F_+)", params,
        )


def oracle_suite(rng: np.random.Generator) -> Iterator[CheckCase]:
    for i in range(ORACLE_CASES):
        n = int(rng.integers(2, 17))
        matrix = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        spacing = float(rng.uniform(0.1, 2.0))
        _, k_svd, _ = schmidt_coefficients(matrix, spacing)
        k_oracle = reduced_state_schmidt_number(matrix, spacing)
        error = _relative_error(k_svd, k_oracle)
        yield CheckCase(
            "oracle", f"reduced_state[{i}]", error <= ORACLE_TOLERANCE,
            f"K_svd {k_svd!r} vs K_oracle {k_oracle!r}", {"n": n, "spacing": spacing},
        )

    n = 8
    antidiagonal = np.fliplr(np.eye(n)).astype(complex)
    _, k_anti, _ = schmidt_coefficients(antidiagonal, 1.0)
    yield CheckCase("oracle", "antidiagonal", abs(k_anti - n) <= 1e-8, f"K {k_anti!r}", {"n": n})

    profile = np.exp(-np.linspace(-3, 3, 16) ** 2) * np.exp(1j * np.linspace(0, 1, 16))
    _, k_sep, _ = schmidt_coefficients(np.outer(profile, profile), 0.4)
    yield CheckCase("oracle", "separable", k_sep - 1 <= ORACLE_TOLERANCE, f"K {k_sep!r}", {"n": 16})


# ============================================================
# RUNNER
# ============================================================
def run_checks(seed: int = CHECK_SEED, inject_fault: bool = False) -> CheckReport:
    """All suites in a fixed order; ``inject_fault`` swaps 2⁶ for 2⁵ in the stimulated prefactor."""
    prefactor = NON_DEGENERATE_PREFACTOR if inject_fault else STIMULATED_PREFACTOR
    if inject_fault:
        logger.warning(f"⚠️ Fault injected: stimulated prefactor {prefactor} instead of {STIMULATED_PREFACTOR}")
    logger.info(f"Running self-checks with seed {seed}")

    rng = np.random.default_rng(seed)
    suites: list[Callable[[], Iterator[CheckCase]]] = [
        lambda: identity_suite(rng, prefactor),
        lambda: scaling_suite(rng, prefactor),
        lambda: symmetry_suite(rng),
        lambda: oracle_suite(rng),
    ]
    cases: list[CheckCase] = []
    for suite in suites:
        cases.extend(suite())

    report = CheckReport(seed=seed, cases=tuple(cases))
    status = "✅" if report.ok else "❌"
    logger.info(f"{status} Self-checks: {len(report.cases)} cases, {len(report.failures)} failed")
    return report


