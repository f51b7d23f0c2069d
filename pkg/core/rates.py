"""Fermi-Golden-Rule generation rates for spontaneous and stimulated TOPDC.

All rates assume CW pump and seed fields and are counted at the output
channel; no detector or propagation losses are applied.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from core.errors import ModeMisuseError, PhysicsError
from core.physics import (
    CONSTANTS,
    PumpKind,
    ResonatorMode,
    RingResonator,
    Scheme,
    escape_efficiency,
    half_linewidth,
    nonlinear_coupling_rate,
    phase_mismatch,
)

logger = logging.getLogger(__name__)

DEGENERATE_PREFACTOR = 2**5
NON_DEGENERATE_PREFACTOR = 9 * 2**5
STIMULATED_PREFACTOR = 9 * 2**6


# ============================================================
# DOMAIN TYPES
# ============================================================
@dataclass(frozen=True)
class ProcessConfig:
    """A TOPDC process instance.

    When ``lambda_nl`` is omitted it is computed from the ring's χ̄₃ and A_eff,
    and ``lambda_source`` records which path was taken.
    """

    scheme: Scheme
    ring: RingResonator
    lambda_nl: Optional[float] = None
    p_pump: float = 0.0
    p_seed: Optional[float] = None
    pump_kind: PumpKind = PumpKind.CW
    delta_kappa: Optional[float] = None
    lambda_source: str = field(default="direct", compare=False)

    def __post_init__(self) -> None:
        modes = self.ring.modes_for(self.scheme)
        if not self.p_pump >= 0:
            raise PhysicsError(f"pump power must be non-negative, got {self.p_pump}")
        if self.p_seed is not None and not self.p_seed >= 0:
            raise PhysicsError(f"seed power must be non-negative, got {self.p_seed}")

        if self.lambda_nl is None:
            if self.scheme is Scheme.DEGENERATE:
                f_mode, t_mode = modes
                value = nonlinear_coupling_rate(self.ring, t_mode, f_mode)
            else:
                g_mode, s_mode, p_mode = modes
                value = nonlinear_coupling_rate(self.ring, p_mode, g_mode, s_mode)
            object.__setattr__(self, "lambda_nl", value)
            object.__setattr__(self, "lambda_source", "computed")

        if not math.isfinite(self.lambda_nl):
            raise PhysicsError(f"lambda_nl must be finite, got {self.lambda_nl}")

    def mode(self, role) -> ResonatorMode:
        return self.ring.mode(role)


@dataclass(frozen=True)
class RateResult:
    """A rate and the named factors whose product it is."""

    value: float
    scheme_tag: str
    factor_breakdown: Mapping[str, float]
    unit: str = "1/s"

    @property
    def coefficient(self) -> float:
        """The rate per unit power (or per unit power product)."""
        return math.prod(v for k, v in self.factor_breakdown.items() if k != "power_term")


def _rate_result(scheme_tag: str, factors: dict[str, float], powers: tuple[float, ...]) -> RateResult:
    # coefficient first, then one power at a time
    value = math.prod(v for k, v in factors.items() if k != "power_term")
    for power in powers:
        value *= power
    return RateResult(value=value, scheme_tag=scheme_tag, factor_breakdown=factors)


def _require(cfg: ProcessConfig, scheme: Scheme, operation: str) -> None:
    if cfg.scheme is not scheme:
        raise ModeMisuseError(f"{operation} needs a {scheme.value} process, got {cfg.scheme.value}")
    if cfg.pump_kind is not PumpKind.CW:
        raise ModeMisuseError(f"{operation}: rates are CW-only, got a {cfg.pump_kind.value} pump")


# ============================================================
# RATES
# ============================================================
def rate_spontaneous_degenerate(cfg: ProcessConfig) -> RateResult:
    _require(cfg, Scheme.DEGENERATE, "rate_spontaneous_degenerate")
    f_mode, t_mode = cfg.ring.modes_for(Scheme.DEGENERATE)
    hbar = CONSTANTS.hbar

    return _rate_result("spontaneous_degenerate", {
        "prefactor": float(DEGENERATE_PREFACTOR),
        "lambda_sq": abs(cfg.lambda_nl) ** 2,
        "efficiencies": escape_efficiency(f_mode) ** 3 * escape_efficiency(t_mode),
        "q_term": (f_mode.q_loaded * t_mode.q_loaded) / (hbar * t_mode.omega**2 * f_mode.omega),
        "power_term": cfg.p_pump,
        "sinc_sq": phase_mismatch(cfg).sinc_sq,
    }, (cfg.p_pump,))


def _non_degenerate_common(cfg: ProcessConfig):
    g_mode, s_mode, p_mode = cfg.ring.modes_for(Scheme.NON_DEGENERATE)
    efficiencies = escape_efficiency(g_mode) ** 2 * escape_efficiency(s_mode) * escape_efficiency(p_mode)
    q_product = g_mode.q_loaded * s_mode.q_loaded * p_mode.q_loaded
    return g_mode, s_mode, p_mode, efficiencies, q_product


def rate_spontaneous_nondegenerate(cfg: ProcessConfig) -> RateResult:
    _require(cfg, Scheme.NON_DEGENERATE, "rate_spontaneous_nondegenerate")
    g_mode, s_mode, p_mode, efficiencies, q_product = _non_degenerate_common(cfg)
    denominator = (
        CONSTANTS.hbar * p_mode.omega**2
        * (2 * s_mode.q_loaded * g_mode.omega + g_mode.q_loaded * s_mode.omega)
    )

    return _rate_result("spontaneous_non_degenerate", {
        "prefactor": float(NON_DEGENERATE_PREFACTOR),
        "lambda_sq": abs(cfg.lambda_nl) ** 2,
        "efficiencies": efficiencies,
        "q_term": q_product / denominator,
        "power_term": cfg.p_pump,
        "sinc_sq": phase_mismatch(cfg).sinc_sq,
    }, (cfg.p_pump,))


def rate_spontaneous(cfg: ProcessConfig) -> RateResult:
    if cfg.scheme is Scheme.DEGENERATE:
        return rate_spontaneous_degenerate(cfg)
    return rate_spontaneous_nondegenerate(cfg)


def vacuum_power(g_mode: ResonatorMode, s_mode: ResonatorMode) -> float:
    """Effective vacuum power driving the spontaneous process in the seed mode."""
    return CONSTANTS.hbar * s_mode.omega / (2 / half_linewidth(s_mode) + 1 / half_linewidth(g_mode))


def rate_stimulated(cfg: ProcessConfig, prefactor: float = STIMULATED_PREFACTOR) -> RateResult:
    _require(cfg, Scheme.NON_DEGENERATE, "rate_stimulated")
    if cfg.p_seed is None:
        raise ModeMisuseError("rate_stimulated needs a seed power (process.p_seed)")
    g_mode, s_mode, p_mode, efficiencies, q_product = _non_degenerate_common(cfg)
    denominator = CONSTANTS.hbar**2 * p_mode.omega**2 * g_mode.omega * s_mode.omega**2

    return _rate_result("stimulated", {
        "prefactor": float(prefactor),
        "lambda_sq": abs(cfg.lambda_nl) ** 2,
        "efficiencies": efficiencies,
        "q_term": q_product / denominator,
        "power_term": cfg.p_pump * cfg.p_seed,
        "sinc_sq": phase_mismatch(cfg).sinc_sq,
    }, (cfg.p_pump, cfg.p_seed))


def stimulation_enhancement(cfg: ProcessConfig) -> float:
    """P_S / P_vac, the gain of the stimulated over the spontaneous rate."""
    if cfg.scheme is not Scheme.NON_DEGENERATE:
        raise ModeMisuseError("stimulation_enhancement needs a non_degenerate process")
    g_mode, s_mode, _ = cfg.ring.modes_for(Scheme.NON_DEGENERATE)
    return (cfg.p_seed or 0.0) / vacuum_power(g_mode, s_mode)


def stimulated_pairs(coefficient: float, p_pump: float, p_seed: float) -> float:
    """Pairs per second from a stimulated coefficient in 1/(s·W²)."""
    return coefficient * p_pump * p_seed
