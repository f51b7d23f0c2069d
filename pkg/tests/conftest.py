import math
from pathlib import Path

import pytest

from core.config import parse_config
from core.physics import CONSTANTS, PumpKind, ResonatorMode, RingResonator, Role
from core.wavefunction import PumpEnvelope

ROOT_DIR = Path(__file__).resolve().parents[1]
REFERENCE_CONFIG = ROOT_DIR / "configs" / "reference.toml"
BROAD_CONFIG = ROOT_DIR / "configs" / "broad_pump.toml"


def make_mode(role: Role, wavelength_nm: float = 1550.0, q_loaded: float = 4e5, eta: float = 0.5,
              n_char: float = 2.0) -> ResonatorMode:
    omega = 2 * math.pi * CONSTANTS.c / (wavelength_nm * 1e-9)
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


def make_ring(q_generated: float = 4e5, q_pump: float = 6.4e4, **ring_kwargs) -> RingResonator:
    return RingResonator(
        length=ring_kwargs.pop("length", 2 * math.pi * 30e-6),
        modes={
            Role.G: make_mode(Role.G, q_loaded=q_generated),
            Role.S: make_mode(Role.S, q_loaded=q_generated),
            Role.P: make_mode(Role.P, wavelength_nm=1550.0 / 3, q_loaded=q_pump),
        },
        **ring_kwargs,
    )


@pytest.fixture
def reference_config():
    return parse_config(REFERENCE_CONFIG)


@pytest.fixture
def broad_config():
    return parse_config(BROAD_CONFIG)


@pytest.fixture
def reference_text() -> str:
    return REFERENCE_CONFIG.read_text(encoding="utf-8")


@pytest.fixture
def write_config(tmp_path):
    def _write(text: str, name: str = "scenario.toml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def ring() -> RingResonator:
    return make_ring()


@pytest.fixture
def pulse(ring) -> PumpEnvelope:
    return PumpEnvelope(kind=PumpKind.GAUSSIAN, k_center=ring.mode(Role.P).k_res, fwhm_intensity_time=10e-12)
