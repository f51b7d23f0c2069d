import math
from dataclasses import replace

import numpy as np
import pytest

from core.errors import ConfigSchemaError, PhysicsError
from core.physics import (
    CONSTANTS,
    Direction,
    RingResonator,
    Role,
    Scheme,
    coupling_constant,
    escape_efficiency,
    field_enhancement,
    half_linewidth,
    linewidth_wavenumber,
    mode_frequency_at,
    nonlinear_coupling_rate,
    phase_mismatch,
    sinc_sq,
)
from core.rates import ProcessConfig
from tests.conftest import make_mode, make_ring


def test_constants_are_codata():
    assert CONSTANTS.hbar == pytest.approx(1.054571817e-34, rel=1e-12)
    assert CONSTANTS.c == 299792458.0
    assert CONSTANTS.eps0 > 0


def test_half_linewidth_at_1550nm():
    mode = make_mode(Role.G, q_loaded=4e5)
    assert mode.omega == pytest.approx(1.2153e15, rel=1e-4)
    assert half_linewidth(mode) == pytest.approx(1.519e9, rel=1e-3)


def test_doubling_q_halves_linewidth():
    mode = make_mode(Role.G, q_loaded=4e5)
    doubled = replace(mode, q_loaded=8e5, q_coupling=1.6e6)
    assert half_linewidth(doubled) == half_linewidth(mode) / 2


def test_linewidth_shrinks_monotonically_with_q():
    widths = [half_linewidth(make_mode(Role.G, q_loaded=q)) for q in (1e4, 1e5, 1e6, 1e7)]
    assert all(a > b for a, b in zip(widths, widths[1:]))


@pytest.mark.parametrize("q_loaded, q_coupling, expected", [
    (4e5, 8e5, 0.5),
    (6.4e4, 1.28e5, 0.5),
    (3e5, 3e5, 1.0),
])
def test_escape_efficiency(q_loaded, q_coupling, expected):
    mode = replace(make_mode(Role.G), q_loaded=q_loaded, q_coupling=q_coupling)
    assert escape_efficiency(mode) == expected


def test_overcoupled_beyond_unity_is_rejected():
    with pytest.raises(PhysicsError):
        replace(make_mode(Role.G), q_loaded=4e5, q_coupling=3e5)


def test_identical_waveguide_requires_matching_wavenumbers():
    mode = make_mode(Role.G)
    with pytest.raises(PhysicsError):
        replace(mode, kappa_ring=mode.k_res * 1.01)
    assert replace(mode, kappa_ring=mode.k_res * 1.01, identical_waveguide=False).kappa_ring != mode.k_res


def test_mode_frequency_is_linear_in_detuning():
    mode = make_mode(Role.S)
    assert mode_frequency_at(mode, mode.k_res) == mode.omega
    dk = 10 * linewidth_wavenumber(mode)
    assert mode_frequency_at(mode, mode.k_res + dk) - mode.omega == pytest.approx(mode.v_group * dk, rel=1e-6)


def test_coupling_constant_magnitude():
    mode = make_mode(Role.G)
    gamma = coupling_constant(mode)
    expected = 2 * mode.v_group * mode.omega / (2 * mode.q_coupling)
    assert gamma.magnitude_sq == pytest.approx(expected, rel=1e-15)
    assert gamma.phase == 0.0


def test_field_enhancement_peaks_on_resonance():
    ring = make_ring()
    mode = ring.mode(Role.G)
    gamma = coupling_constant(mode)
    k = mode.k_res + np.linspace(-5, 5, 101) * linewidth_wavenumber(mode)
    f = field_enhancement(mode, gamma, k, Direction.INCOMING, ring.length)

    assert np.argmax(np.abs(f)) == 50
    peak = gamma.magnitude_sq / (ring.length * half_linewidth(mode) ** 2)
    assert abs(f[50]) ** 2 == pytest.approx(peak, rel=1e-12)
    # half power one linewidth away
    assert abs(f[60]) ** 2 == pytest.approx(peak / 2, rel=1e-8)


def test_outgoing_enhancement_is_conjugate_of_incoming():
    ring = make_ring()
    mode = ring.mode(Role.P)
    gamma = coupling_constant(mode)
    k = mode.k_res + np.linspace(-3, 3, 31) * linewidth_wavenumber(mode)
    incoming = field_enhancement(mode, gamma, k, Direction.INCOMING, ring.length)
    outgoing = field_enhancement(mode, gamma, k, Direction.OUTGOING, ring.length)
    np.testing.assert_array_equal(outgoing, np.conj(incoming))


def test_field_enhancement_rejects_bad_length():
    mode = make_mode(Role.G)
    with pytest.raises(PhysicsError):
        field_enhancement(mode, coupling_constant(mode), mode.k_res, Direction.INCOMING, 0.0)


def test_sinc_is_unnormalized():
    assert sinc_sq(0.0) == 1.0
    assert sinc_sq(math.pi) == pytest.approx(0.0, abs=1e-30)
    assert sinc_sq(1.0) == pytest.approx(math.sin(1.0) ** 2, rel=1e-14)


def test_phase_mismatch_from_ring_wavenumbers_and_override():
    ring = make_ring()
    process = ProcessConfig(scheme=Scheme.NON_DEGENERATE, ring=ring, lambda_nl=1.0)
    g, s, p = ring.modes_for(Scheme.NON_DEGENERATE)
    assert phase_mismatch(process).delta_kappa == p.kappa_ring - s.kappa_ring - 2 * g.kappa_ring

    forced = replace(process, delta_kappa=2 * math.pi / ring.length)
    assert phase_mismatch(forced).sinc_sq == pytest.approx(0.0, abs=1e-30)


def test_missing_mode_names_the_role():
    ring = RingResonator(length=1e-4, modes={Role.G: make_mode(Role.G)})
    with pytest.raises(ConfigSchemaError) as excinfo:
        ring.mode(Role.S)
    assert excinfo.value.field_path == "modes.S"


def test_nonlinear_coupling_rate_needs_material_constants():
    ring = make_ring()
    with pytest.raises(ConfigSchemaError):
        nonlinear_coupling_rate(ring, ring.mode(Role.P), ring.mode(Role.G), ring.mode(Role.S))


def test_nonlinear_coupling_rate_scaling():
    base = make_ring(a_eff=1e-12, chi3=2e-20)
    doubled_chi = make_ring(a_eff=1e-12, chi3=4e-20)
    doubled_area = make_ring(a_eff=2e-12, chi3=2e-20)
    args = lambda r: (r, r.mode(Role.P), r.mode(Role.G), r.mode(Role.S))  # noqa: E731

    value = nonlinear_coupling_rate(*args(base))
    assert value > 0
    assert nonlinear_coupling_rate(*args(doubled_chi)) == pytest.approx(2 * value, rel=1e-14)
    assert nonlinear_coupling_rate(*args(doubled_area)) == pytest.approx(value / 2, rel=1e-14)


@pytest.mark.parametrize("field, value", [("length", 0.0), ("a_eff", -1.0)])
def test_ring_rejects_non_positive_geometry(field, value):
    kwargs = {"length": 1e-4, "a_eff": 1e-12, field: value}
    with pytest.raises(PhysicsError):
        RingResonator(modes={}, **kwargs)
