import tomllib

import pytest

from core.config import check_grid_points, config_from_dict, parse_config, resolve_n_jobs
from core.errors import ConfigSchemaError, PhysicsError
from core.physics import Role, escape_efficiency, half_linewidth
from tests.conftest import REFERENCE_CONFIG


def _reference_dict(reference_text: str) -> dict:
    return tomllib.loads(reference_text)


def test_reference_config_resolves_critical_coupling(reference_config):
    for role in Role:
        assert escape_efficiency(reference_config.ring.mode(role)) == 0.5
    assert "# derived: eta = 0.5" in reference_config.to_toml()


def test_wavelength_and_defaults_are_resolved(reference_config):
    g_mode = reference_config.ring.mode(Role.G)
    assert g_mode.omega == pytest.approx(1.2153e15, rel=1e-4)
    assert g_mode.v_group == pytest.approx(299792458.0 / 2)
    assert g_mode.kappa_ring == g_mode.k_res
    assert reference_config.grid.points == 401
    assert reference_config.grid.coverage_threshold == 0.9


def test_print_config_round_trips(reference_config):
    echoed = config_from_dict(tomllib.loads(reference_config.to_toml()))
    assert echoed == reference_config
    assert echoed.to_toml() == reference_config.to_toml()


def test_missing_coupling_names_the_mode(reference_text):
    data = _reference_dict(reference_text)
    del data["modes"]["G"]["eta"]
    with pytest.raises(ConfigSchemaError) as excinfo:
        config_from_dict(data)
    assert excinfo.value.field_path == "modes.G"
    assert excinfo.value.exit_code == 2


def test_both_coupling_forms_are_rejected(reference_text):
    data = _reference_dict(reference_text)
    data["modes"]["S"]["q_coupling"] = 8e5
    with pytest.raises(ConfigSchemaError, match="modes.S"):
        config_from_dict(data)


def test_unknown_key_is_a_schema_error(reference_text):
    data = _reference_dict(reference_text)
    data["grid"]["resolution"] = 3
    with pytest.raises(ConfigSchemaError) as excinfo:
        config_from_dict(data)
    assert excinfo.value.field_path == "grid.resolution"


def test_wrong_type_is_a_schema_error(reference_text):
    data = _reference_dict(reference_text)
    data["process"]["p_pump"] = "0.1 W"
    with pytest.raises(ConfigSchemaError, match="process.p_pump"):
        config_from_dict(data)


def test_escape_efficiency_above_one_is_physics_error(reference_text):
    data = _reference_dict(reference_text)
    data["modes"]["P"]["eta"] = 1.5
    with pytest.raises(PhysicsError) as excinfo:
        config_from_dict(data)
    assert excinfo.value.exit_code == 3


def test_energy_mismatch_is_physics_error(reference_text):
    data = _reference_dict(reference_text)
    data["modes"]["P"]["wavelength_nm"] = 520.0
    with pytest.raises(PhysicsError, match="energy conservation"):
        config_from_dict(data)


def test_degenerate_energy_mismatch_is_physics_error(reference_text):
    data = _reference_dict(reference_text)
    data["modes"]["T"]["wavelength_nm"] = 510.0
    with pytest.raises(PhysicsError, match="omega_T"):
        config_from_dict(data)


def test_lambda_and_material_constants_are_exclusive(reference_text):
    data = _reference_dict(reference_text)
    data["ring"]["chi3"] = 2e-20
    data["ring"]["a_eff"] = 1e-12
    with pytest.raises(ConfigSchemaError, match="lambda_nl"):
        config_from_dict(data)

    del data["process"]["lambda_nl"]
    config = config_from_dict(data)
    assert config.process().lambda_source == "computed"
    assert "# derived: lambda_nl" in config.to_toml()


def test_scheme_without_its_modes_is_schema_error(reference_text):
    data = _reference_dict(reference_text)
    del data["modes"]["S"]
    with pytest.raises(ConfigSchemaError, match="modes.S"):
        config_from_dict(data)


def test_even_grid_points_are_rejected(reference_text):
    data = _reference_dict(reference_text)
    data["grid"]["points"] = 400
    with pytest.raises(ConfigSchemaError, match="grid.points"):
        config_from_dict(data)


def test_missing_file_and_bad_toml(tmp_path, write_config):
    with pytest.raises(ConfigSchemaError, match="not found"):
        parse_config(tmp_path / "absent.toml")
    with pytest.raises(ConfigSchemaError, match="malformed"):
        parse_config(write_config("[ring\nlength = 1"))


def test_q_generated_override_keeps_escape_efficiency(reference_config):
    updated = reference_config.with_parameter("q_generated", 8e5)
    g_mode = updated.ring.mode(Role.G)
    assert g_mode.q_loaded == 8e5
    assert escape_efficiency(g_mode) == 0.5
    assert half_linewidth(g_mode) == half_linewidth(reference_config.ring.mode(Role.G)) / 2
    assert updated.ring.mode(Role.S) == reference_config.ring.mode(Role.S)


def test_unknown_sweep_parameter(reference_config):
    with pytest.raises(ConfigSchemaError):
        reference_config.with_parameter("temperature", 300.0)


@pytest.mark.parametrize("raw, expected", [("0", -1), ("1", 1), ("6", 6)])
def test_thread_count_from_environment(monkeypatch, raw, expected):
    monkeypatch.setenv("TOPDC_THREADS", raw)
    assert resolve_n_jobs() == expected


def test_invalid_thread_count(monkeypatch):
    monkeypatch.setenv("TOPDC_THREADS", "many")
    with pytest.raises(ConfigSchemaError):
        resolve_n_jobs()


DEGENERATE_ONLY = {
    "ring": {"length": 1.8849555921538758e-4},
    "modes": {
        "F": {"wavelength_nm": 1550.0, "q_loaded": 4.0e5, "eta": 0.5, "n_char": 2.0},
        "T": {"wavelength_nm": 1550.0 / 3, "q_loaded": 6.4e4, "eta": 0.5, "n_char": 2.0},
    },
    "process": {"scheme": "degenerate", "lambda_nl": 6.2, "p_pump": 0.1},
}


def test_degenerate_config_needs_no_pump_section():
    config = config_from_dict(DEGENERATE_ONLY)
    assert config.pump.fwhm is None
    assert "[pump]" not in config.to_toml()
    assert config_from_dict(tomllib.loads(config.to_toml())) == config


def test_explicit_gaussian_pump_still_needs_fwhm():
    data = {**DEGENERATE_ONLY, "pump": {"kind": "gaussian"}}
    with pytest.raises(ConfigSchemaError, match="pump.fwhm"):
        config_from_dict(data)


def test_non_degenerate_config_needs_pump_fwhm(reference_text):
    data = _reference_dict(reference_text)
    del data["pump"]
    with pytest.raises(ConfigSchemaError, match="pump.fwhm"):
        config_from_dict(data)


@pytest.mark.parametrize("points, allow_single", [(0, True), (4, True), (1, False), (2, False)])
def test_invalid_grid_sizes_are_schema_errors(points, allow_single):
    with pytest.raises(ConfigSchemaError) as excinfo:
        check_grid_points(points, "--seed-points", allow_single=allow_single)
    assert excinfo.value.exit_code == 2


def test_explicit_grid_sizes_are_not_replaced_by_defaults(reference_config):
    assert reference_config.seed_grid(1).n_points == 1
    with pytest.raises(ConfigSchemaError, match="--seed-points"):
        reference_config.seed_grid(0)
    with pytest.raises(ConfigSchemaError, match="--pair-points"):
        reference_config.pair_grid(0)


def test_reference_config_flags_assumed_wavelengths(reference_text):
    header = [line for line in reference_text.splitlines() if line.startswith("#")]
    assert any("1550 nm" in line and "Assumed" in line for line in header)
    assert any("1550/3 nm" in line for line in header)


def test_config_load_is_logged_with_status_marker(caplog):
    with caplog.at_level("INFO", logger="core.config"):
        parse_config(REFERENCE_CONFIG)
    assert any(r.getMessage().startswith("✅ Config loaded: reference.toml") for r in caplog.records)
