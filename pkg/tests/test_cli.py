import pandas as pd
import pytest

from main import main
from tests.conftest import BROAD_CONFIG, REFERENCE_CONFIG


DEGENERATE_ONLY_TOML = """\
[ring]
length = 1.8849555921538758e-4

[modes.F]
wavelength_nm = 1550.0
q_loaded = 4.0e5
eta = 0.5
n_char = 2.0

[modes.T]
wavelength_nm = 516.6666666666666
q_loaded = 6.4e4
eta = 0.5
n_char = 2.0

[process]
scheme = "degenerate"
lambda_nl = 6.2
p_pump = 0.1
"""


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


# ==========================================
# RATES
# ==========================================
def test_rates_table(capsys):
    code, out = _run(capsys, "rates", "--config", str(REFERENCE_CONFIG))
    assert code == 0
    assert "rate_spontaneous_non_degenerate" in out
    assert "rate_stimulated" in out
    assert "p_vac" in out
    assert "q_term" in out


def test_rates_reconcile_lists_quoted_values(capsys, tmp_path):
    prefix = tmp_path / "reference"
    code, out = _run(capsys, "rates", "--config", str(REFERENCE_CONFIG), "--reconcile", "--out", str(prefix))
    assert code == 0
    for quoted in ("0.19 s^-1 W^-1", "1.5e8 s^-1 W^-2", "1.5e5 s^-1"):
        assert quoted in out
    assert "assumptions:" in out
    assert "mode G" in out

    report = pd.read_csv(f"{prefix}_reconcile.csv")
    assert list(report["quantity"]) == ["degenerate_coefficient", "stimulated_coefficient", "stimulated_pairs"]
    rates = pd.read_csv(f"{prefix}_rates.csv")
    stimulated = rates.set_index("quantity")["value"]
    assert stimulated["rate_stimulated"] == pytest.approx(stimulated["rate_stimulated_coefficient"] * 0.1 * 0.01)


def test_degenerate_config_without_pump_section(capsys, write_config):
    path = write_config(DEGENERATE_ONLY_TOML)
    code, out = _run(capsys, "rates", "--config", str(path))
    assert code == 0
    assert "rate_spontaneous_degenerate" in out
    assert "p_vac" not in out

    code, _ = _run(capsys, "jsi", "--config", str(path))
    assert code == 4


def test_rates_report_phase_match_offsets_with_units(capsys, tmp_path):
    prefix = tmp_path / "offsets"
    assert main(["rates", "--config", str(REFERENCE_CONFIG), "--out", str(prefix)]) == 0
    rates = pd.read_csv(f"{prefix}_rates.csv").set_index("quantity")
    assert rates.loc["upsilon", "unit"] == "rad/s"
    assert rates.loc["pump_offset", "unit"] == "rad/s"
    assert rates.loc["rate_stimulated", "unit"] == "1/s"


def test_rates_without_seed_power_omit_stimulated_rows(capsys, reference_text, write_config):
    path = write_config(reference_text.replace("p_seed = 0.01\n", ""))
    code, out = _run(capsys, "rates", "--config", str(path))
    assert code == 0
    assert "rate_spontaneous_non_degenerate" in out
    assert "rate_stimulated" not in out


def test_pulsed_rates_are_mode_misuse(capsys, reference_text, write_config):
    path = write_config(reference_text.replace('pump_kind = "cw"', 'pump_kind = "gaussian"'))
    code, _ = _run(capsys, "rates", "--config", str(path))
    assert code == 4


# ==========================================
# CONFIG ERRORS & ECHO
# ==========================================
def test_schema_error_exit_code(capsys, reference_text, write_config):
    path = write_config(reference_text.replace("[modes.G]\nwavelength_nm = 1550.0\nq_loaded = 4.0e5\neta = 0.5\n",
                                           "[modes.G]\nwavelength_nm = 1550.0\nq_loaded = 4.0e5\n"))
    code, _ = _run(capsys, "rates", "--config", str(path))
    assert code == 2


def test_physics_error_exit_code(capsys, reference_text, write_config):
    path = write_config(reference_text.replace("[modes.P]\nwavelength_nm = 516.6666666666666",
                                           "[modes.P]\nwavelength_nm = 530.0"))
    code, _ = _run(capsys, "rates", "--config", str(path))
    assert code == 3


def test_print_config_feeds_back_to_identical_results(capsys, write_config):
    code, echoed = _run(capsys, "rates", "--config", str(REFERENCE_CONFIG), "--print-config")
    assert code == 0
    assert "eta = 0.5" in echoed

    _, original = _run(capsys, "rates", "--config", str(REFERENCE_CONFIG))
    _, replayed = _run(capsys, "rates", "--config", str(write_config(echoed)))
    assert replayed == original


# ==========================================
# SPECTRAL COMMANDS
# ==========================================
def test_jsi_outputs_are_byte_deterministic(capsys, tmp_path, monkeypatch):
    first, second = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("TOPDC_THREADS", "1")
    code, out = _run(capsys, "jsi", "--config", str(BROAD_CONFIG), "--out", str(first))
    assert code == 0
    assert "converged: true" in out

    monkeypatch.setenv("TOPDC_THREADS", "4")
    assert main(["jsi", "--config", str(BROAD_CONFIG), "--out", str(second)]) == 0
    for suffix in ("_jsi.csv", "_axes.csv", "_schmidt.csv"):
        a = (tmp_path / f"a{suffix}").read_bytes()
        assert a == (tmp_path / f"b{suffix}").read_bytes()

    header = (tmp_path / "a_jsi.csv").read_text().splitlines()
    assert header[0].startswith("# k_min: ")
    assert any(line.startswith("# schmidt_number: ") for line in header)
    rows = [line for line in header if not line.startswith("#")]
    assert len(rows) == 201 and len(rows[0].split(",")) == 201


def test_jsi_with_cw_pump_is_mode_misuse(capsys, reference_text, write_config):
    path = write_config(reference_text.replace('kind = "gaussian"\nfwhm = 10.0e-12', 'kind = "cw"'))
    code, _ = _run(capsys, "jsi", "--config", str(path))
    assert code == 4


def test_single_point_set_scan_matches_jsi(capsys, tmp_path):
    assert main(["jsi", "--config", str(BROAD_CONFIG), "--out", str(tmp_path / "jsi")]) == 0
    assert main([
        "set-scan", "--config", str(BROAD_CONFIG), "--out", str(tmp_path / "scan"),
        "--seed-points", "1", "--pair-points", "201",
    ]) == 0
    assert (tmp_path / "scan_slice_0.csv").read_bytes() == (tmp_path / "jsi_jsi.csv").read_bytes()


def test_set_scan_writes_slices_and_residuals(capsys, tmp_path):
    code, out = _run(
        capsys, "set-scan", "--config", str(BROAD_CONFIG), "--out", str(tmp_path / "scan"),
        "--seed-points", "5", "--pair-points", "31",
    )
    assert code == 0
    assert "marginal_l1_distance" in out
    assert len(list(tmp_path.glob("scan_slice_*.csv"))) == 5
    residuals = pd.read_csv(tmp_path / "scan_residuals.csv", comment="#")
    assert (residuals["status"] == "ok").all()
    assert (residuals["residual"] <= 1e-10).all()


def test_triphoton_writes_marginals(capsys, tmp_path):
    code, _ = _run(capsys, "triphoton", "--config", str(BROAD_CONFIG), "--out", str(tmp_path / "tri"))
    assert code == 0
    k3 = pd.read_csv(tmp_path / "tri_k3_marginal.csv")
    assert len(k3) == 21
    assert (tmp_path / "tri_pair_marginal.csv").exists()


def test_sweep_table(capsys, tmp_path):
    code, out = _run(
        capsys, "sweep", "--config", str(BROAD_CONFIG), "--out", str(tmp_path / "sw"),
        "--parameter", "upsilon", "--values", "0", "1e9",
    )
    assert code == 0
    table = pd.read_csv(tmp_path / "sw_sweep.csv", keep_default_na=False)
    assert list(table["value"]) == [0.0, 1e9]
    assert "schmidt_number" in out


# ==========================================
# CHECK
# ==========================================
def test_check_passes(capsys):
    code, out = _run(capsys, "check")
    assert code == 0
    assert "seed:" in out
    assert "identity" in out and "oracle" in out


def test_injected_fault_is_caught(capsys):
    code, _ = _run(capsys, "check", "--inject-fault")
    assert code == 1


def test_set_scan_bytes_do_not_depend_on_thread_count(capsys, tmp_path, monkeypatch):
    args = ["--config", str(BROAD_CONFIG), "--seed-points", "5", "--pair-points", "31"]
    monkeypatch.setenv("TOPDC_THREADS", "1")
    assert main(["set-scan", "--out", str(tmp_path / "one"), *args]) == 0
    monkeypatch.setenv("TOPDC_THREADS", "4")
    assert main(["set-scan", "--out", str(tmp_path / "four"), *args]) == 0

    suffixes = [f"_slice_{i}.csv" for i in range(5)] + ["_residuals.csv"]
    for suffix in suffixes:
        one = (tmp_path / f"one{suffix}").read_bytes()
        assert one == (tmp_path / f"four{suffix}").read_bytes()


@pytest.mark.parametrize("seed_points", ["0", "4"])
def test_invalid_seed_points_are_schema_errors(capsys, tmp_path, seed_points):
    code, _ = _run(
        capsys, "set-scan", "--config", str(BROAD_CONFIG), "--out", str(tmp_path / "scan"),
        "--seed-points", seed_points, "--pair-points", "31",
    )
    assert code == 2
