"""End-to-end CLI checks through subprocess invocations."""

import json
import subprocess
import sys

import numpy as np
import pytest


PULSE_POINT_CONFIG = {
    "atom": {
        "omega01_ghz": 7.26,
        "omega12_ghz": 6.38,
        "gamma_rel_10_mhz": 140.0,
        "gamma_rel_21_mhz": 170.0,
        "gamma_coh_10_mhz": 100.0,
        "gamma_coh_21_mhz": 184.0,
    },
    "drive": {"probe_photons": 1e-3, "probe_detuning_mhz": 20.0},
}

LOW_POWER_CONFIG = {
    "atom": {
        "omega01_ghz": 7.1,
        "omega12_ghz": 6.38,
        "gamma_rel_10_mhz": 74.0,
        "gamma_rel_21_mhz": 148.0,
        "gamma_coh_10_mhz": 60.0,
        "gamma_coh_21_mhz": 90.0,
    },
    "drive": {"probe_photons": 1e-3},
}


def run_cli(*args, **kwargs):
    return subprocess.run(
        [sys.executable, "-m", "kerrline.cli", *args],
        capture_output=True, text=True, **kwargs,
    )


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.mark.parametrize(
    "sub", ["steady", "sweep", "kerr", "saturation", "pulse", "fit", "calibrate"]
)
def test_help_exits_zero(sub):
    proc = run_cli(sub, "--help")
    assert proc.returncode == 0
    assert "--" in proc.stdout


def test_steady_extinction(tmp_path):
    cfg = {
        "atom": {
            "omega01_ghz": 7.0,
            "omega12_ghz": 6.0,
            "gamma_rel_10_mhz": 100.0,
            "gamma_rel_21_mhz": 200.0,
            "gamma_coh_10_mhz": 50.0,
            "gamma_coh_21_mhz": 150.0,
        },
        "drive": {"probe_photons": 1e-6},
    }
    proc = run_cli("steady", "--config", write_config(tmp_path, cfg))
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["magnitude"] < 1e-3
    assert payload["t_re"] == pytest.approx(1.0 + payload["r_re"], abs=1e-15)


def test_steady_phase_difference_matches_kerr_pipeline(tmp_path):
    cfg_path = write_config(tmp_path, PULSE_POINT_CONFIG)
    on = run_cli("steady", "--config", cfg_path, "--control-photons", "0.3")
    off = run_cli("steady", "--config", cfg_path, "--control-photons", "0.0")
    assert on.returncode == 0 and off.returncode == 0
    dphi = json.loads(on.stdout)["phase_deg"] - json.loads(off.stdout)["phase_deg"]

    kerr = run_cli("kerr", "--config", cfg_path, "--out", str(tmp_path / "kerr.csv"))
    assert kerr.returncode == 0
    slope = json.loads(kerr.stdout)["slope_deg_per_photon"]
    assert dphi == pytest.approx(0.3 * slope, abs=0.5)
    assert 8.0 <= slope <= 14.0


def test_flag_overrides_config_field(tmp_path):
    cfg_path = write_config(tmp_path, PULSE_POINT_CONFIG)
    # detuning flag moves the probe: +20 MHz from config vs a flag override to 0
    at_detuned = run_cli("steady", "--config", cfg_path)
    on_resonance = run_cli("steady", "--config", cfg_path, "--probe-detuning-mhz", "0")
    assert at_detuned.returncode == 0 and on_resonance.returncode == 0
    mag_det = json.loads(at_detuned.stdout)["magnitude"]
    mag_res = json.loads(on_resonance.stdout)["magnitude"]
    assert mag_res < mag_det  # resonant probe is more strongly extinguished
    # absolute-frequency override beats the detuning field
    absolute = run_cli("steady", "--config", cfg_path, "--probe-freq-ghz", "7.26")
    assert json.loads(absolute.stdout)["magnitude"] == pytest.approx(mag_res, rel=1e-12)


def test_malformed_json_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    proc = run_cli("steady", "--config", str(bad))
    assert proc.returncode == 2
    assert "JSON" in proc.stderr


def test_unknown_key_named_in_error(tmp_path):
    cfg = json.loads(json.dumps(LOW_POWER_CONFIG))
    cfg["atom"]["gamma_mystery_mhz"] = 1.0
    proc = run_cli("steady", "--config", write_config(tmp_path, cfg))
    assert proc.returncode == 2
    assert "gamma_mystery_mhz" in proc.stderr


def test_missing_required_key_exits_2(tmp_path):
    cfg = json.loads(json.dumps(LOW_POWER_CONFIG))
    del cfg["atom"]["omega01_ghz"]
    proc = run_cli("steady", "--config", write_config(tmp_path, cfg))
    assert proc.returncode == 2
    assert "omega01_ghz" in proc.stderr


def test_sweep_single_point(tmp_path):
    cfg = json.loads(json.dumps(LOW_POWER_CONFIG))
    cfg["sweep"] = {
        "freq_start_ghz": 7.1,
        "freq_stop_ghz": 7.2,
        "freq_points": 2,
        "power_start_dbm": -120.0,
        "power_stop_dbm": -119.0,
        "power_points": 2,
    }
    proc = run_cli("sweep", "--config", write_config(tmp_path, cfg))
    assert proc.returncode == 0
    lines = proc.stdout.strip().split("\n")
    assert lines[0] == "freq_hz,power_dbm,ton_re,ton_im,toff_re,toff_im,dt,dphi_deg"
    assert len(lines) == 5


def test_sweep_default_grid_shows_doublet_and_giant_phase_shift(tmp_path):
    proc = run_cli("sweep", "--config", write_config(tmp_path, LOW_POWER_CONFIG))
    assert proc.returncode == 0
    rows = [line.split(",") for line in proc.stdout.strip().split("\n")[1:]]
    assert len(rows) == 201 * 17
    by_power = {}
    for r in rows:
        by_power.setdefault(float(r[1]), []).append(r)
    # the -116 dBm row resolves two transmission minima
    row = by_power[-116.0]
    mags = [abs(complex(float(r[2]), float(r[3]))) for r in row]
    minima = [
        i for i in range(1, len(mags) - 1) if mags[i] < mags[i - 1] and mags[i] < mags[i + 1]
    ]
    assert len(minima) == 2
    # and the map contains phase shifts of at least 25 degrees
    max_dphi = max(float(r[7]) for r in rows)
    assert max_dphi >= 25.0


def test_sweep_deterministic_across_parallelism(tmp_path):
    cfg = json.loads(json.dumps(LOW_POWER_CONFIG))
    cfg["sweep"] = {"freq_points": 31, "power_points": 4}
    cfg["parallelism"] = 1
    out_a = run_cli("sweep", "--config", write_config(tmp_path, cfg, "a.json"))
    cfg["parallelism"] = 4
    out_b = run_cli("sweep", "--config", write_config(tmp_path, cfg, "b.json"))
    assert out_a.returncode == 0 and out_b.returncode == 0
    assert out_a.stdout == out_b.stdout


def test_saturation_summary(tmp_path):
    cfg = json.loads(json.dumps(PULSE_POINT_CONFIG))
    cfg["saturation"] = {"power_points": 16}
    proc = run_cli(
        "saturation", "--config", write_config(tmp_path, cfg),
        "--out", str(tmp_path / "sat.csv"),
    )
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["exponent_phi_vs_power"] == pytest.approx(-2.0, abs=0.2)
    header = (tmp_path / "sat.csv").read_text().splitlines()[0]
    assert header == "p_p_dbm,dphi_deg,delta_q"


def test_pulse_zero_amplitude_flat(tmp_path):
    cfg = json.loads(json.dumps(PULSE_POINT_CONFIG))
    cfg["pulse"] = {"control_photons": 0.0, "points": 200, "duration_ns": 400.0}
    proc = run_cli("pulse", "--config", write_config(tmp_path, cfg))
    assert proc.returncode == 0
    rows = proc.stdout.strip().split("\n")
    assert rows[0] == "t_s,phase_deg"
    phases = {row.split(",")[1] for row in rows[1:]}
    assert len(phases) == 1


def test_calibrate_control_photon_anchor():
    proc = run_cli(
        "calibrate", "--dbm", "-121.4", "--omega-c-ghz", "6.38", "--gamma21-mhz", "170"
    )
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["control"]["mean_photons"] == pytest.approx(1.0, abs=0.01)


def test_calibrate_requires_one_power():
    proc = run_cli("calibrate", "--omega-c-ghz", "6.38", "--gamma21-mhz", "170")
    assert proc.returncode == 2


def test_fit_round_trip_and_exit_codes(tmp_path):
    import kerrline

    atom = kerrline.AtomParams.from_hz(
        omega01=7.1e9, omega12=6.38e9, gamma_rel_10=74e6, gamma_rel_21=148e6,
        gamma_coh_10=60e6, gamma_coh_21=90e6,
    )
    freqs = np.linspace(7.1e9 - 150e6, 7.1e9 + 150e6, 21)
    powers = np.linspace(-136.0, -112.0, 4)
    f, p = np.meshgrid(freqs, powers)
    ds = kerrline.synthesize(atom, f.ravel(), p.ravel(), -140.0, sigma=0.003, seed=12)
    data_path = tmp_path / "data.csv"
    with open(data_path, "w") as fh:
        ds.write_csv(fh)

    cfg = json.loads(json.dumps(LOW_POWER_CONFIG))
    cfg["atom"]["gamma_rel_10_mhz"] = 85.0  # start away from the truth
    cfg["atom"]["gamma_coh_10_mhz"] = 50.0
    cfg["drive"] = {"probe_power_dbm": -140.0}
    cfg["fit"] = {"free": ["gamma_rel_10", "gamma_coh_10", "gamma_coh_21"]}
    proc = run_cli("fit", "--config", write_config(tmp_path, cfg), str(data_path))
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload["status"] == "converged"
    assert payload["params"]["gamma_rel_10"] == pytest.approx(atom.gamma_rel_10, rel=0.05)

    # an underdetermined dataset is a numerical failure: exit 3
    tiny = tmp_path / "tiny.csv"
    tiny.write_text("freq_hz,power_dbm,t_re,t_im,weight\n7.1e9,-120,0.5,0.1,1\n")
    proc = run_cli("fit", "--config", write_config(tmp_path, cfg), str(tiny))
    assert proc.returncode == 3

    # a dataset with a broken header is a validation failure: exit 2
    broken = tmp_path / "broken.csv"
    broken.write_text("a,b,c\n1,2,3\n")
    proc = run_cli("fit", "--config", write_config(tmp_path, cfg), str(broken))
    assert proc.returncode == 2
