import json

import numpy as np
import pytest

from ponderomotive import io
from ponderomotive.cli import main
from ponderomotive.core import MechanicalOscillator, NoiseEnvironment
from ponderomotive.estimation import fit_grid, synthetic_thermal_spectrum


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_synth_writes_one_file_per_angle(tmp_path, capsys):
    code, out, _ = run(capsys, "synth", "--preset", "paper-classical", "--phi=0,-20,-44,-56",
                       "--out", tmp_path)
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["displacement.csv", "spectrum_phi+000p000.csv", "spectrum_phi-020p000.csv",
                     "spectrum_phi-044p000.csv", "spectrum_phi-056p000.csv", "summary.json"]
    summary = json.loads((tmp_path / "summary.json").read_text())
    reports = summary["squeezing"]
    assert reports[0]["min_relative_psd_db"] == pytest.approx(0.0, abs=1e-9)
    for r in reports[1:]:
        assert r["min_relative_psd_db"] < 0 and r["side"] == "above_resonance"
    assert summary["seed"] == 0 and summary["scenario"]["oscillator"]["mass_kg"] == 1.1e-7


def test_positive_angles_dip_on_the_other_side(tmp_path, capsys):
    run(capsys, "synth", "--preset", "paper-classical", "--phi=26,35,45,62", "--out", tmp_path)
    reports = json.loads((tmp_path / "summary.json").read_text())["squeezing"]
    assert all(r["side"] == "below_resonance" and r["min_relative_psd_db"] < 0 for r in reports)


def test_empty_angle_list_writes_nothing(tmp_path, capsys):
    out_dir = tmp_path / "o"
    code, _, err = run(capsys, "synth", "--preset", "paper-quantum", "--phi=", "--out", out_dir)
    assert code == 2 and "empty" in err
    assert not out_dir.exists()


def test_synth_is_byte_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        run(capsys, "synth", "--preset", "paper-quantum", "--measured-noise", "0.05", "--seed", 9,
            "--out", tmp_path / d)
    for name in ("displacement.csv", "spectrum_phi+000p006.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    run(capsys, "synth", "--preset", "paper-quantum", "--measured-noise", "0.05", "--seed", 10,
        "--out", tmp_path / "c")
    assert (tmp_path / "a" / "displacement.csv").read_bytes() != (tmp_path / "c" / "displacement.csv").read_bytes()


def test_budget(tmp_path, capsys):
    code, out, _ = run(capsys, "budget", "--preset", "paper-quantum", "--out", tmp_path)
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert -3.5 < summary["min_total_db"] < -0.5
    header = (tmp_path / "budget.csv").read_text().splitlines()[0].split(",")
    for col in ("total_rel_shot", "loss_vacuum", "bs_vacuum", "laser_amplitude", "laser_frequency", "thermal"):
        assert col in header


def test_budget_json_format(tmp_path, capsys):
    run(capsys, "budget", "--preset", "paper-quantum", "--format", "json", "--out", tmp_path)
    table = json.loads((tmp_path / "budget.json").read_text())
    assert len(table["frequency_hz"]) == len(table["thermal"])


@pytest.mark.parametrize("temperature,verdict", [(4.2, "quantum-dominated"), (300, "thermal-dominated")])
def test_feasibility(capsys, temperature, verdict):
    code, out, _ = run(capsys, "feasibility", "--preset", "paper-quantum", "--format", "json",
                       "--set", f"environment.temperature_k={temperature}")
    result = json.loads(out)
    assert code == 0 and result["verdict"] == verdict
    assert result["margin"] == pytest.approx(result["lhs_n2_per_hz"] / result["rhs_n2_per_hz"], rel=1e-6, abs=0)


def test_sweep_power(tmp_path, capsys):
    code, _, _ = run(capsys, "sweep", "--preset", "paper-quantum", "--axis", "laser.power_mw:2:30:8",
                     "--out", tmp_path)
    assert code == 0
    rows = np.loadtxt(tmp_path / "sweep.csv", delimiter=",", skiprows=1)
    assert np.all(np.diff(rows[:, 0]) > 0)
    assert np.all(np.diff(rows[:, 1]) < 0)
    assert np.all(np.diff(rows[:, 2]) > 0)


def test_single_step_sweep_equals_budget(tmp_path, capsys):
    run(capsys, "sweep", "--preset", "paper-quantum", "--axis", "laser.power_mw:30:30:1", "--out", tmp_path / "s")
    run(capsys, "budget", "--preset", "paper-quantum", "--out", tmp_path / "b")
    row = np.loadtxt(tmp_path / "s" / "sweep.csv", delimiter=",", skiprows=1)
    summary = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert row[1] == summary["min_total_db"]
    assert row[2] == summary["quantum_regime_margin"]


@pytest.mark.parametrize("axis", ["laser.power_mw:2:30:0", "laser.nope:1:2:3", "power:1:2"])
def test_sweep_errors(tmp_path, capsys, axis):
    code, _, err = run(capsys, "sweep", "--preset", "paper-quantum", "--axis", axis, "--out", tmp_path)
    assert code == 2 and err.startswith("error:")


def _spectrum_csv(path):
    osc = MechanicalOscillator.from_frequency(1.1e-7, 249300.0, 5500.0)
    data = synthetic_thermal_spectrum(osc, NoiseEnvironment(300.0), fit_grid(249300.0, 5500.0),
                                      floor=1e-33, noise=0.05, rng=np.random.default_rng(3))
    io.write_displacement_csv(path, data.frequency, data.psd)
    return path


def test_fit_thermal(tmp_path, capsys):
    csv = _spectrum_csv(tmp_path / "in.csv")
    code, out, _ = run(capsys, "fit", csv, "--temperature", 300, "--out", tmp_path)
    assert code == 0
    result = json.loads(out)
    assert result == json.loads((tmp_path / "fit.json").read_text())
    assert result["parameters"]["f_M"] == pytest.approx(249300.0, rel=1e-3, abs=0)
    assert result["parameters"]["Q"] == pytest.approx(5500.0, rel=0.05, abs=0)
    assert result["parameters"]["m"] == pytest.approx(1.1e-7, rel=0.05, abs=0)


def test_fit_driven(tmp_path, capsys):
    from ponderomotive.estimation import synthetic_driven_response

    osc = MechanicalOscillator.from_frequency(9.6e-8, 249300.0, 5500.0)
    f = fit_grid(249300.0, 5500.0)
    mag, ph = synthetic_driven_response(osc, f, 2e-9)
    path = tmp_path / "resp.csv"
    io.write_rows(path, ["frequency_hz", "magnitude_m_per_unit", "phase_rad"], zip(f, mag, ph))
    code, out, _ = run(capsys, "fit", path, "--mode", "driven", "--force-calibration", 2e-9)
    assert code == 0
    assert json.loads(out)["parameters"]["m"] == pytest.approx(9.6e-8, rel=1e-8, abs=0)


def test_fit_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("frequency_hz,psd_m2_per_hz\n" + "".join(f"{10 - i},1\n" for i in range(10)))
    assert run(capsys, "fit", bad, "--temperature", 300)[0] == 2
    flat = tmp_path / "flat.csv"
    flat.write_text("frequency_hz,psd_m2_per_hz\n" + "".join(f"{i + 1},1e-30\n" for i in range(50)))
    assert run(capsys, "fit", flat, "--temperature", 300)[0] == 2
    assert run(capsys, "fit", tmp_path / "missing.csv", "--temperature", 300)[0] == 4
    assert run(capsys, "fit", _spectrum_csv(tmp_path / "ok.csv"))[0] == 2


def test_angle_cal(tmp_path, capsys):
    sweep = tmp_path / "sweep.csv"
    sweep.write_text("offset_v,s_inf\n0,2.0\n0.1,1.5\n-0.1,1.5\n")
    code, out, _ = run(capsys, "angle-cal", sweep, "--out", tmp_path)
    assert code == 0
    rows = (tmp_path / "angle_cal.csv").read_text().splitlines()
    assert rows[0] == "offset_v,phi_abs_rad,phi_signed_deg,ambiguous"
    assert rows[1].endswith(",0") and rows[2].endswith(",1")
    assert float(rows[3].split(",")[2]) == pytest.approx(-30.0, rel=1e-6, abs=0)


def test_config_file_and_io_error(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('preset = "paper-quantum"\n')
    assert run(capsys, "feasibility", "--config", cfg)[0] == 0
    assert run(capsys, "feasibility", "--config", tmp_path / "none.toml")[0] == 4
    assert run(capsys, "feasibility")[0] == 2
