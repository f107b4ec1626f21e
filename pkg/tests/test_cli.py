import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from phototherm.bath import TruncationWarning
from phototherm.cli import main

DATA = Path(__file__).resolve().parent.parent / "data"
DATASET1 = DATA / "dataset1.conf"
DESK = DATA / "desk.conf"
SVG_NS = "{http://www.w3.org/2000/svg}"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def keyvals(text):
    return {k: v for k, _, v in (line.partition("=") for line in text.splitlines() if "=" in line and " " not in line)}


def polylines(path):
    root = ET.parse(path).getroot()
    assert root.tag == SVG_NS + "svg"
    return root.findall(SVG_NS + "polyline")


def test_sweep_zero_coupling_column(tmp_path, capsys):
    conf = tmp_path / "c.conf"
    conf.write_text(DATASET1.read_text().replace("eta_th_over_gamma = 0.075", "eta_th_over_gamma = 0"))
    code, out, _ = run(["sweep", "--config", conf, "--points", 3], capsys)
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0] == "delta_c_hz,kappa_th_rad_s,kappa_rp_rad_s,kappa_eff_rad_s"
    assert len(rows) == 4
    assert all(float(r.split(",")[1]) == 0 for r in rows[1:])


def test_sweep_dense_extremum(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code, _, _ = run(["sweep", "--config", DATASET1, "--points", 401, "-o", out, "--format", "both"], capsys)
    assert code == 0
    arr = np.loadtxt(out, delimiter=",", skiprows=1)
    assert arr.shape == (401, 4)
    i = int(np.argmin(arr[:, 1]))
    assert i == 188
    assert arr[i, 0] == pytest.approx(-0.3 * 258e6)
    assert arr[i, 1] == pytest.approx(-29.86713186316002, rel=1e-12)
    assert len(polylines(out.with_suffix(".svg"))) == 1


def test_sweep_bad_points(capsys):
    with pytest.raises(SystemExit) as err:
        main(["sweep", "--config", str(DATASET1), "--points", "0"])
    assert err.value.code == 2
    assert "positive" in capsys.readouterr().err


def test_sweep_missing_config(tmp_path, capsys):
    code, _, err = run(["sweep", "--config", tmp_path / "nope.conf"], capsys)
    assert code == 2 and "nope.conf" in err


def test_sweep_bad_config_names_key(tmp_path, capsys):
    conf = tmp_path / "c.conf"
    conf.write_text(DATASET1.read_text().replace("tau_th_s", "tau_th_hz"))
    code, _, err = run(["sweep", "--config", conf], capsys)
    assert code == 2 and "tau_th_hz" in err


def test_sweep_is_deterministic(tmp_path, capsys):
    paths = [tmp_path / f"s{i}.csv" for i in range(3)]
    for p in paths:
        assert run(["sweep", "--config", DATASET1, "-o", p], capsys)[0] == 0
    blobs = {p.read_bytes() for p in paths}
    assert len(blobs) == 1


def test_fit_prints_key_values(tmp_path, capsys):
    svg = tmp_path / "fit.svg"
    code, out, _ = run(["fit", "--config", DATASET1, "--data", DATA / "dataset1_synthetic.csv", "--svg", svg], capsys)
    assert code == 0
    kv = keyvals(out)
    assert set(kv) == {"eta_th_over_gamma", "stderr", "residual_rms", "n_points"}
    assert float(kv["eta_th_over_gamma"]) == pytest.approx(0.075, rel=0.05)
    assert int(kv["n_points"]) == 21
    assert len(polylines(svg)) == 2


def test_fit_unidentifiable_exit_3(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("delta_c_hz,kappa_eff_rad_s\n0,1.8\n0,1.9\n")
    conf = tmp_path / "c.conf"
    conf.write_text(DATASET1.read_text() + "omega_in_mode = zero\n")
    code, _, err = run(["fit", "--config", conf, "--data", data], capsys)
    assert code == 3 and "unidentifiable" in err


def test_fit_malformed_data_exit_2(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("delta_c_hz,kappa_eff_rad_s\n0,1.8\n0,x\n")
    code, _, err = run(["fit", "--config", DATASET1, "--data", data], capsys)
    assert code == 2 and "line 3" in err


def test_validate_default_family(capsys):
    code, out, _ = run(["validate"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert len([l for l in lines if l.startswith("delta_c_hz=")]) == 21
    assert float(keyvals(out)["max_deviation"]) < 0.02


def test_validate_threshold_exit_1(capsys):
    code, out, _ = run(["validate", "--config", DESK, "--points", 5, "--threshold", 1e-9], capsys)
    assert code == 1
    assert float(keyvals(out)["max_deviation"]) > 1e-9


def test_simulate_outputs(tmp_path, capsys):
    out = tmp_path / "ring.csv"
    code, text, _ = run(["simulate", "--config", DESK, "-o", out, "--format", "both"], capsys)
    assert code == 0
    kv = keyvals(text)
    assert float(kv["kappa"]) == pytest.approx(float(kv["kappa_eigen"]), rel=5e-3)
    assert float(kv["omega"]) == pytest.approx(float(kv["omega_eigen"]), rel=1e-6)
    assert out.read_text().splitlines()[0] == "t_s,re_b,im_b,abs_b"
    assert len(polylines(out.with_suffix(".svg"))) == 2


def test_simulate_fast_kernel_matches_instantaneous(tmp_path, capsys):
    conf = tmp_path / "c.conf"
    conf.write_text(DESK.read_text().replace("power_in_w = 2e-07", "power_in_w = 2e-10"))
    _, a, _ = run(["simulate", "--config", conf, "--kernel", "instantaneous"], capsys)
    _, b, _ = run(["simulate", "--config", conf, "--kernel", "exponential", "--tau", 1e-9], capsys)
    ka, kb = float(keyvals(a)["kappa_eigen"]), float(keyvals(b)["kappa_eigen"])
    assert kb == pytest.approx(ka, rel=1e-2)


def test_simulate_bath_kernel(capsys):
    code, out, _ = run(["simulate", "--config", DESK, "--kernel", "bath", "--bath", DATA / "narrow_bath.csv"], capsys)
    assert code == 0
    code, _, err = run(["simulate", "--config", DESK, "--kernel", "bath"], capsys)
    assert code == 2 and "--bath" in err


def test_bath_kernel_verb(tmp_path, capsys):
    out = tmp_path / "k.csv"
    code, text, _ = run(["bath-kernel", "--bath", DATA / "narrow_bath.csv", "-o", out], capsys)
    assert code == 0
    kv = keyvals(text)
    assert float(kv["tau"]) == pytest.approx(1.0, rel=0.05)
    arr = np.loadtxt(out, delimiter=",", skiprows=1)
    assert arr.shape == (2001, 3)


def test_bath_kernel_constant_envelope(tmp_path, capsys):
    bath = tmp_path / "b.csv"
    bath.write_text("kappa_mu_rad_s,omega_mu_rad_s,weight_re,weight_im\n1e-9,0,1,0\n")
    with pytest.warns(TruncationWarning):
        code, _, err = run(["bath-kernel", "--bath", bath, "--t-final", 1.0], capsys)
    assert code == 2 and "decaying" in err


def test_console_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "phototherm", "sweep", "--config", str(DATASET1), "--points", "2"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert len(res.stdout.splitlines()) == 3


def _variant(tmp_path, name, **subs):
    lines = []
    for line in DESK.read_text().splitlines():
        key = line.split("=")[0].strip()
        lines.append(f"{key} = {subs[key]}" if key in subs else line)
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def test_decoupled_validate_and_simulate(tmp_path, capsys):
    conf = _variant(tmp_path, "dec.conf", g0_rad_s=0.0, eta_th_over_gamma=0.0)
    code, out, _ = run(["validate", "--config", conf], capsys)
    assert code == 0 and float(keyvals(out)["max_deviation"]) == 0
    code, out, _ = run(["simulate", "--config", conf], capsys)
    assert code == 0
    assert float(keyvals(out)["kappa"]) == pytest.approx(0.5, rel=1e-6)


def test_simulate_zero_t_final(capsys):
    with pytest.raises(SystemExit) as err:
        main(["simulate", "--config", str(DESK), "--t-final", "0"])
    assert err.value.code == 2


def test_simulate_ambiguous_mode_exit_4(tmp_path, capsys):
    # cavity detuned to 1.05 omega_m puts the optical pair next to the mechanical one
    conf = _variant(tmp_path, "amb.conf", delta_c_rad_s=1.05 * 628.3185307179587)
    code, _, err = run(["simulate", "--config", conf], capsys)
    assert code == 4 and "candidates" in err


def test_bath_kernel_single_mode(tmp_path, capsys):
    bath = tmp_path / "b.csv"
    bath.write_text("kappa_mu_rad_s,omega_mu_rad_s,weight_re,weight_im\n2.5,0,1,0\n")
    code, out, _ = run(["bath-kernel", "--bath", bath], capsys)
    assert code == 0 and float(keyvals(out)["tau"]) == pytest.approx(0.4, rel=1e-9)


def test_bath_kernel_empty_file(tmp_path, capsys):
    bath = tmp_path / "b.csv"
    bath.write_text("")
    code, _, err = run(["bath-kernel", "--bath", bath], capsys)
    assert code == 2 and "empty" in err
