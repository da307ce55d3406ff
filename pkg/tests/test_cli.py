import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from aloof import __version__
from aloof.cli import (EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_DEGRADED, EXIT_FORMAT, EXIT_OK, main)
from aloof.csvio import read_csv
from aloof.fringes import FringeImage, write_image
from aloof.optics import load_beamline, path_separation


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def column(rows, header, name):
    return np.array([float(r[header.index(name)]) for r in rows])


# -- models ------------------------------------------------------------------------

def test_models_default_comparison(tmp_path, capsys):
    code, out, _ = run(capsys, "models", "--out", tmp_path)
    assert code == EXIT_OK
    prov, header, rows = read_csv(tmp_path / "comparison.csv")
    models = ["markov", "finite_temperature", "anglin", "machnikowski", "howie"]
    assert header == ["dx_m", "z_m"] + [f"V_{m}" for m in models] + [f"flag_{m}" for m in models]
    assert len(rows) == 40
    assert prov["aloof_version"] == __version__
    assert prov["seed"] == "0" and prov["rel_tol"] == "0.0001"
    for m in models:
        assert (tmp_path / f"curve_{m}_dx9.4um.csv").is_file()
    cprov, _, _ = read_csv(tmp_path / "curve_markov_dx9.4um.csv")
    for key in ("const_hbar", "const_e", "resistivity_ohm_m", "temperature_K",
                "path_separation_m", "surface_offset_m", "beam_voltage_V"):
        assert key in cprov


def test_models_gold_two_separations(tmp_path, capsys):
    code, _, _ = run(capsys, "models", "--material", "gold", "--dx", "9.3um,6.5um",
                     "--model", "anglin,howie", "--out", tmp_path)
    assert code == EXIT_OK
    names = sorted(p.name for p in tmp_path.glob("curve_*.csv"))
    assert names == ["curve_anglin_dx6.5um.csv", "curve_anglin_dx9.3um.csv",
                     "curve_howie_dx6.5um.csv", "curve_howie_dx9.3um.csv"]
    _, header, rows = read_csv(tmp_path / "comparison.csv")
    dx = column(rows, header, "dx_m")
    assert set(dx) == {9.3e-6, 6.5e-6}


def test_models_zero_separation_all_ones(tmp_path, capsys):
    code, _, _ = run(capsys, "models", "--dx", "0um", "--out", tmp_path)
    assert code == EXIT_OK
    _, header, rows = read_csv(tmp_path / "comparison.csv")
    for name in header:
        if name.startswith("V_"):
            assert np.all(column(rows, header, name) == 1.0)


def test_models_nonconvergence_exit_code(tmp_path, capsys, monkeypatch):
    from aloof.decoherence import markov
    tight = replace(markov.DEFAULT_CONFIG, max_subdivisions=10, min_phi_panels=1)
    monkeypatch.setattr(markov, "DEFAULT_CONFIG", tight)
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nmodels = markov\ntol = 1e-15\nabs_tol = 1e-300\n"
                   "[geometry]\nz_points = 3\n")
    code, _, err = run(capsys, "models", "--config", cfg, "--out", tmp_path)
    assert code == EXIT_CONVERGENCE
    assert "did not reach" in err
    _, header, rows = read_csv(tmp_path / "comparison.csv")
    assert all(r[header.index("flag_markov")] for r in rows)


def test_config_error_reports_line(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nseed = 1\n\n[geometry]\nwidth = 3 um\n")
    code, _, err = run(capsys, "models", "--config", cfg, "--out", tmp_path)
    assert code == EXIT_CONFIG
    assert f"{cfg}:5:" in err


@pytest.mark.parametrize("argv", [
    ["models", "--model", "bogus"],
    ["models", "--material", "unobtainium"],
    ["models", "--dx=-3um"],
    ["models", "--dx", "3 parsecs"],
])
def test_config_errors(tmp_path, capsys, argv):
    code, _, err = run(capsys, *argv, "--out", tmp_path)
    assert code == EXIT_CONFIG
    assert "config error" in err


# -- optics -------------------------------------------------------------------------------

def test_optics_reference(tmp_path, capsys):
    code, out, _ = run(capsys, "optics", "--out", tmp_path)
    assert code == EXIT_OK
    line = next(l for l in out.splitlines() if l.strip().startswith("wien"))
    dx = float(line.split()[1])
    assert 1.0 < dx < 10.0
    prov, header, rows = read_csv(tmp_path / "optics_trace.csv")
    assert prov["beam_voltage_V"] == "1000.0"
    assert len(rows) == len(load_beamline().elements) + 1


BEAMLINE = """[beamline]
beam_voltage = 1000 V
[biprism bp]
voltage = {u} V
r_g = 2 mm
r_bp = 0.2 um
[drift d0]
length = 0 m
[marker empty]
[drift d1]
length = 10 cm
[marker end]
"""


def separation_from_output(out, marker):
    line = next(l for l in out.splitlines() if l.strip().startswith(marker + " "))
    return float(line.split()[1])


def test_optics_voltage_doubling_and_empty_drift(tmp_path, capsys):
    a, b = tmp_path / "a.ini", tmp_path / "b.ini"
    a.write_text(BEAMLINE.format(u=1.0))
    b.write_text(BEAMLINE.format(u=2.0))
    _, out_a, _ = run(capsys, "optics", "--config", a)
    _, out_b, _ = run(capsys, "optics", "--config", b)
    assert separation_from_output(out_b, "end") / separation_from_output(out_a, "end") \
        == pytest.approx(2.0, rel=1e-3)
    assert separation_from_output(out_a, "empty") == 0.0
    bl = load_beamline(a)
    assert path_separation(bl, "empty") == 0.0


def test_optics_errors(tmp_path, capsys):
    code, _, err = run(capsys, "optics", "--config", tmp_path / "nope.ini")
    assert code == EXIT_CONFIG
    bad = tmp_path / "bad.ini"
    bad.write_text(BEAMLINE.format(u=1.0).replace("length = 10 cm", "length = far"))
    code, _, err = run(capsys, "optics", "--config", bad)
    assert code == EXIT_CONFIG
    assert f"{bad}:11:" in err


# -- wien ------------------------------------------------------------------------------------

def test_wien_round_trip(tmp_path, capsys):
    code, out, _ = run(capsys, "wien", "--out", tmp_path, "--seed", 3)
    assert code == EXIT_OK
    prov, header, rows = read_csv(tmp_path / "wien_scan.csv")
    est = float(prov["dx_estimate_m"])
    assert abs(est / 2.9e-6 - 1) < 0.02
    # the +-40 meV energy spread alone gives a 10.6% band on the coherence length
    assert float(prov["dx_uncertainty_m"]) / est >= 7 / 66
    assert len(rows) == 41


def test_wien_noise_free_exact(tmp_path, capsys):
    code, _, _ = run(capsys, "wien", "--noise", 0, "--dx", "5um", "--out", tmp_path)
    assert code == EXIT_OK
    prov, _, _ = read_csv(tmp_path / "wien_scan.csv")
    assert float(prov["dx_estimate_m"]) == pytest.approx(5e-6, rel=1e-9)


def test_wien_extraction_failure(tmp_path, capsys):
    cfg = tmp_path / "w.ini"
    cfg.write_text("[wien]\nspan = 0.05\nnoise = 0\n")
    code, _, err = run(capsys, "wien", "--config", cfg, "--out", tmp_path)
    assert code == EXIT_DEGRADED
    assert "extraction failed" in err


# -- pipeline / analyze --------------------------------------------------------------------------

def test_pipeline_byte_determinism(tmp_path, capsys):
    for d in ("a", "b"):
        assert run(capsys, "pipeline", "--model", "anglin", "--material", "gold",
                   "--seed", 7, "--out", tmp_path / d)[0] == EXIT_OK
    for name in ("image.pgm", "image.meta", "curve.csv", "profile.csv", "comparison.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    run(capsys, "pipeline", "--model", "anglin", "--material", "gold", "--seed", 8,
        "--out", tmp_path / "c")
    assert (tmp_path / "a" / "image.pgm").read_bytes() != (tmp_path / "c" / "image.pgm").read_bytes()


def test_pipeline_unit_visibility(tmp_path, capsys):
    code, _, _ = run(capsys, "pipeline", "--model", "constant", "--out", tmp_path)
    assert code == EXIT_OK
    prov, header, rows = read_csv(tmp_path / "profile.csv")
    c = column(rows, header, "contrast")
    s = column(rows, header, "sigma")
    assert np.all(np.abs(c - 1) <= 4 * s)
    assert prov["normalized"] == "true"


def test_pipeline_comparison_summary(tmp_path, capsys):
    code, out, _ = run(capsys, "pipeline", "--model", "anglin", "--material", "gold",
                       "--dx", "9.3um", "--out", tmp_path)
    assert code == EXIT_OK
    prov, header, _ = read_csv(tmp_path / "comparison.csv")
    assert float(prov["max_abs_deviation_normalized_model"]) <= 0.05
    assert header == ["z_m", "contrast", "sigma", "V_model", "V_model_normalized", "flag"]
    assert prov["aloof_version"] == __version__


def test_analyze_matches_pipeline(tmp_path, capsys):
    run(capsys, "pipeline", "--model", "anglin", "--material", "gold", "--out", tmp_path / "p")
    code, _, _ = run(capsys, "analyze", tmp_path / "p" / "image.pgm", "--out", tmp_path / "a")
    assert code == EXIT_OK
    _, h1, r1 = read_csv(tmp_path / "p" / "profile.csv")
    _, h2, r2 = read_csv(tmp_path / "a" / "profile.csv")
    assert h1 == h2 and r1 == r2


def test_analyze_truncated_and_missing(tmp_path, capsys):
    run(capsys, "pipeline", "--model", "constant", "--out", tmp_path)
    img = tmp_path / "image.pgm"
    cut = tmp_path / "cut.pgm"
    cut.write_bytes(img.read_bytes()[:5000])
    (tmp_path / "cut.meta").write_text((tmp_path / "image.meta").read_text())
    code, _, err = run(capsys, "analyze", cut, "--out", tmp_path / "x")
    assert code == EXIT_FORMAT
    assert "truncated" in err
    code, _, _ = run(capsys, "analyze", tmp_path / "none.pgm")
    assert code == EXIT_FORMAT
    code, _, _ = run(capsys, "analyze", img, "--sidecar", tmp_path / "none.meta")
    assert code == EXIT_FORMAT


def test_analyze_null_image_degraded(tmp_path, capsys):
    rng = np.random.default_rng(4)
    path = write_image(FringeImage(rng.poisson(15.6, (160, 200)), 1e-6, 0.25e-6, 0.125e-6),
                       tmp_path / "flat.pgm")
    code, _, err = run(capsys, "analyze", path, "--out", tmp_path)
    assert code == EXIT_DEGRADED
    _, header, rows = read_csv(tmp_path / "profile.csv")
    assert {r[header.index("flag")] for r in rows} == {"no_periodicity"}


def test_analyze_with_shear_option(tmp_path, capsys):
    run(capsys, "pipeline", "--model", "constant", "--out", tmp_path)
    code, _, _ = run(capsys, "analyze", tmp_path / "image.pgm", "--shear", "0,0",
                     "--no-normalize", "--out", tmp_path / "s")
    assert code == EXIT_OK
    prov, _, _ = read_csv(tmp_path / "s" / "profile.csv")
    assert prov["normalized"] == "false"


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "aloof.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert __version__ in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "aloof.cli", "optics", "--config",
                           str(tmp_path / "missing.ini")], capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
