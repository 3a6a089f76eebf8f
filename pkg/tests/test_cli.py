import json

import numpy as np
import pytest

from srlaser import cli
from srlaser.io import read_csv


def run(*argv):
    return cli.main([str(a) for a in argv])


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_pulsed_defaults_show_narrowing_then_saturation(tmp_path):
    assert run("pulsed", "--out", tmp_path) == cli.EXIT_OK
    m = manifest(tmp_path)
    assert {o["path"] for o in m["outputs"]} == {"trajectory.csv", "spectra.csv", "linewidth_vs_time.csv"}
    assert m["command"] == "pulsed" and m["seed"] == 0 and m["wall_clock_s"] >= 0
    meta, cols = read_csv(tmp_path / "linewidth_vs_time.csv")
    assert meta["schema"].startswith("srlaser.")
    t, width = cols["t_s"], cols["hwhm_hz"]
    early = t < 2e-6
    assert np.all(np.diff(width[early]) < 0)
    # Fig. 1 defaults: N g^2 / kappa / 2 pi = 1e3 * 4e3^2 / 2e5 Hz
    assert cols["collective_hz"][-1] == pytest.approx(1e3 * 4e3**2 / 2e5)
    assert 0.5 < width[-1] / cols["collective_hz"][-1] < 2.0


def test_zero_duration_is_a_usage_error(tmp_path):
    assert run("pulsed", "--duration", 0, "--out", tmp_path) == cli.EXIT_USAGE


def test_no_spectrum_lists_one_file(tmp_path):
    assert run("pulsed", "--no-spectrum", "--out", tmp_path) == cli.EXIT_OK
    assert [o["path"] for o in manifest(tmp_path)["outputs"]] == ["trajectory.csv"]


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("g_hz = 3000\nkappa_hz = 1e6\nN = 2e4\ngammaR_hz = 2e5\n")
    assert run("cumulant", "--config", cfg, "--N", 1e5, "--out", tmp_path / "o") == cli.EXIT_OK
    meta, _ = read_csv(tmp_path / "o" / "steady_state.csv")
    assert meta["params_hz"]["N"] == 1e5
    assert meta["params_hz"]["g_hz"] == 3000.0


def test_bad_config_key_is_a_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("g_hz = 3000\ncolour = red\n")
    assert run("cumulant", "--config", cfg, "--out", tmp_path / "o") == cli.EXIT_USAGE
    assert "colour" in capsys.readouterr().err


def test_invalid_parameter_names_the_field(tmp_path, capsys):
    assert run("cumulant", "--kappa-hz", -1, "--out", tmp_path) == cli.EXIT_USAGE
    assert "kappa" in capsys.readouterr().err


def test_numeric_failure_exit_code(tmp_path, capsys):
    assert run("pulsed", "--no-spectrum", "--samples", 100, "--out", tmp_path / "p") == cli.EXIT_OK
    # a window of a few samples is too short for a spectrum
    assert run("spectrum", tmp_path / "p" / "trajectory.csv", "--t-start", 19.5e-6,
               "--out", tmp_path / "s") == cli.EXIT_NUMERIC
    assert "samples" in capsys.readouterr().err


def test_mc_single_realization_is_flagged(tmp_path):
    assert run("mc", "--realizations", 1, "--out", tmp_path) == cli.EXIT_OK
    _, cols = read_csv(tmp_path / "aggregate.csv")
    assert np.all(cols["std"] == 0) and np.all(cols["single_sample"] == 1)


def test_mc_replay_is_identical_across_worker_counts(tmp_path):
    out = tmp_path / "run"
    assert run("mc", "--realizations", 3, "--seed", 12345, "--out", out) == cli.EXIT_OK
    assert run("replay", out / "manifest.json", "--out", tmp_path / "again", "--threads", 2) == cli.EXIT_OK
    assert (out / "aggregate.csv").read_bytes() == (tmp_path / "again" / "aggregate.csv").read_bytes()


def test_replay_detects_changes(tmp_path):
    out = tmp_path / "run"
    assert run("cumulant", "--out", out) == cli.EXIT_OK
    m = manifest(out)
    m["outputs"][0]["sha256"] = "0" * 64
    (out / "manifest.json").write_text(json.dumps(m))
    assert run("replay", out / "manifest.json", "--out", tmp_path / "again") == cli.EXIT_NUMERIC
    assert run("replay", tmp_path / "missing.json") == cli.EXIT_USAGE


def test_phase_diagram_needs_two_axes(tmp_path):
    assert run("phase-diagram", "--axis", "gamma_hz:log:0.01:200:3", "--out", tmp_path) == cli.EXIT_USAGE


def test_small_phase_diagram(tmp_path):
    assert run("phase-diagram", "--axis", "Gamma_hz:log:20:2e4:3", "--axis", "gamma_hz:log:0.01:200:3",
               "--task", "mf-steady", "--out", tmp_path) == cli.EXIT_OK
    _, grid = read_csv(tmp_path / "grid.csv")
    assert len(grid["gamma_hz"]) == 9
    assert set(grid["branch"]) <= {"A", "B"}
    _, boundary = read_csv(tmp_path / "boundary.csv")
    assert len(boundary[list(boundary)[0]]) > 0


def test_spectrum_of_a_continuous_run(tmp_path):
    assert run("continuous", "--samples", 2000, "--out", tmp_path / "c") == cli.EXIT_OK
    assert run("spectrum", tmp_path / "c" / "trajectory.csv", "--out", tmp_path / "s") == cli.EXIT_OK
    outputs = [o["path"] for o in manifest(tmp_path / "s")["outputs"]]
    _, cols = read_csv(tmp_path / "s" / outputs[0])
    assert list(cols)[:2] == ["omega_over_2pi_hz", "intensity_normalized"]
    assert cols["intensity_normalized"].max() == 1.0


def test_fig6_has_large_N_series(tmp_path):
    assert run("figures", "fig6", "--out", tmp_path) == cli.EXIT_OK
    _, cols = read_csv(tmp_path / "sigma.csv")
    above = cols["below_threshold"] == 0
    ratio = cols["sigma"][above][-1] / cols["sigma_largeN"][above][-1]
    assert ratio == pytest.approx(1.0, rel=0.05)
    script = (tmp_path / "fig6.gp").read_text()
    assert "'sigma.csv'" in script


def test_fig7_single_branch(tmp_path):
    assert run("figures", "fig7", "--N", 500, "--out", tmp_path) == cli.EXIT_OK
    assert sorted(o["path"] for o in manifest(tmp_path)["outputs"]) == ["cumulant_N500.csv", "fig7.gp"]


def test_fig4_bundle(tmp_path):
    assert run("figures", "fig4", "--realizations", 2, "--out", tmp_path) == cli.EXIT_OK
    _, mc = read_csv(tmp_path / "mc.csv")
    _, th = read_csv(tmp_path / "theory.csv")
    assert np.all(mc["domega_kappa_over_g2"] > 0)
    assert {"D_kappa_over_g2", "cumulant_domega_kappa_over_g2"} <= set(th)
    script = (tmp_path / "fig4.gp").read_text()
    for name in ("mc.csv", "theory.csv"):
        assert name in script


def test_unknown_figure(tmp_path):
    assert run("figures", "fig9", "--out", tmp_path) == cli.EXIT_USAGE
